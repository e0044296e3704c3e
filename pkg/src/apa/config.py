"""Experiment configuration: strict JSON schema and deterministic seeding.

A single JSON document drives the whole pipeline. Unknown keys are rejected
so a config file always means what it says. The master seed is hashed
together with a stage name into per-stage seeds, so adding a stage never
perturbs the randomness of earlier ones.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .environment import EnvConfig, GaussianCluster
from .online import ApaConfig, DistillConfig
from .urn import UrnConfig

CONFIG_SCHEMA_VERSION = 1


def derive_seed(master_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stage_rng(master_seed: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stage))


@dataclass
class EvalConfig:
    n_rounds: int = 50_000
    curve_window: int = 2000

    def __post_init__(self):
        if self.n_rounds < 1 or self.curve_window < 1:
            raise ValueError("evaluation sizes must be positive")


@dataclass
class ExperimentConfig:
    master_seed: int = 0
    output_dir: str = "artifacts"
    environment: EnvConfig = field(default_factory=EnvConfig)
    urn: UrnConfig = field(default_factory=lambda: UrnConfig(n_alternatives=8))
    apa: Dict[str, Any] = field(default_factory=dict)  # overrides for ApaConfig
    distill: DistillConfig = field(default_factory=DistillConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def apa_config(self, env) -> ApaConfig:
        return ApaConfig(
            n_alternatives=env.n_alternatives,
            embedding_dim=env.embedding_dim,
            seed=derive_seed(self.master_seed, "apa"),
            **self.apa,
        )


def _from_dict(cls, data: Dict[str, Any], path: str):
    if not isinstance(data, dict):
        raise ValueError(f"config section {path!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown config keys in {path!r}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    doc = dict(doc)
    version = doc.pop("schema_version", None)
    if version != CONFIG_SCHEMA_VERSION:
        raise ValueError(f"config schema_version must be {CONFIG_SCHEMA_VERSION}")
    known = {
        "master_seed",
        "output_dir",
        "environment",
        "urn",
        "apa",
        "distill",
        "evaluation",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    env_doc = dict(doc.get("environment", {}))
    clusters = env_doc.pop("clusters", None)
    env_cfg = _from_dict(EnvConfig, env_doc, "environment")
    if clusters is not None:
        env_cfg.clusters = [_from_dict(GaussianCluster, c, "environment.clusters") for c in clusters]
    if "box" in env_doc:
        env_cfg.box = tuple(env_cfg.box)
    apa_doc = dict(doc.get("apa", {}))
    apa_allowed = {
        "urn_scale",
        "mutation_rate",
        "learning_rate",
        "n_steps",
        "warm_start_iters",
        "warm_start_learning_rate",
        "input_scale",
        "hidden_sizes",
    }
    unknown = set(apa_doc) - apa_allowed
    if unknown:
        raise ValueError(f"unknown config keys in 'apa': {sorted(unknown)}")
    if "hidden_sizes" in apa_doc:
        apa_doc["hidden_sizes"] = tuple(apa_doc["hidden_sizes"])
    distill_doc = dict(doc.get("distill", {}))
    if "hidden_sizes" in distill_doc:
        distill_doc["hidden_sizes"] = tuple(distill_doc["hidden_sizes"])
    return ExperimentConfig(
        master_seed=doc.get("master_seed", 0),
        output_dir=doc.get("output_dir", "artifacts"),
        environment=env_cfg,
        urn=_from_dict(UrnConfig, doc.get("urn", {"n_alternatives": 8}), "urn"),
        apa=apa_doc,
        distill=_from_dict(DistillConfig, distill_doc, "distill"),
        evaluation=_from_dict(EvalConfig, doc.get("evaluation", {}), "evaluation"),
    )


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    env = dataclasses.asdict(cfg.environment)
    env["box"] = list(env["box"])
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "master_seed": cfg.master_seed,
        "output_dir": cfg.output_dir,
        "environment": env,
        "urn": dataclasses.asdict(cfg.urn),
        "apa": dict(cfg.apa),
        "distill": dataclasses.asdict(cfg.distill),
        "evaluation": dataclasses.asdict(cfg.evaluation),
    }


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=1)


def default_config(master_seed: int = 0, output_dir: str = "artifacts") -> ExperimentConfig:
    """Polarized planar environment plus the tuned online-urn hyperparameters.

    With one-hot embeddings the urn net is a ReLU-headed linear map
    (no hidden layers): each atom's urn lives in its own weight row, which
    keeps the per-atom dynamics decoupled and stable. input_scale=4 shrinks
    the shared-bias coupling; mutation_rate=0.1 keeps every alternative's
    mass above the clamp line so urn mass stays bounded.
    """
    return ExperimentConfig(
        master_seed=master_seed,
        output_dir=output_dir,
        environment=EnvConfig(user_distribution="polarized", cluster_sigma=0.015),
        apa={
            "mutation_rate": 0.1,
            "learning_rate": 0.01,
            "input_scale": 4.0,
            "hidden_sizes": (),
            "n_steps": 300_000,
        },
        distill=DistillConfig(burn_in_fraction=0.5),
    )
