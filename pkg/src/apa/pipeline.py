"""End-to-end experiment runner.

Generates an environment, runs the online neural-urn learner, distills the
transcript into a softmax policy, evaluates it against the per-atom exact
solutions, and writes every artifact plus a MANIFEST with seeds and file
hashes. Reruns with the same config produce byte-identical numeric
artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from typing import Dict

from . import environment as env_mod
from . import evaluation, neural, online
from .config import ExperimentConfig, config_to_dict, derive_seed, stage_rng

log = logging.getLogger("apa")

MANIFEST_VERSION = 1

ARTIFACTS = {
    "config": "config.json",
    "environment": "environment.json",
    "urn_model": "model_urn.txt",
    "transcript": "transcript.csv",
    "distilled_model": "model_distilled.txt",
    "curve": "curve.csv",
    "report_csv": "report.csv",
    "report_txt": "report.txt",
}


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message carries the stage name."""


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _stage(name: str):
    def wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - stage tagging
            raise PipelineError(f"[{name}] {exc}") from exc

    return wrap


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run every stage; returns the artifact directory."""
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    paths = {k: os.path.join(outdir, v) for k, v in ARTIFACTS.items()}

    with open(paths["config"], "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=1)

    log.info("generating environment")
    env_seed = derive_seed(cfg.master_seed, "environment")
    env = _stage("environment")(
        env_mod.gen_environment, cfg.environment, stage_rng(cfg.master_seed, "environment"), env_seed
    )
    env_mod.save_environment(env, paths["environment"])

    log.info("training the neural urn (%d steps)", cfg.apa_config(env).n_steps)
    apa_cfg = cfg.apa_config(env)
    params, transcript = _stage("apa")(online.apa_train, apa_cfg, env)
    neural.save_params(params, paths["urn_model"])
    online.transcript_to_csv(
        transcript, paths["transcript"], atom_of=env.atom_of_embedding
    )

    log.info("distilling the transcript")
    distill_cfg = dataclasses.replace(cfg.distill, seed=derive_seed(cfg.master_seed, "distill"))
    distilled = _stage("distill")(online.distill, transcript, distill_cfg)
    neural.save_params(distilled, paths["distilled_model"])

    log.info("computing the skyline and online curve")
    skyline = _stage("skyline")(evaluation.adaptive_maximal_lottery_policy, env)
    curve = _stage("curve")(
        evaluation.online_win_rate_curve,
        transcript,
        skyline,
        env,
        cfg.evaluation.curve_window,
        stage_rng(cfg.master_seed, "curve"),
    )
    evaluation.curve_to_csv(curve, paths["curve"])

    log.info("evaluating win rates")
    opponents: Dict[str, online.Policy] = {
        "adaptive_maximal_lottery": skyline,
        "adaptive_borda": evaluation.adaptive_borda_policy(env),
        "global_borda": evaluation.global_borda_policy(env),
    }
    rows = _stage("eval")(
        evaluation.table_report,
        env,
        online.policy_of(distilled),
        opponents,
        cfg.evaluation.n_rounds,
        derive_seed(cfg.master_seed, "eval"),
    )
    evaluation.report_to_csv(rows, paths["report_csv"])
    with open(paths["report_txt"], "w") as fh:
        fh.write(evaluation.format_report(rows) + "\n")

    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "master_seed": cfg.master_seed,
        "stage_seeds": {
            stage: derive_seed(cfg.master_seed, stage)
            for stage in ("environment", "apa", "distill", "curve", "eval")
        },
        "files": {name: _sha256(path) for name, path in paths.items()},
    }
    with open(os.path.join(outdir, "MANIFEST.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    log.info("artifacts written to %s", outdir)
    return outdir
