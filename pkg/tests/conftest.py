"""Shared fixtures: small environments and experiment configs that run fast."""

import numpy as np
import pytest

from apa import environment as env_mod
from apa.config import DistillConfig, EvalConfig, ExperimentConfig, derive_seed, stage_rng
from apa.environment import EnvConfig


def make_small_env(seed: int = 0, **overrides) -> env_mod.Environment:
    defaults = dict(
        n_alternatives=4,
        n_train_users=200,
        n_validation_users=50,
        grid_k=2,
        user_distribution="uniform",
    )
    defaults.update(overrides)
    cfg = EnvConfig(**defaults)
    return env_mod.gen_environment(cfg, np.random.default_rng(seed), seed)


def make_small_experiment(master_seed: int, output_dir: str) -> ExperimentConfig:
    """A few-second end-to-end config for pipeline and CLI tests."""
    return ExperimentConfig(
        master_seed=master_seed,
        output_dir=output_dir,
        environment=EnvConfig(
            n_alternatives=4,
            n_train_users=150,
            n_validation_users=40,
            grid_k=2,
            user_distribution="uniform",
        ),
        apa={
            "n_steps": 1500,
            "warm_start_iters": 300,
            "hidden_sizes": (),
            "input_scale": 4.0,
            "mutation_rate": 0.1,
            "learning_rate": 0.01,
        },
        distill=DistillConfig(epochs=2, burn_in_fraction=0.5),
        evaluation=EvalConfig(n_rounds=2000, curve_window=300),
    )


@pytest.fixture(scope="session")
def small_env():
    return make_small_env(seed=3)
