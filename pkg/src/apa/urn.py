"""Tabular urn process: finite-population pairwise-comparison dynamics.

The urn holds N balls, each labeled with an alternative. Each step samples
two balls and a voter; the losing ball is relabeled to the winner. A small
mutation rate relabels a random ball to a random alternative, keeping the
chain ergodic. The time-averaged composition approximates the maximal
lottery of the electorate.

The urn is stored as a counts vector: sampling a ball is a categorical draw
proportional to counts, which is distributionally identical to an explicit
ball array.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .social_choice import PreferenceOracle

UserSampler = Callable[[np.random.Generator], object]


@dataclass
class UrnConfig:
    n_alternatives: int
    n_balls: int = 100
    mutation_rate: float = 0.01

    def __post_init__(self):
        if self.n_balls < 1:
            raise ValueError("n_balls must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.n_alternatives < 1:
            raise ValueError("need at least one alternative")


@dataclass
class UrnTrajectory:
    """Per-step ball counts; row t is the state after step t+1."""

    initial: np.ndarray
    snapshots: np.ndarray  # (n_steps, n_alternatives) ints
    n_balls: int = field(default=0)

    def __post_init__(self):
        if self.n_balls == 0:
            self.n_balls = int(self.initial.sum())

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0]


def urn_init(n_balls: int, n_alternatives: int, rng: np.random.Generator) -> np.ndarray:
    """N balls, each assigned a uniformly random alternative."""
    if n_balls < 1:
        raise ValueError("n_balls must be >= 1")
    labels = rng.integers(0, n_alternatives, size=n_balls)
    return np.bincount(labels, minlength=n_alternatives).astype(np.int64)


def _sample_ball(counts: np.ndarray, rng: np.random.Generator) -> int:
    """Alternative of a uniformly drawn ball (categorical on counts)."""
    r = rng.random() * counts.sum()
    return int(np.searchsorted(np.cumsum(counts), r, side="right"))


def urn_step(
    counts: np.ndarray,
    oracle: PreferenceOracle,
    user_sampler: UserSampler,
    mutation_rate: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One comparison step plus optional mutation; ball count is conserved."""
    counts = counts.copy()
    a_i = _sample_ball(counts, rng)
    a_j = _sample_ball(counts, rng)
    user = user_sampler(rng)
    if a_i != a_j:
        winner = oracle(user, a_i, a_j)
        loser = a_j if winner == a_i else a_i
        counts[loser] -= 1
        counts[winner] += 1
    if rng.random() < mutation_rate:
        ball = _sample_ball(counts, rng)
        target = int(rng.integers(0, counts.shape[0]))
        counts[ball] -= 1
        counts[target] += 1
    return counts


def urn_run(
    config: UrnConfig,
    n_steps: int,
    oracle: PreferenceOracle,
    user_sampler: UserSampler,
    rng: np.random.Generator,
) -> UrnTrajectory:
    """Run n_steps sequential urn steps from a fresh random urn."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    counts = urn_init(config.n_balls, config.n_alternatives, rng)
    initial = counts.copy()
    snapshots = np.empty((n_steps, config.n_alternatives), dtype=np.int64)
    for t in range(n_steps):
        counts = urn_step(counts, oracle, user_sampler, config.mutation_rate, rng)
        snapshots[t] = counts
    return UrnTrajectory(initial=initial, snapshots=snapshots)


def time_average(traj: UrnTrajectory, burn_in: int) -> np.ndarray:
    """Mean normalized composition over steps after burn_in; a valid lottery."""
    if burn_in >= traj.n_steps:
        raise ValueError("burn_in must be smaller than the number of steps")
    avg = traj.snapshots[burn_in:].mean(axis=0) / traj.n_balls
    return avg


def trajectory_to_csv(traj: UrnTrajectory, path: str) -> None:
    """Step-indexed CSV: step, count_0, ..., count_{A-1}. Step 0 is the initial urn."""
    n = traj.initial.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"count_{a}" for a in range(n)])
        writer.writerow([0] + [int(c) for c in traj.initial])
        for t in range(traj.n_steps):
            writer.writerow([t + 1] + [int(c) for c in traj.snapshots[t]])
