"""Win-rate tournament harness.

Policies are pitted head to head: each round draws a user, samples one
alternative from each policy at the user's embedding, and scores 1/0.5/0 by
the user's true distance preference (ties and identical picks score half).
Rounds are paired with common random numbers and evaluated in both sampling
orders, which makes win_rate(a, b) + win_rate(b, a) = 1 exactly and self-play
exactly one half.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import social_choice
from .environment import Environment, UserPoint, atom_margin_matrix, global_margin_matrix
from .online import Policy, Transcript


@dataclass
class WinRateReport:
    opponent: str
    split: str  # "train" or "validation"
    n_rounds: int
    rate: float
    std_error: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("win rate out of [0, 1]")
        if self.n_rounds <= 0:
            raise ValueError("n_rounds must be positive")


@dataclass
class TablePolicy:
    """Per-atom lottery table with a global fallback for unpopulated atoms."""

    env: Environment
    lotteries: Dict[int, np.ndarray]
    fallback: np.ndarray

    def lottery(self, embedding: np.ndarray) -> np.ndarray:
        atom = self.env.atom_of_embedding(np.asarray(embedding))
        return self.lotteries.get(atom, self.fallback)

    def lottery_for_atom(self, atom: int) -> np.ndarray:
        return self.lotteries.get(atom, self.fallback)


def _point_mass(index: int, n: int) -> np.ndarray:
    p = np.zeros(n)
    p[index] = 1.0
    return p


def adaptive_maximal_lottery_policy(env: Environment) -> TablePolicy:
    """Exact per-atom maximal lotteries on training users (the skyline)."""
    global_ml = social_choice.maximal_lottery(global_margin_matrix(env))
    lotteries = {}
    for atom in range(env.grid.n_cells):
        if env.atom_train_users(atom):
            lotteries[atom] = social_choice.maximal_lottery(atom_margin_matrix(env, atom))
    return TablePolicy(env=env, lotteries=lotteries, fallback=global_ml)


def adaptive_borda_policy(env: Environment) -> TablePolicy:
    """Per-atom point mass on the tournament-Borda winner."""
    n = env.n_alternatives
    global_winner = social_choice.borda_winner(global_margin_matrix(env))
    lotteries = {}
    for atom in range(env.grid.n_cells):
        if env.atom_train_users(atom):
            winner = social_choice.borda_winner(atom_margin_matrix(env, atom))
            lotteries[atom] = _point_mass(winner, n)
    return TablePolicy(env=env, lotteries=lotteries, fallback=_point_mass(global_winner, n))


def global_borda_policy(env: Environment) -> TablePolicy:
    n = env.n_alternatives
    winner = social_choice.borda_winner(global_margin_matrix(env))
    return TablePolicy(env=env, lotteries={}, fallback=_point_mass(winner, n))


def _per_user_lotteries(policy: Policy, env: Environment, users: Sequence[UserPoint]) -> np.ndarray:
    """(n_users, A) lottery table, computed once per distinct atom."""
    atoms = np.array([env.atom_of(u) for u in users])
    table = np.empty((len(users), env.n_alternatives))
    for atom in np.unique(atoms):
        p = np.asarray(policy.lottery(env.atom_embedding(int(atom))), dtype=float)
        if p.shape != (env.n_alternatives,) or not social_choice.is_lottery(p, 1e-6):
            raise ValueError("policy returned an invalid lottery")
        table[atoms == atom] = p
    return table


def _sample_rows(lotteries: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Inverse-CDF categorical sample per row given one uniform per row."""
    cum = np.cumsum(lotteries, axis=1)
    r = xi * cum[:, -1]
    picks = (cum < r[:, None]).sum(axis=1)
    return np.minimum(picks, lotteries.shape[1] - 1)


def _scores(a: np.ndarray, b: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """1 if a strictly nearer, 0 if b strictly nearer, 0.5 on equality."""
    rows = np.arange(a.shape[0])
    da = dist[rows, a]
    db = dist[rows, b]
    s = np.where(da < db, 1.0, np.where(da > db, 0.0, 0.5))
    return np.where(a == b, 0.5, s)


def win_rate(
    policy_a: Policy,
    policy_b: Policy,
    users: Sequence[UserPoint],
    env: Environment,
    n_rounds: int = 50_000,
    rng: Optional[np.random.Generator] = None,
    opponent: str = "opponent",
    split: str = "train",
) -> WinRateReport:
    """Empirical win rate of policy_a over policy_b on the given users."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if not users:
        raise ValueError("empty user list")
    if rng is None:
        rng = np.random.default_rng(0)
    lot_a = _per_user_lotteries(policy_a, env, users)
    lot_b = _per_user_lotteries(policy_b, env, users)
    dist = env.distances(users)
    idx = rng.integers(0, len(users), size=n_rounds)
    xi1 = rng.random(n_rounds)
    xi2 = rng.random(n_rounds)
    # Both variate assignments per round: swapping the policies then yields
    # the same realized pairs with roles reversed, so rates sum to 1 exactly.
    s1 = _scores(_sample_rows(lot_a[idx], xi1), _sample_rows(lot_b[idx], xi2), dist[idx])
    s2 = _scores(_sample_rows(lot_a[idx], xi2), _sample_rows(lot_b[idx], xi1), dist[idx])
    scores = 0.5 * (s1 + s2)
    rate = float(scores.mean())
    se = float(np.sqrt(max(rate * (1.0 - rate), 0.0) / n_rounds))
    return WinRateReport(opponent=opponent, split=split, n_rounds=n_rounds, rate=rate, std_error=se)


def online_win_rate_curve(
    transcript: Transcript,
    skyline: Policy,
    env: Environment,
    window: int,
    rng: Optional[np.random.Generator] = None,
) -> List[Tuple[int, float]]:
    """Windowed win rate of the recorded urn lotteries against a skyline.

    Each transcript step contributes one paired head-to-head round between
    p_t and skyline(phi(u_t)), scored by the true sampled user.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(transcript)
    if window > n:
        raise ValueError("window exceeds transcript length")
    if rng is None:
        rng = np.random.default_rng(0)
    probs = transcript.probs()
    users = [env.user_by_id(int(uid)) for uid in transcript.user_ids()]
    opp = np.vstack(
        [np.asarray(skyline.lottery(r.embedding), dtype=float) for r in transcript.records]
    )
    dist = env.distances(users)
    xi1 = rng.random(n)
    xi2 = rng.random(n)
    s1 = _scores(_sample_rows(probs, xi1), _sample_rows(opp, xi2), dist)
    s2 = _scores(_sample_rows(probs, xi2), _sample_rows(opp, xi1), dist)
    scores = 0.5 * (s1 + s2)
    curve = []
    for lo in range(0, n - window + 1, window):
        t_end = transcript.records[lo + window - 1].step
        curve.append((t_end, float(scores[lo : lo + window].mean())))
    return curve


def curve_to_csv(curve: Sequence[Tuple[int, float]], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "win_rate"])
        for t, rate in curve:
            writer.writerow([t, "%.17g" % rate])


def table_report(
    env: Environment,
    policy: Policy,
    opponents: Dict[str, Policy],
    n_rounds: int = 50_000,
    seed: int = 0,
) -> List[WinRateReport]:
    """Distilled-policy win rates against each opponent on both user splits."""
    if not opponents:
        raise ValueError("need at least one opponent")
    rows = []
    for name, opponent in opponents.items():
        for split, users in (("train", env.train_users), ("validation", env.validation_users)):
            if not users:
                continue
            rng = np.random.default_rng(
                np.random.SeedSequence([seed, zlib.crc32(name.encode()), len(split)])
            )
            rows.append(
                win_rate(
                    policy,
                    opponent,
                    users,
                    env,
                    n_rounds=n_rounds,
                    rng=rng,
                    opponent=name,
                    split=split,
                )
            )
    return rows


def report_to_csv(rows: Sequence[WinRateReport], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["opponent", "split", "n_rounds", "win_rate", "std_error"])
        for r in rows:
            writer.writerow([r.opponent, r.split, r.n_rounds, "%.17g" % r.rate, "%.17g" % r.std_error])


def load_report_csv(path: str) -> List[WinRateReport]:
    rows = []
    with open(path, newline="") as fh:
        for line in csv.DictReader(fh):
            rows.append(
                WinRateReport(
                    opponent=line["opponent"],
                    split=line["split"],
                    n_rounds=int(line["n_rounds"]),
                    rate=float(line["win_rate"]),
                    std_error=float(line["std_error"]),
                )
            )
    return rows


def format_report(rows: Sequence[WinRateReport]) -> str:
    lines = [f"{'opponent':<28} {'split':<12} {'rounds':>8} {'win rate':>9} {'std err':>8}"]
    for r in rows:
        lines.append(
            f"{r.opponent:<28} {r.split:<12} {r.n_rounds:>8d} {r.rate:>9.4f} {r.std_error:>8.4f}"
        )
    return "\n".join(lines)
