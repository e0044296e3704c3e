"""Margin matrices and exact solvers: Condorcet, Borda, maximal lotteries.

A margin matrix m is skew-symmetric with m[i, j] = P(i beats j) - P(j beats i)
over a population of voters. The maximal lottery is an optimal mixed strategy
of the symmetric zero-sum game with payoff matrix m.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

# Oracle contract: oracle(user, i, j) -> index of the winning alternative
# (either i or j), for distinct alternative indices i != j.
PreferenceOracle = Callable[[object, int, int], int]


class SolverError(RuntimeError):
    """LP solver failed to produce a verified equilibrium."""


def _check_skew(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("margin matrix must be square")
    if not np.allclose(m, -m.T, atol=1e-9):
        raise ValueError("margin matrix must be skew-symmetric")
    return m


def is_lottery(p: np.ndarray, tol: float = 1e-9) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(p.ndim == 1 and np.all(p >= -tol) and abs(p.sum() - 1.0) <= tol)


def margin_matrix(
    n_alternatives: int,
    users: Sequence[object],
    oracle: PreferenceOracle,
) -> np.ndarray:
    """Empirical majority-margin matrix over a finite electorate.

    m[i][j] = (#users preferring i - #users preferring j) / #users.
    """
    if len(users) == 0:
        raise ValueError("empty electorate")
    n = n_alternatives
    m = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        wins_i = sum(1 for u in users if oracle(u, i, j) == i)
        margin = (2 * wins_i - len(users)) / len(users)
        m[i, j] = margin
        m[j, i] = -margin
    return m


def condorcet_winner(m: np.ndarray) -> Optional[int]:
    """Alternative beating every other strictly, or None.

    Weak winners (some zero margin) are not reported.
    """
    m = _check_skew(m)
    n = m.shape[0]
    for i in range(n):
        if all(m[i, j] > 0 for j in range(n) if j != i):
            return i
    return None


def borda_scores(m: np.ndarray) -> np.ndarray:
    """Tournament Borda: row sums of the margin matrix."""
    m = _check_skew(m)
    return m.sum(axis=1)


def borda_winner(m: np.ndarray) -> int:
    """Argmax of the Borda scores, lowest index on ties."""
    return int(np.argmax(borda_scores(m)))


def verify_maximal(m: np.ndarray, p: np.ndarray, tol: float) -> bool:
    """True iff lottery p weakly beats every pure alternative: min_j (p'm)_j >= -tol."""
    m = np.asarray(m, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.shape != (m.shape[0],):
        raise ValueError("lottery dimension does not match matrix")
    return bool((p @ m).min() >= -tol)


def maximal_lottery(m: np.ndarray) -> np.ndarray:
    """Maximal lottery of a skew-symmetric margin matrix via a dense simplex LP.

    Solves max v s.t. (p'm)_j >= v for all j, p in the simplex. By
    skew-symmetry the optimum value is 0 and p is an equilibrium strategy of
    the symmetric zero-sum game m.
    """
    m = _check_skew(m)
    n = m.shape[0]
    if n == 1:
        return np.array([1.0])
    # Shift to a strictly positive game; the equilibrium set is unchanged.
    shift = 1.0 + float(np.abs(m).max())
    b = m + shift
    p = _simplex_game(b, max_iter=10 * n * n)
    if not verify_maximal(m, p, 1e-8):
        raise SolverError("solver did not converge")
    return p


def _simplex_game(b: np.ndarray, max_iter: int) -> np.ndarray:
    """Row strategy of the all-positive matrix game b.

    Primal simplex with Bland's rule on max 1'y s.t. b y <= 1, y >= 0; the
    row strategy is read off the duals attached to the slack columns.
    """
    n = b.shape[0]
    # Tableau: columns [y_0..y_{n-1}, s_0..s_{n-1}, rhs]; last row is z - c.
    t = np.zeros((n + 1, 2 * n + 1))
    t[:n, :n] = b
    t[:n, n : 2 * n] = np.eye(n)
    t[:n, -1] = 1.0
    t[n, :n] = -1.0
    basis = list(range(n, 2 * n))
    eps = 1e-12
    for _ in range(max_iter):
        reduced = t[n, : 2 * n]
        entering_candidates = np.nonzero(reduced < -eps)[0]
        if entering_candidates.size == 0:
            duals = t[n, n : 2 * n]
            total = duals.sum()
            if total <= eps:
                raise SolverError("solver did not converge")
            return duals / total
        col = int(entering_candidates[0])  # Bland: smallest index
        ratios = np.full(n, np.inf)
        positive = t[:n, col] > eps
        ratios[positive] = t[:n, -1][positive] / t[:n, col][positive]
        best = ratios.min()
        if not np.isfinite(best):
            raise SolverError("solver did not converge")
        # Bland: among minimum ratios, leave the smallest basis variable.
        tied = np.nonzero(ratios <= best + eps)[0]
        row = int(min(tied, key=lambda r: basis[r]))
        pivot = t[row, col]
        t[row] /= pivot
        for r in range(n + 1):
            if r != row and t[r, col] != 0.0:
                t[r] -= t[r, col] * t[row]
        basis[row] = col
    raise SolverError("solver did not converge")


def brute_force_maximal(m: np.ndarray) -> np.ndarray:
    """Equilibrium by support enumeration; test oracle for tiny instances.

    Every maximal lottery equalizes to zero on its own support, so scanning
    candidate supports and solving the resulting square-ish linear system
    finds one.
    """
    m = _check_skew(m)
    n = m.shape[0]
    if n > 4:
        raise ValueError("oracle is small-instance only")
    for size in range(1, n + 1):
        for support in combinations(range(n), size):
            sub = m[np.ix_(support, support)]
            # Rows: (p' m)_j = 0 for j in support, plus sum(p) = 1.
            a = np.vstack([sub.T, np.ones(size)])
            rhs = np.zeros(size + 1)
            rhs[-1] = 1.0
            sol, _, _, _ = np.linalg.lstsq(a, rhs, rcond=None)
            if np.max(np.abs(a @ sol - rhs)) > 1e-8:
                continue
            if np.any(sol < -1e-9):
                continue
            p = np.zeros(n)
            p[list(support)] = np.clip(sol, 0.0, None)
            p /= p.sum()
            if verify_maximal(m, p, 1e-8):
                return p
    raise SolverError("no equilibrium found by support enumeration")
