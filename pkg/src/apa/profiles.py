"""Small synthetic electorates used by the CLI and the tests."""

from __future__ import annotations

from typing import Callable, List, Sequence, Tuple

import numpy as np

Profile = Tuple[List[Sequence[int]], Callable[[object, int, int], int]]


def ranking_oracle(user: Sequence[int], i: int, j: int) -> int:
    """The user is a ranking (best first); the earlier alternative wins."""
    return i if list(user).index(i) < list(user).index(j) else j


def cyclic_three_profile() -> Profile:
    """Three voter types whose majority relation cycles a0 > a1 > a2 > a0.

    All pairwise margins are +-1/3; the maximal lottery is uniform.
    """
    users = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    return users, ranking_oracle


def unanimous_profile(n_alternatives: int, best: int = 0) -> Profile:
    """One voter type ranking `best` first and the rest by index."""
    ranking = [best] + [a for a in range(n_alternatives) if a != best]
    return [tuple(ranking)], ranking_oracle


def uniform_user_sampler(users: List[Sequence[int]]):
    def sampler(rng: np.random.Generator):
        return users[int(rng.integers(0, len(users)))]

    return sampler
