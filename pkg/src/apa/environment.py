"""Synthetic planar preference world.

Users and alternatives live in a rectangle in the plane; a user prefers the
nearer of two alternatives. A k x k grid over the box supplies the coarse
observable embedding: users in the same cell are indistinguishable to a
learner, which is exactly the information loss that makes aggregated
preferences (and hence maximal lotteries) nontrivial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import social_choice

SCHEMA_VERSION = 1

EMBEDDING_MODES = ("one_hot", "coordinates")


class Choice(Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class UserPoint:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class AlternativePoint:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Grid:
    """k x k half-open cells over a bounding box.

    A point exactly on an interior edge belongs to the lower-index cell;
    points outside the box clamp to the boundary cells.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("grid resolution must be >= 1")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("empty bounding box")

    @property
    def n_cells(self) -> int:
        return self.k * self.k

    def _axis_index(self, v: float, lo: float, hi: float) -> int:
        frac = (v - lo) / (hi - lo) * self.k
        idx = math.ceil(frac) - 1  # edge points go to the lower cell
        return min(max(idx, 0), self.k - 1)

    def cell_of(self, x: float, y: float) -> int:
        ix = self._axis_index(x, self.x_min, self.x_max)
        iy = self._axis_index(y, self.y_min, self.y_max)
        return iy * self.k + ix

    def cell_center(self, cell: int) -> Tuple[float, float]:
        iy, ix = divmod(cell, self.k)
        w = (self.x_max - self.x_min) / self.k
        h = (self.y_max - self.y_min) / self.k
        return (self.x_min + (ix + 0.5) * w, self.y_min + (iy + 0.5) * h)


@dataclass
class GaussianCluster:
    cx: float
    cy: float
    sigma: float
    weight: float = 1.0


@dataclass
class EnvConfig:
    n_alternatives: int = 8
    n_train_users: int = 2000
    n_validation_users: int = 500
    grid_k: int = 4
    box: Tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    user_distribution: str = "clusters"  # "clusters", "uniform" or "polarized"
    clusters: Optional[List[GaussianCluster]] = None
    n_random_clusters: int = 10
    cluster_sigma: float = 0.06
    embedding_mode: str = "one_hot"

    def __post_init__(self):
        if self.n_alternatives < 2:
            raise ValueError("need at least two alternatives")
        if self.n_train_users < 1 or self.n_validation_users < 0:
            raise ValueError("user counts out of range")
        if self.user_distribution not in ("clusters", "uniform", "polarized"):
            raise ValueError(
                "user_distribution must be 'clusters', 'uniform' or 'polarized'"
            )
        if self.embedding_mode not in EMBEDDING_MODES:
            raise ValueError(f"embedding_mode must be one of {EMBEDDING_MODES}")


@dataclass
class Environment:
    alternatives: List[AlternativePoint]
    train_users: List[UserPoint]
    validation_users: List[UserPoint]
    grid: Grid
    seed: Optional[int] = None
    embedding_mode: str = "one_hot"
    clusters: Optional[List[GaussianCluster]] = None
    _alt_xy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        train_ids = {u.id for u in self.train_users}
        val_ids = {u.id for u in self.validation_users}
        if train_ids & val_ids:
            raise ValueError("train and validation users must be disjoint by id")
        self._alt_xy = np.array([[a.x, a.y] for a in self.alternatives])
        self._users_by_id = {
            u.id: u for u in self.train_users + self.validation_users
        }

    @property
    def n_alternatives(self) -> int:
        return len(self.alternatives)

    @property
    def embedding_dim(self) -> int:
        return self.grid.n_cells if self.embedding_mode == "one_hot" else 2

    def user_by_id(self, user_id: int) -> UserPoint:
        return self._users_by_id[user_id]

    def distances(self, users: Sequence[UserPoint]) -> np.ndarray:
        """(n_users, n_alternatives) Euclidean distances."""
        xy = np.array([[u.x, u.y] for u in users])
        return np.linalg.norm(xy[:, None, :] - self._alt_xy[None, :, :], axis=-1)

    def oracle(self, user: UserPoint, i: int, j: int) -> int:
        """Winning alternative index under the distance rule with id tie-break."""
        choice = prefer(user, self.alternatives[i], self.alternatives[j])
        return i if choice is Choice.FIRST else j

    def embed_user(self, user: UserPoint) -> np.ndarray:
        return embed(user, self.grid, self.embedding_mode)

    def atom_of(self, user: UserPoint) -> int:
        return self.grid.cell_of(user.x, user.y)

    def atom_of_embedding(self, embedding: np.ndarray) -> int:
        if self.embedding_mode == "one_hot":
            return int(np.argmax(embedding))
        # Coordinates mode stores normalized cell centers.
        x = self.grid.x_min + embedding[0] * (self.grid.x_max - self.grid.x_min)
        y = self.grid.y_min + embedding[1] * (self.grid.y_max - self.grid.y_min)
        return self.grid.cell_of(x, y)

    def atom_embedding(self, atom: int) -> np.ndarray:
        if self.embedding_mode == "one_hot":
            e = np.zeros(self.grid.n_cells)
            e[atom] = 1.0
            return e
        cx, cy = self.grid.cell_center(atom)
        return np.array(
            [
                (cx - self.grid.x_min) / (self.grid.x_max - self.grid.x_min),
                (cy - self.grid.y_min) / (self.grid.y_max - self.grid.y_min),
            ]
        )

    def atom_train_users(self, atom: int) -> List[UserPoint]:
        return [u for u in self.train_users if self.atom_of(u) == atom]

    def sample_train_user(self, rng: np.random.Generator) -> UserPoint:
        return self.train_users[int(rng.integers(0, len(self.train_users)))]


def prefer(u: UserPoint, a1: AlternativePoint, a2: AlternativePoint) -> Choice:
    """Nearer alternative wins; exact ties go to the lower alternative id."""
    if a1.id == a2.id:
        raise ValueError("cannot compare an alternative with itself")
    d1 = math.hypot(a1.x - u.x, a1.y - u.y)
    d2 = math.hypot(a2.x - u.x, a2.y - u.y)
    if d1 < d2:
        return Choice.FIRST
    if d2 < d1:
        return Choice.SECOND
    return Choice.FIRST if a1.id < a2.id else Choice.SECOND


def embed(u: UserPoint, grid: Grid, mode: str) -> np.ndarray:
    if mode not in EMBEDDING_MODES:
        raise ValueError(f"unknown embedding mode {mode!r}")
    cell = grid.cell_of(u.x, u.y)
    if mode == "one_hot":
        e = np.zeros(grid.n_cells)
        e[cell] = 1.0
        return e
    cx, cy = grid.cell_center(cell)
    return np.array(
        [
            (cx - grid.x_min) / (grid.x_max - grid.x_min),
            (cy - grid.y_min) / (grid.y_max - grid.y_min),
        ]
    )


def _sample_users(
    cfg: EnvConfig,
    clusters: Optional[List[GaussianCluster]],
    count: int,
    id_offset: int,
    rng: np.random.Generator,
) -> List[UserPoint]:
    x_min, y_min, x_max, y_max = cfg.box
    users = []
    if cfg.user_distribution == "uniform":
        for i in range(count):
            users.append(
                UserPoint(
                    id=id_offset + i,
                    x=float(rng.uniform(x_min, x_max)),
                    y=float(rng.uniform(y_min, y_max)),
                )
            )
        return users
    assert clusters
    weights = np.array([c.weight for c in clusters], dtype=float)
    weights /= weights.sum()
    for i in range(count):
        c = clusters[int(rng.choice(len(clusters), p=weights))]
        # Truncate the Gaussian to the box by resampling.
        while True:
            x = float(rng.normal(c.cx, c.sigma))
            y = float(rng.normal(c.cy, c.sigma))
            if x_min <= x <= x_max and y_min <= y <= y_max:
                break
        users.append(UserPoint(id=id_offset + i, x=x, y=y))
    return users


def _smoothed_sign_matrices(
    pts: np.ndarray,
    alt_xy: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    n_mc: int = 80,
) -> np.ndarray:
    """Expected pairwise-preference sign matrix of a Gaussian cluster at each
    candidate point: entry [p, i, j] is the expected margin of i over j among
    users jittered around pts[p]."""
    n_pts = pts.shape[0]
    samples = pts[:, None, :] + rng.normal(0.0, sigma, size=(n_pts, n_mc, 2))
    d = np.linalg.norm(samples[:, :, None, :] - alt_xy[None, None, :, :], axis=-1)
    return np.sign(d[:, :, None, :] - d[:, :, :, None]).mean(axis=1)


def _polarized_clusters(
    alt_xy: np.ndarray,
    grid: Grid,
    sigma: float,
    rng: np.random.Generator,
    n_candidates: int = 200,
    polar_weight: float = 4.0,
) -> List[GaussianCluster]:
    """Two tight clusters per grid cell, placed so the cell's Condorcet winner
    and Borda winner disagree whenever the local geometry allows it.

    A majority cluster makes one alternative the strict pairwise winner while
    a minority cluster boosts a broadly-liked rival's margin sum above it.
    Cells where no such placement is robust fall back to a single central
    cluster. Polarized cells carry extra weight so the disagreement is
    visible in aggregate win rates.
    """
    clusters: List[GaussianCluster] = []
    n_alt = alt_xy.shape[0]
    eye = np.eye(n_alt, dtype=bool)
    weight_opts = [(0.75, 0.25), (0.7, 0.3), (0.65, 0.35), (0.6, 0.4)]
    cell_w = (grid.x_max - grid.x_min) / grid.k
    cell_h = (grid.y_max - grid.y_min) / grid.k
    for cell in range(grid.n_cells):
        cx, cy = grid.cell_center(cell)
        pts = np.column_stack(
            [
                rng.uniform(cx - 0.425 * cell_w, cx + 0.425 * cell_w, n_candidates),
                rng.uniform(cy - 0.425 * cell_h, cy + 0.425 * cell_h, n_candidates),
            ]
        )
        sm = _smoothed_sign_matrices(pts, alt_xy, sigma, rng)
        best = None
        for w1, w2 in weight_opts:
            for p1 in range(n_candidates):
                m = w1 * sm[p1][None, :, :] + w2 * sm
                row_min = np.where(eye[None, :, :], np.inf, m).min(axis=2)
                cw_ok = row_min >= 0.25
                scores = m.sum(axis=2)
                bw = scores.argmax(axis=1)
                for p2 in np.nonzero(cw_ok.any(axis=1))[0]:
                    cw = int(row_min[p2].argmax())
                    if not cw_ok[p2, cw] or cw == bw[p2]:
                        continue
                    if scores[p2, bw[p2]] - scores[p2, cw] < 0.5:
                        continue
                    adv = m[p2, cw, bw[p2]]
                    if adv < 0.25:
                        continue
                    if best is None or adv > best[0]:
                        best = (float(adv), p1, int(p2), w1, w2)
        if best is None:
            clusters.append(GaussianCluster(cx, cy, sigma, 1.0))
        else:
            _, p1, p2, w1, w2 = best
            clusters.append(
                GaussianCluster(float(pts[p1, 0]), float(pts[p1, 1]), sigma, polar_weight * w1)
            )
            clusters.append(
                GaussianCluster(float(pts[p2, 0]), float(pts[p2, 1]), sigma, polar_weight * w2)
            )
    return clusters


def gen_environment(cfg: EnvConfig, rng: np.random.Generator, seed: Optional[int] = None) -> Environment:
    """Alternatives uniform in the box; users from the configured law."""
    x_min, y_min, x_max, y_max = cfg.box
    while True:
        alternatives = [
            AlternativePoint(
                id=a,
                x=float(rng.uniform(x_min, x_max)),
                y=float(rng.uniform(y_min, y_max)),
            )
            for a in range(cfg.n_alternatives)
        ]
        positions = {(a.x, a.y) for a in alternatives}
        if len(positions) == cfg.n_alternatives:
            break
    clusters = cfg.clusters
    if cfg.user_distribution == "polarized" and clusters is None:
        alt_xy = np.array([[a.x, a.y] for a in alternatives])
        grid = Grid(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max, k=cfg.grid_k)
        clusters = _polarized_clusters(alt_xy, grid, cfg.cluster_sigma, rng)
    if cfg.user_distribution == "clusters" and clusters is None:
        clusters = [
            GaussianCluster(
                cx=float(rng.uniform(x_min, x_max)),
                cy=float(rng.uniform(y_min, y_max)),
                sigma=cfg.cluster_sigma,
                weight=1.0,
            )
            for _ in range(cfg.n_random_clusters)
        ]
    train = _sample_users(cfg, clusters, cfg.n_train_users, 0, rng)
    validation = _sample_users(cfg, clusters, cfg.n_validation_users, cfg.n_train_users, rng)
    grid = Grid(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max, k=cfg.grid_k)
    return Environment(
        alternatives=alternatives,
        train_users=train,
        validation_users=validation,
        grid=grid,
        seed=seed,
        embedding_mode=cfg.embedding_mode,
        clusters=clusters,
    )


def _margins_from_distances(d: np.ndarray) -> np.ndarray:
    """Margin matrix from a (n_users, n_alternatives) distance table.

    Exact distance ties are broken toward the lower alternative index,
    matching prefer().
    """
    n_users, n_alt = d.shape
    less = (d[:, :, None] < d[:, None, :]).sum(axis=0)
    equal = (d[:, :, None] == d[:, None, :]).sum(axis=0)
    lower = np.tril(np.ones((n_alt, n_alt)), -1).T  # lower[i, j] = 1 iff i < j
    wins = less + equal * lower
    m = (wins - wins.T) / n_users
    np.fill_diagonal(m, 0.0)
    return m


def atom_margin_matrix(env: Environment, atom: int) -> np.ndarray:
    users = env.atom_train_users(atom)
    if not users:
        raise ValueError("empty atom")
    return _margins_from_distances(env.distances(users))


def global_margin_matrix(env: Environment) -> np.ndarray:
    return _margins_from_distances(env.distances(env.train_users))


def save_environment(env: Environment, path: str) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": env.seed,
        "embedding_mode": env.embedding_mode,
        "grid": {
            "x_min": env.grid.x_min,
            "y_min": env.grid.y_min,
            "x_max": env.grid.x_max,
            "y_max": env.grid.y_max,
            "k": env.grid.k,
        },
        "alternatives": [{"id": a.id, "x": a.x, "y": a.y} for a in env.alternatives],
        "train_users": [{"id": u.id, "x": u.x, "y": u.y} for u in env.train_users],
        "validation_users": [
            {"id": u.id, "x": u.x, "y": u.y} for u in env.validation_users
        ],
        "clusters": None
        if env.clusters is None
        else [
            {"cx": c.cx, "cy": c.cy, "sigma": c.sigma, "weight": c.weight}
            for c in env.clusters
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_environment(path: str) -> Environment:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported environment schema in {path}")
    grid = Grid(**doc["grid"])
    return Environment(
        alternatives=[AlternativePoint(**a) for a in doc["alternatives"]],
        train_users=[UserPoint(**u) for u in doc["train_users"]],
        validation_users=[UserPoint(**u) for u in doc["validation_users"]],
        grid=grid,
        seed=doc.get("seed"),
        embedding_mode=doc["embedding_mode"],
        clusters=None
        if doc.get("clusters") is None
        else [GaussianCluster(**c) for c in doc["clusters"]],
    )


def empirical_margin_matrix(env: Environment, users: Sequence[UserPoint]) -> np.ndarray:
    """Margin matrix over an explicit user list (same tie convention)."""
    if not users:
        raise ValueError("empty electorate")
    return _margins_from_distances(env.distances(users))


def global_maximal_lottery(env: Environment) -> np.ndarray:
    return social_choice.maximal_lottery(global_margin_matrix(env))
