"""Online neural-urn learning and distillation.

The learner maintains a small MLP mapping a user embedding to a nonnegative
vector read as urn ball counts. Each step queries a sampled user on a pair of
alternatives drawn from the normalized urn, moves one unit of mass from the
loser to the winner (clamped at zero), and regresses the network onto that
target. A mutation branch occasionally moves mass from an urn-proportional
alternative to a uniform one, keeping the dynamics ergodic.

The urn state oscillates on non-transitive populations; the distillation
phase trains a fresh softmax network on the transcript of normalized urn
states, whose cross-entropy minimizer is their running average.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Tuple

import numpy as np

from . import neural
from .neural import Gradients, MlpParams
from .social_choice import PreferenceOracle, is_lottery

EmbeddingSampler = Callable[[np.random.Generator], np.ndarray]


class CollapsedUrnError(RuntimeError):
    """The urn network returned (near-)zero total mass for an embedding."""


class Policy(Protocol):
    def lottery(self, embedding: np.ndarray) -> np.ndarray: ...


@dataclass
class ApaConfig:
    n_alternatives: int
    embedding_dim: int
    urn_scale: float = 100.0  # target total ball mass N
    mutation_rate: float = 0.01
    learning_rate: float = 1e-2
    n_steps: int = 200_000
    warm_start_iters: int = 2000
    # Warm-start targets are independent of the embedding, so their optimum is
    # a constant network; a full-size step there random-walks hidden biases
    # negative and kills ReLU units for good. Calibrate the mass gently.
    warm_start_learning_rate: float = 1e-3
    # Network input is input_scale·φ(u). With one-hot embeddings the bias
    # parameters couple the atoms' urn dynamics with weight 1/(1+c²); scaling
    # the input up makes the per-atom weight rows carry the update instead.
    input_scale: float = 1.0
    hidden_sizes: Tuple[int, int] = (32, 32)
    seed: int = 0

    def __post_init__(self):
        if self.urn_scale <= 0:
            raise ValueError("urn_scale must be positive")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.learning_rate <= 0 or self.warm_start_learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.n_steps < 0 or self.warm_start_iters < 0:
            raise ValueError("step counts must be nonnegative")
        if self.input_scale <= 0:
            raise ValueError("input_scale must be positive")

    def layer_sizes(self) -> List[int]:
        return [self.embedding_dim, *self.hidden_sizes, self.n_alternatives]


@dataclass
class TranscriptRecord:
    step: int
    user_id: int
    embedding: np.ndarray
    p: np.ndarray  # normalized urn the pair was sampled from
    a1: int
    a2: int
    winner: int


@dataclass
class Transcript:
    records: List[TranscriptRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: TranscriptRecord) -> None:
        self.records.append(rec)

    def embeddings(self) -> np.ndarray:
        return np.array([r.embedding for r in self.records])

    def probs(self) -> np.ndarray:
        return np.array([r.p for r in self.records])

    def user_ids(self) -> np.ndarray:
        return np.array([r.user_id for r in self.records])


def transcript_to_csv(transcript: Transcript, path: str, atom_of: Optional[Callable] = None) -> None:
    """CSV columns: t, user_id, atom, p_0..p_{A-1}, a1, a2, winner."""
    if not transcript.records:
        n_alt = 0
    else:
        n_alt = transcript.records[0].p.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "user_id", "atom"]
            + [f"p_{a}" for a in range(n_alt)]
            + ["a1", "a2", "winner"]
        )
        for r in transcript.records:
            atom = atom_of(r.embedding) if atom_of is not None else ""
            writer.writerow(
                [r.step, r.user_id, atom]
                + ["%.17g" % v for v in r.p]
                + [r.a1, r.a2, r.winner]
            )


def transcript_from_csv(path: str, embedding_of_atom: Callable[[int], np.ndarray]) -> Transcript:
    """Read a transcript CSV back, reconstructing embeddings from the atom column."""
    transcript = Transcript()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        prob_cols = [c for c in reader.fieldnames or [] if c.startswith("p_")]
        for row in reader:
            atom = int(row["atom"])
            transcript.append(
                TranscriptRecord(
                    step=int(row["t"]),
                    user_id=int(row["user_id"]),
                    embedding=embedding_of_atom(atom),
                    p=np.array([float(row[c]) for c in prob_cols]),
                    a1=int(row["a1"]),
                    a2=int(row["a2"]),
                    winner=int(row["winner"]),
                )
            )
    return transcript


def _normalized_urn(n: np.ndarray) -> np.ndarray:
    total = n.sum()
    if total <= 1e-12:
        raise CollapsedUrnError("collapsed urn")
    return n / total


def sample_pair(p: np.ndarray, rng: np.random.Generator) -> Tuple[int, int]:
    """Two distinct alternatives, the first from p, the second from p
    restricted to the rest (uniform fallback when that mass vanishes)."""
    n_alt = p.shape[0]
    cum = np.cumsum(p)
    a1 = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    a1 = min(a1, n_alt - 1)
    rest = p.copy()
    rest[a1] = 0.0
    total = rest.sum()
    if total <= 1e-12:
        others = [a for a in range(n_alt) if a != a1]
        a2 = others[int(rng.integers(0, len(others)))]
    else:
        cum2 = np.cumsum(rest)
        a2 = int(np.searchsorted(cum2, rng.random() * total, side="right"))
        a2 = min(a2, n_alt - 1)
    return a1, a2


def urn_regression_update(
    params: MlpParams,
    x: np.ndarray,
    n: np.ndarray,
    winner: int,
    loser: int,
    lr: float,
) -> MlpParams:
    """One squared-error SGD step toward the clamped one-ball-swap target."""
    target = n.copy()
    target[winner] += 1.0
    target[loser] -= 1.0
    np.maximum(target, 0.0, out=target)
    _, grads = neural.grad_loss(params, x, target, "squared_error")
    return neural.sgd_step(params, grads, lr)


def warm_start(
    params: MlpParams,
    cfg: ApaConfig,
    embedding_sampler: EmbeddingSampler,
    rng: np.random.Generator,
) -> MlpParams:
    """Fit the urn network to random nonnegative targets of mean mass N.

    Targets are uniform in [0.5, 1.5]·N/|A| per component and drawn once per
    distinct embedding, so the net fits a random nonconstant function of
    mean mass N. Fitting a constant instead (fresh noise every step) drives
    the hidden ReLU units dead and leaves the urn unable to separate
    embeddings later.
    """
    if params.head != "relu_nonneg":
        raise ValueError("warm start requires a relu_nonneg head")
    base = cfg.urn_scale / cfg.n_alternatives
    low, high = 0.5 * base, 1.5 * base
    if cfg.warm_start_iters > 0:
        # Start every output unit on the active side of the output ReLU;
        # otherwise units with negative pre-activation never receive gradient.
        params = params.copy()
        params.biases[-1] += cfg.urn_scale / cfg.n_alternatives
    targets: dict = {}
    for _ in range(cfg.warm_start_iters):
        x = cfg.input_scale * np.asarray(embedding_sampler(rng), dtype=float)
        key = x.tobytes()
        if key not in targets and len(targets) < 4096:
            targets[key] = rng.uniform(low, high, size=cfg.n_alternatives)
        target = targets.get(key)
        if target is None:
            target = rng.uniform(low, high, size=cfg.n_alternatives)
        loss, grads = neural.grad_loss(params, x, target, "squared_error")
        if not np.isfinite(loss):
            raise neural.DivergenceError("warm start diverged")
        params = neural.sgd_step(params, grads, cfg.warm_start_learning_rate)
    if cfg.warm_start_iters > 0:
        sample = cfg.input_scale * np.array(
            [embedding_sampler(rng) for _ in range(200)]
        )
        mean_mass = float(neural.forward(params, sample).sum(axis=1).mean())
        if not 0.5 * cfg.urn_scale <= mean_mass <= 2.0 * cfg.urn_scale:
            raise neural.DivergenceError(
                f"warm start missed the target mass: {mean_mass:.2f} vs N={cfg.urn_scale}"
            )
    return params


def apa_step(
    params: MlpParams,
    cfg: ApaConfig,
    step: int,
    user_sampler: Callable[[np.random.Generator], object],
    embed: Callable[[object], np.ndarray],
    user_id_of: Callable[[object], int],
    oracle: PreferenceOracle,
    rng: np.random.Generator,
) -> Tuple[MlpParams, TranscriptRecord]:
    """One online step: query a sampled user, regress onto the urn target,
    then with probability `mutation_rate` apply the mutation update."""
    user = user_sampler(rng)
    x = embed(user)
    x_net = cfg.input_scale * x
    n = neural.forward(params, x_net)
    p = _normalized_urn(n)
    a1, a2 = sample_pair(p, rng)
    winner = oracle(user, a1, a2)
    loser = a2 if winner == a1 else a1
    params = urn_regression_update(params, x_net, n, winner, loser, cfg.learning_rate)
    if rng.random() < cfg.mutation_rate:
        # Mutation target reuses the pre-update urn state: mass moves from an
        # urn-proportional alternative to a uniformly drawn one.
        cum = np.cumsum(p)
        mut_loser = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        mut_loser = min(mut_loser, cfg.n_alternatives - 1)
        mut_winner = int(rng.integers(0, cfg.n_alternatives))
        params = urn_regression_update(
            params, x_net, n, mut_winner, mut_loser, cfg.learning_rate
        )
    record = TranscriptRecord(
        step=step,
        user_id=user_id_of(user),
        embedding=x,
        p=p,
        a1=a1,
        a2=a2,
        winner=winner,
    )
    return params, record


def apa_train(cfg: ApaConfig, env) -> Tuple[MlpParams, Transcript]:
    """Warm start then cfg.n_steps online steps against the environment.

    `env` provides sample_train_user, embed_user, oracle and user ids; the
    planar Environment satisfies this, and tests use lightweight stand-ins.
    """
    rng = np.random.default_rng(cfg.seed)
    params = neural.mlp_init(cfg.layer_sizes(), "relu_nonneg", rng)

    def embedding_sampler(r: np.random.Generator) -> np.ndarray:
        return env.embed_user(env.sample_train_user(r))

    params = warm_start(params, cfg, embedding_sampler, rng)
    transcript = Transcript()
    for t in range(cfg.n_steps):
        params, record = apa_step(
            params,
            cfg,
            t,
            env.sample_train_user,
            env.embed_user,
            lambda u: getattr(u, "id", -1),
            env.oracle,
            rng,
        )
        transcript.append(record)
    return params, transcript


@dataclass
class DistillConfig:
    hidden_sizes: Tuple[int, int] = (32, 32)
    learning_rate: float = 0.05
    epochs: int = 5
    batch_size: int = 128
    burn_in_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must be in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def distill(transcript: Transcript, cfg: DistillConfig) -> MlpParams:
    """Train a fresh softmax network to predict the transcript lotteries.

    Cross-entropy against the recorded p_t makes the per-embedding optimum
    the mean of the observed lotteries, averaging out urn oscillations.
    """
    if len(transcript) == 0:
        raise ValueError("empty transcript")
    x = transcript.embeddings()
    y = transcript.probs()
    start = int(len(transcript) * cfg.burn_in_fraction)
    x, y = x[start:], y[start:]
    rng = np.random.default_rng(cfg.seed)
    sizes = [x.shape[1], *cfg.hidden_sizes, y.shape[1]]
    params = neural.mlp_init(sizes, "softmax", rng)
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            _, grads = neural.grad_loss(params, x[idx], y[idx], "cross_entropy")
            params = neural.sgd_step(params, grads, cfg.learning_rate)
    return params


@dataclass
class NetPolicy:
    """Policy backed by a network: normalized urn or softmax output."""

    params: MlpParams

    def lottery(self, embedding: np.ndarray) -> np.ndarray:
        out = neural.forward(self.params, embedding)
        if self.params.head == "softmax":
            return out
        return _normalized_urn(out)


def policy_of(params: MlpParams, head: Optional[str] = None) -> NetPolicy:
    if head is not None and head != params.head:
        raise ValueError("head does not match parameters")
    return NetPolicy(params=params)


def assert_valid_lottery(p: np.ndarray) -> None:
    if not is_lottery(p):
        raise ValueError("policy output is not a valid lottery")
