"""Hybrid wolf-pack / swarm population search with a Pareto archive.

Each iteration the population is split at random into two equal halves: one
moves by the three-leader pack rules (exploration controlled by a scalar that
decays linearly from two to zero), the other by inertia-weighted swarm
velocity updates.  Everyone is then evaluated, archived, and reshuffled, and
the archive's best member is fed back to both halves as the shared incumbent.

Ranking inside the search is scalar: weighted normalized objective shortfalls
plus the constraint penalty.  The archive keeps the actual non-dominated set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pareto import ArchiveEntry, ParetoArchive

__all__ = [
    "SearchSpace",
    "GwoState",
    "PsoState",
    "HybridConfig",
    "EvaluatorFailure",
    "epsilon_schedule",
    "mu_schedule",
    "bound_repair",
    "gwo_step",
    "pso_step",
    "hybrid_run",
    "single_run",
    "convergence_log_to_csv",
]


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower/upper must be 1-d arrays of equal length")
        if not np.all(self.lower < self.upper):
            raise ValueError("need lower < upper componentwise")

    @property
    def dimension(self) -> int:
        return self.lower.size


@dataclass
class GwoState:
    positions: np.ndarray  # (n, d)
    alpha: np.ndarray  # best position
    beta: np.ndarray  # second best
    delta: np.ndarray  # third best
    epsilon: float  # exploration scalar in [0, 2]


@dataclass
class PsoState:
    positions: np.ndarray  # (n, d)
    velocities: np.ndarray  # (n, d)
    pbest: np.ndarray  # (n, d) per-particle best positions
    gbest: np.ndarray  # (d,) global best position
    mu: float  # inertia
    c1: float = 1.49618
    c2: float = 1.49618


@dataclass(frozen=True)
class HybridConfig:
    population: int = 60
    iterations: int = 50
    mu_high: float = 0.9
    mu_low: float = 0.4
    c1: float = 1.49618
    c2: float = 1.49618
    seed: int = 0
    archive_capacity: int = 100
    objective_weights: tuple[float, float] = (0.5, 0.5)
    penalty_weights: dict | None = None  # consumed by the schedule evaluator

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ValueError("population must be even and >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


class EvaluatorFailure(RuntimeError):
    """Evaluator raised; ``x`` holds the offending position."""

    def __init__(self, x: np.ndarray, cause: BaseException):
        super().__init__(f"evaluator failed at x={x!r}: {cause}")
        self.x = x


def epsilon_schedule(iteration: int, total: int) -> float:
    """Exploration scalar, linear from 2 at the first iteration to 0 at the last."""
    if total <= 1:
        return 2.0
    return 2.0 * (1.0 - iteration / (total - 1))


def mu_schedule(iteration: int, total: int, high: float = 0.9, low: float = 0.4) -> float:
    """Inertia weight, linear from ``high`` down to ``low`` across iterations."""
    if total <= 1:
        return high
    return high - (high - low) * iteration / (total - 1)


def bound_repair(position: np.ndarray, space: SearchSpace) -> np.ndarray:
    return np.clip(position, space.lower, space.upper)


def gwo_step(state: GwoState, space: SearchSpace, rng) -> np.ndarray:
    """One pack move: every wolf averages three leader-relative candidates.

    For each leader (alpha, beta, delta in that order) two uniform draws per
    wolf and dimension set the stretch factor eta = 2*R1 and the step scalar
    zeta = epsilon*(2*R2 - 1); the candidate is leader - zeta*|eta*leader - x|.
    """
    x = state.positions
    new = np.zeros_like(x)
    for leader in (state.alpha, state.beta, state.delta):
        eta = 2.0 * rng.random(x.shape)
        zeta = state.epsilon * (2.0 * rng.random(x.shape) - 1.0)
        dis = np.abs(eta * leader[None, :] - x)
        new += leader[None, :] - zeta * dis
    return bound_repair(new / 3.0, space)


def pso_step(state: PsoState, space: SearchSpace, rng) -> tuple[np.ndarray, np.ndarray]:
    """One swarm move: inertia plus cognitive and social pulls, with the
    velocity clamped to the box width and the position repaired into bounds."""
    x, v = state.positions, state.velocities
    r1 = rng.random(x.shape)
    r2 = rng.random(x.shape)
    v_new = state.mu * v + state.c1 * r1 * (state.pbest - x) + state.c2 * r2 * (state.gbest[None, :] - x)
    width = space.upper - space.lower
    v_new = np.clip(v_new, -width, width)
    x_new = bound_repair(x + v_new, space)
    return x_new, v_new


@dataclass
class _Scaler:
    """Running objective extremes over everything evaluated so far."""

    f1_min: float = np.inf
    f1_max: float = -np.inf
    f2_min: float = np.inf
    f2_max: float = -np.inf

    def update(self, fs) -> None:
        for f in fs:
            self.f1_min = min(self.f1_min, f.f1)
            self.f1_max = max(self.f1_max, f.f1)
            self.f2_min = min(self.f2_min, f.f2)
            self.f2_max = max(self.f2_max, f.f2)

    def scalar(self, f, weights) -> float:
        w1, w2 = weights
        s1 = (f.f1 - self.f1_min) / (self.f1_max - self.f1_min) if self.f1_max > self.f1_min else 0.0
        s2 = (f.f2 - self.f2_min) / (self.f2_max - self.f2_min) if self.f2_max > self.f2_min else 0.0
        return w1 * s1 + w2 * s2 + f.penalty


def _evaluate_all(evaluator, positions):
    out = []
    for row in positions:
        try:
            out.append(evaluator(row))
        except Exception as exc:
            raise EvaluatorFailure(row.copy(), exc) from exc
    return out


def _run(mode: str, cfg: HybridConfig, space: SearchSpace, evaluator):
    if mode not in ("gwo", "pso", "hybrid"):
        raise ValueError(f"unknown algorithm {mode!r}")
    rng = np.random.default_rng(cfg.seed)
    n, d = cfg.population, space.dimension
    width = space.upper - space.lower

    x = space.lower + rng.random((n, d)) * width
    v = np.zeros((n, d))
    fs = _evaluate_all(evaluator, x)

    scaler = _Scaler()
    scaler.update(fs)
    archive = ParetoArchive(capacity=cfg.archive_capacity)
    for row, f in zip(x, fs):
        archive.insert(ArchiveEntry(x=row.copy(), f=f))

    pbest_x = x.copy()
    pbest_f = list(fs)

    weights = cfg.objective_weights

    def incumbent():
        best = min(
            enumerate(archive.entries),
            key=lambda t: (scaler.scalar(t[1].f, weights), t[0]),
        )[1]
        return best.x, best.f

    def leaders():
        # archive scalar-best plus the current population, ranked together
        best_x, best_f = incumbent()
        cand = [(scaler.scalar(best_f, weights), -1, best_x)]
        cand += [(scaler.scalar(f, weights), i, x[i]) for i, f in enumerate(fs)]
        cand.sort(key=lambda t: (t[0], t[1]))
        return cand[0][2], cand[1][2], cand[2][2]

    log = []
    for it in range(cfg.iterations):
        eps = epsilon_schedule(it, cfg.iterations)
        mu = mu_schedule(it, cfg.iterations, cfg.mu_high, cfg.mu_low)
        gbest_x, _ = incumbent()

        perm = rng.permutation(n)
        if mode == "hybrid":
            gwo_rows, pso_rows = perm[: n // 2], perm[n // 2 :]
        elif mode == "gwo":
            gwo_rows, pso_rows = perm, perm[:0]
        else:
            gwo_rows, pso_rows = perm[:0], perm

        if gwo_rows.size:
            a, b, c = leaders()
            gs = GwoState(positions=x[gwo_rows], alpha=a, beta=b, delta=c, epsilon=eps)
            x[gwo_rows] = gwo_step(gs, space, rng)
        if pso_rows.size:
            ps = PsoState(
                positions=x[pso_rows],
                velocities=v[pso_rows],
                pbest=pbest_x[pso_rows],
                gbest=gbest_x,
                mu=mu,
                c1=cfg.c1,
                c2=cfg.c2,
            )
            x[pso_rows], v[pso_rows] = pso_step(ps, space, rng)

        fs = _evaluate_all(evaluator, x)
        scaler.update(fs)
        for row, f in zip(x, fs):
            archive.insert(ArchiveEntry(x=row.copy(), f=f))
        for i in range(n):
            if scaler.scalar(fs[i], weights) < scaler.scalar(pbest_f[i], weights):
                pbest_x[i] = x[i].copy()
                pbest_f[i] = fs[i]

        _, best_f = incumbent()
        log.append(
            {
                "iteration": it,
                "best_scalar": scaler.scalar(best_f, weights),
                "archive_size": len(archive),
                "best_f1": min(e.f.f1 for e in archive.entries),
                "best_f2": min(e.f.f2 for e in archive.entries),
            }
        )
    return archive, log


def hybrid_run(cfg: HybridConfig, space: SearchSpace, evaluator):
    """Split-evolve-shuffle search; returns (ParetoArchive, convergence log).

    ``evaluator`` maps a flat position vector to an objective vector with
    ``f1``, ``f2`` and ``penalty`` attributes.  Fully deterministic per seed.
    """
    return _run("hybrid", cfg, space, evaluator)


def single_run(algorithm: str, cfg: HybridConfig, space: SearchSpace, evaluator):
    """Undivided-population baseline: the whole population moves by one rule."""
    return _run(algorithm, cfg, space, evaluator)


def convergence_log_to_csv(log, path) -> None:
    lines = ["iteration,best_scalar,archive_size,best_f1,best_f2"]
    for row in log:
        lines.append(
            f"{row['iteration']},{row['best_scalar']:.10g},{row['archive_size']},"
            f"{row['best_f1']:.10g},{row['best_f2']:.10g}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
