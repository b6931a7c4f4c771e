"""Test-support estimators: a brute-force likelihood maximizer and a seeded
response simulator.

``grid_calibrate`` never uses gradients: each parameter is swept over a grid
of candidate values and set to the joint-log-likelihood argmax, repeating
until no parameter moves, then re-swept over progressively finer local grids
so the answer is not limited by the coarse grid pitch. Intentionally slow and
only suitable for small matrices; it exists to cross-check the Newton engine
and to generate fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend as K
from .engine import _prepare
from .errors import RaschAssessError
from .ingest import CodedMatrix
from .model import category_distribution

__all__ = ["GridSpec", "SimulationSpec", "OracleEstimates", "grid_calibrate", "simulate"]


@dataclass(frozen=True)
class GridSpec:
    lower: float = -5.0
    upper: float = 5.0
    step: float = 0.01

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("lower must be < upper")
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if (self.upper - self.lower) / self.step > 2_000_000:
            raise ValueError("grid too fine to hold in memory")

    def points(self) -> np.ndarray:
        n = int(round((self.upper - self.lower) / self.step))
        return self.lower + self.step * np.arange(n + 1)


@dataclass(frozen=True)
class OracleEstimates:
    measures: dict[str, float]
    difficulties: dict[str, float]
    thresholds: tuple[float, ...]
    log_likelihood: float


_SWEEP_CAP = 500


def _sweep_once(x, beta, delta, tau, grids) -> bool:
    """One coordinate-descent pass in person, item, threshold order; each
    parameter jumps to the grid argmax. Returns True when anything moved."""
    moved = False
    for n in range(beta.size):
        profile = K.beta_profile(x[n], delta, tau, grids[0])
        best = grids[0][int(np.argmax(profile))]
        if best != beta[n]:
            beta[n] = best
            moved = True
    for i in range(delta.size):
        profile = K.delta_profile(x[:, i], beta, tau, grids[1])
        best = grids[1][int(np.argmax(profile))]
        if best != delta[i]:
            delta[i] = best
            moved = True
    for j in range(tau.size):
        profile = K.tau_profile(x, beta, delta, tau, j, grids[2])
        best = grids[2][int(np.argmax(profile))]
        if best != tau[j]:
            tau[j] = best
            moved = True
    return moved


def _descend(x, beta, delta, tau, grids):
    for _ in range(_SWEEP_CAP):
        if not _sweep_once(x, beta, delta, tau, grids):
            return
    raise RaschAssessError("grid search did not settle within the sweep cap")


def _local_grid(center: np.ndarray, step: float, halfwidth: int = 4):
    offsets = step * np.arange(-halfwidth, halfwidth + 1)
    return [c + offsets for c in np.atleast_1d(center)]


def _refine(x, beta, delta, tau, step):
    """Repeat the descent on shrinking grids centered at the current point so
    the final value is grid-pitch-agnostic."""
    while step > 1e-6:
        step /= 5.0
        for _ in range(_SWEEP_CAP):
            moved = False
            for n in range(beta.size):
                g = beta[n] + step * np.arange(-4, 5)
                best = g[int(np.argmax(K.beta_profile(x[n], delta, tau, g)))]
                moved |= best != beta[n]
                beta[n] = best
            for i in range(delta.size):
                g = delta[i] + step * np.arange(-4, 5)
                best = g[int(np.argmax(K.delta_profile(x[:, i], beta, tau, g)))]
                moved |= best != delta[i]
                delta[i] = best
            for j in range(tau.size):
                g = tau[j] + step * np.arange(-4, 5)
                best = g[int(np.argmax(K.tau_profile(x, beta, delta, tau, j, g)))]
                moved |= best != tau[j]
                tau[j] = best
            if not moved:
                break


def _canonicalize(beta, delta, tau):
    """Translate onto the reporting gauge (thresholds sum zero, difficulties
    mean zero); pure translations leave the likelihood untouched."""
    shift = tau.mean() if tau.size else 0.0
    tau -= shift
    delta += shift
    center = delta.mean()
    delta -= center
    beta -= center


def grid_calibrate(
    matrix: CodedMatrix,
    grid: GridSpec | None = None,
    restarts: int = 3,
    seed: int = 0,
) -> OracleEstimates:
    """Brute-force joint-likelihood maximization over a parameter grid, with
    the engine's extremity exclusions and identification gauge."""
    grid = grid or GridSpec()
    prep = _prepare(matrix, warn=False)
    x = prep.x
    n_persons, n_items = x.shape
    points = grid.points()
    grids = (points, points, points)

    starts = [
        (np.zeros(n_persons), np.zeros(n_items), np.zeros(prep.top)),
    ]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append(
            (
                rng.choice(points, n_persons),
                rng.choice(points, n_items),
                rng.choice(points, prep.top),
            )
        )

    best = None
    for beta, delta, tau in starts:
        beta, delta, tau = beta.astype(float), delta.astype(float), tau.astype(float)
        _descend(x, beta, delta, tau, grids)
        _refine(x, beta, delta, tau, grid.step)
        ll = K.total_loglik(x, beta, delta, tau)
        if best is None or ll > best[0]:
            best = (ll, beta, delta, tau)

    ll, beta, delta, tau = best
    _canonicalize(beta, delta, tau)
    person_ids = np.array(matrix.person_ids)[prep.active_p]
    item_ids = np.array(matrix.item_ids)[prep.active_i]
    return OracleEstimates(
        measures={str(pid): float(b) for pid, b in zip(person_ids, beta)},
        difficulties={str(iid): float(d) for iid, d in zip(item_ids, delta)},
        thresholds=tuple(float(t) for t in tau),
        log_likelihood=float(K.total_loglik(x, beta, delta, tau)),
    )


@dataclass(frozen=True)
class SimulationSpec:
    """True parameters for a synthetic response draw.

    Person measures are either given explicitly or drawn uniformly from
    ``person_range`` (``n_persons`` of them). The matrix dimensions follow the
    difficulty and measure vectors; ids default to p001../i01.. when not given.
    """

    difficulties: tuple[float, ...]
    thresholds: tuple[float, ...]
    seed: int
    person_measures: tuple[float, ...] | None = None
    n_persons: int | None = None
    person_range: tuple[float, float] = (-2.0, 2.0)
    person_ids: tuple[str, ...] | None = None
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.person_measures is None) == (self.n_persons is None):
            raise ValueError("give exactly one of person_measures or n_persons")
        if len(self.thresholds) < 1:
            raise ValueError("thresholds must have at least one step")
        if self.item_ids is not None and len(self.item_ids) != len(self.difficulties):
            raise ValueError("item_ids length does not match difficulties")


def simulate(spec: SimulationSpec) -> CodedMatrix:
    """Draw a coded matrix from the model at the given true parameters; the
    same spec (seed included) always produces the same matrix."""
    rng = np.random.default_rng(spec.seed)
    delta = np.asarray(spec.difficulties, dtype=float)
    tau = np.asarray(spec.thresholds, dtype=float)
    if spec.person_measures is not None:
        beta = np.asarray(spec.person_measures, dtype=float)
    else:
        lo, hi = spec.person_range
        beta = rng.uniform(lo, hi, spec.n_persons)
    probs = category_distribution(beta[:, None], delta[None, :], tau)
    cum = probs.cumsum(axis=-1)
    draws = rng.random(size=beta.shape + delta.shape)
    cells = np.minimum((draws[..., None] >= cum).sum(axis=-1), tau.size)
    person_ids = spec.person_ids or tuple(f"p{n + 1:03d}" for n in range(beta.size))
    item_ids = spec.item_ids or tuple(f"i{i + 1:02d}" for i in range(delta.size))
    return CodedMatrix(person_ids, item_ids, cells, top_category=tau.size)
