"""Joint maximum-likelihood calibration of the rating-scale model.

Alternates damped one-dimensional Newton sweeps over person measures, item
difficulties, and shared category thresholds, holding the other blocks fixed.
Identification: item difficulties are kept at mean zero and thresholds at sum
zero via likelihood-preserving re-centering after every sweep, so the joint
log-likelihood never decreases. Persons and items whose observed responses
sit entirely at one end of the scale carry no likelihood information; they
are excluded from estimation and reported from a 0.25-score-point interior
adjustment instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import backend as K
from .errors import InsufficientDataError
from .ingest import CodedMatrix, _extreme_fixed_point
from .model import category_probability, expected_score, score_variance  # noqa: F401  (re-exported)

__all__ = [
    "CalibrationConfig",
    "ItemParameters",
    "PersonParameters",
    "CalibrationResult",
    "initialize",
    "calibrate",
    "standard_errors",
    "category_probability",
    "expected_score",
    "score_variance",
]

_DENOM_FLOOR = 1e-10
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class CalibrationConfig:
    """Convergence settings.

    A sweep counts as converged when no parameter moved more than
    ``tolerance`` logits and every person/item score residual is below
    ``score_tolerance`` points; the residual criterion keeps large samples
    from stopping while expected scores still visibly disagree with totals.
    """

    tolerance: float = 1e-4
    max_iterations: int = 1000
    step_clamp: float = 1.0
    score_tolerance: float = 0.01

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_clamp <= 0:
            raise ValueError("step_clamp must be > 0")
        if self.score_tolerance <= 0:
            raise ValueError("score_tolerance must be > 0")


@dataclass(frozen=True)
class ItemParameters:
    item_id: str
    difficulty: float | None
    se: float | None
    extreme: bool = False


@dataclass(frozen=True)
class PersonParameters:
    person_id: str
    measure: float | None
    se: float | None
    extreme: bool = False


@dataclass(frozen=True)
class CalibrationResult:
    items: tuple[ItemParameters, ...]
    persons: tuple[PersonParameters, ...]
    thresholds: tuple[float, ...]
    converged: bool
    iterations: int
    log_likelihood: float
    excluded_persons: tuple[str, ...]
    excluded_items: tuple[str, ...]
    category_collapse: dict[int, int] | None
    config: CalibrationConfig
    loglik_by_sweep: tuple[float, ...] = field(repr=False, default=())
    skipped_updates: int = field(repr=False, default=0)

    @property
    def excluded(self) -> tuple[str, ...]:
        return self.excluded_persons + self.excluded_items

    def item(self, item_id: str) -> ItemParameters:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    def person(self, person_id: str) -> PersonParameters:
        for p in self.persons:
            if p.person_id == person_id:
                return p
        raise KeyError(person_id)


class _Prepared:
    """Estimation view of a matrix: active (non-extreme) persons/items and
    response codes collapsed onto consecutive observed categories."""

    __slots__ = ("active_p", "active_i", "x", "top", "collapse", "observed_values")

    def __init__(self, active_p, active_i, x, top, collapse, observed_values):
        self.active_p = active_p
        self.active_i = active_i
        self.x = x
        self.top = top
        self.collapse = collapse
        self.observed_values = observed_values


def _collapse_codes(x: np.ndarray):
    values = np.unique(x[x >= 0])
    if values.size < 2:
        raise InsufficientDataError(
            f"fewer than 2 response categories observed (saw {values.tolist()})"
        )
    lut = {int(v): rank for rank, v in enumerate(values)}
    out = x.copy()
    for v, rank in lut.items():
        out[x == v] = rank
    return out, values.size - 1, lut, values


def _prepare(matrix: CodedMatrix, warn: bool = True) -> _Prepared:
    active_p = ~np.isin(np.array(matrix.person_ids), matrix.extreme_person_ids)
    active_i = ~np.isin(np.array(matrix.item_ids), matrix.extreme_item_ids)
    while True:
        x_raw = matrix.cells[np.ix_(active_p, active_i)]
        x, top, lut, values = _collapse_codes(x_raw)
        # collapsing can push a borderline person/item to the scale end
        ext_p, ext_i = _extreme_fixed_point(x, top)
        if not ext_p.any() and not ext_i.any():
            break
        active_p[np.flatnonzero(active_p)[ext_p]] = False
        active_i[np.flatnonzero(active_i)[ext_i]] = False
    if active_p.sum() < 2 or active_i.sum() < 2:
        raise InsufficientDataError(
            "insufficient data: calibration needs at least 2 non-extreme persons "
            "and 2 non-extreme items"
        )
    identity = values.tolist() == list(range(matrix.top_category + 1))
    collapse = None if identity else {int(k): int(v) for k, v in lut.items()}
    if collapse is not None and warn:
        warnings.warn(
            f"unobserved response categories collapsed: {collapse} "
            f"(effective top category {top})",
            stacklevel=3,
        )
    return _Prepared(active_p, active_i, x, top, collapse, values)


def _prox_start(x: np.ndarray, top: int):
    obs = x >= 0
    xs = np.where(obs, x, 0)
    t_person = xs.sum(axis=1).astype(float)
    n_person = obs.sum(axis=1) * float(top)
    t_item = xs.sum(axis=0).astype(float)
    n_item = obs.sum(axis=0) * float(top)
    beta = np.log(t_person / (n_person - t_person))
    delta = np.log((n_item - t_item) / t_item)
    delta -= delta.mean()
    return beta, delta


def initialize(matrix: CodedMatrix):
    """Log-odds warm start. Returns ``(measures, difficulties, thresholds)``
    aligned to the matrix person/item order, with NaN at extreme entities;
    difficulties are centered, measures are not, thresholds start at zero."""
    prep = _prepare(matrix, warn=False)
    beta, delta = _prox_start(prep.x, prep.top)
    measures = np.full(matrix.n_persons, np.nan)
    difficulties = np.full(matrix.n_items, np.nan)
    measures[prep.active_p] = beta
    difficulties[prep.active_i] = delta
    return measures, difficulties, np.zeros(prep.top)


def _masked_sums(values: np.ndarray, obs: np.ndarray):
    masked = np.where(obs, values, 0.0)
    return masked.sum(axis=1), masked.sum(axis=0)


def _backtrack_vector(ll_of, base, step, ll0):
    """Halve entries of ``step`` until no entity's log-likelihood decreases;
    concavity of each 1-d slice guarantees termination. Entries that never
    recover are dropped (step 0)."""
    step = step.copy()
    slack = 1e-13 * (1.0 + np.abs(ll0))
    for _ in range(_MAX_HALVINGS):
        ll1 = ll_of(base + step)
        bad = ll1 < ll0 - slack
        if not bad.any():
            return base + step
        step[bad] *= 0.5
    step[bad] = 0.0
    return base + step


def _backtrack_scalar(ll_of, base, step, ll0):
    slack = 1e-13 * (1.0 + abs(ll0))
    for _ in range(_MAX_HALVINGS):
        if ll_of(base + step) >= ll0 - slack:
            return base + step
        step *= 0.5
    return base


def _newton_steps(residual, information, clamp):
    ok = information >= _DENOM_FLOOR
    steps = np.where(ok, residual / np.where(ok, information, 1.0), 0.0)
    return np.clip(steps, -clamp, clamp), int((~ok).sum())


def calibrate(matrix: CodedMatrix, config: CalibrationConfig | None = None) -> CalibrationResult:
    """Estimate person measures, item difficulties, shared thresholds, and
    their standard errors from a coded matrix."""
    cfg = config or CalibrationConfig()
    prep = _prepare(matrix)
    x = prep.x
    obs = x >= 0
    top = prep.top

    beta, delta = _prox_start(x, top)
    tau = np.zeros(top)
    t_person = np.where(obs, x, 0).sum(axis=1).astype(float)
    s_item = np.where(obs, x, 0).sum(axis=0).astype(float)
    ge_counts = np.array([(x >= j).sum() for j in range(1, top + 1)], dtype=float)

    ll_hist = []
    skipped = 0
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iterations + 1):
        beta_prev, delta_prev, tau_prev = beta.copy(), delta.copy(), tau.copy()

        # person block: independent 1-d problems given items and thresholds
        e, w = K.esw(beta, delta, tau)
        e_rows, _ = _masked_sums(e, obs)
        w_rows, _ = _masked_sums(w, obs)
        steps, miss = _newton_steps(t_person - e_rows, w_rows, cfg.step_clamp)
        skipped += miss
        ll0 = K.person_loglik(x, beta, delta, tau)
        beta = _backtrack_vector(lambda b: K.person_loglik(x, b, delta, tau), beta, steps, ll0)

        # item block
        e, w = K.esw(beta, delta, tau)
        _, e_cols = _masked_sums(e, obs)
        _, w_cols = _masked_sums(w, obs)
        steps, miss = _newton_steps(e_cols - s_item, w_cols, cfg.step_clamp)
        skipped += miss
        ll0 = K.item_loglik(x, beta, delta, tau)
        delta = _backtrack_vector(lambda d: K.item_loglik(x, beta, d, tau), delta, steps, ll0)

        # threshold block, in step order; each update sees the previous one
        theta = beta[:, None] - delta[None, :]
        for j in range(top):
            probs = K.prob_table(theta, tau)
            p_ge = probs[..., j + 1 :].sum(axis=-1)
            p_ge_sum = np.where(obs, p_ge, 0.0).sum()
            var_sum = np.where(obs, p_ge * (1.0 - p_ge), 0.0).sum()
            if var_sum < _DENOM_FLOOR:
                skipped += 1
                continue
            step = float(np.clip((p_ge_sum - ge_counts[j]) / var_sum, -cfg.step_clamp, cfg.step_clamp))
            ll0 = K.total_loglik(x, beta, delta, tau)

            def ll_tau(v, j=j):
                trial = tau.copy()
                trial[j] = v
                return K.total_loglik(x, beta, delta, trial)

            tau[j] = _backtrack_scalar(ll_tau, tau[j], step, ll0)

        # likelihood-preserving re-centering: thresholds to sum zero,
        # difficulties to mean zero, persons absorb the location
        shift = tau.mean()
        tau -= shift
        delta += shift
        center = delta.mean()
        delta -= center
        beta -= center

        ll_hist.append(K.total_loglik(x, beta, delta, tau))

        max_change = max(
            np.abs(beta - beta_prev).max(),
            np.abs(delta - delta_prev).max(),
            np.abs(tau - tau_prev).max(),
        )
        if max_change < cfg.tolerance:
            e, w = K.esw(beta, delta, tau)
            e_rows, e_cols = _masked_sums(e, obs)
            if (
                np.abs(t_person - e_rows).max() < cfg.score_tolerance
                and np.abs(s_item - e_cols).max() < cfg.score_tolerance
            ):
                converged = True
                break

    e, w = K.esw(beta, delta, tau)
    _, w_cols = _masked_sums(w, obs)
    w_rows, _ = _masked_sums(w, obs)
    se_beta = 1.0 / np.sqrt(w_rows)
    se_delta = 1.0 / np.sqrt(w_cols)

    person_index = {n: k for k, n in enumerate(np.flatnonzero(prep.active_p))}
    item_index = {i: k for k, i in enumerate(np.flatnonzero(prep.active_i))}

    persons = []
    for n, pid in enumerate(matrix.person_ids):
        if n in person_index:
            k = person_index[n]
            persons.append(PersonParameters(pid, float(beta[k]), float(se_beta[k]), False))
        else:
            measure, se = _extreme_person_report(matrix, n, prep, delta, tau)
            persons.append(PersonParameters(pid, measure, se, True))
    items = []
    for i, iid in enumerate(matrix.item_ids):
        if i in item_index:
            k = item_index[i]
            items.append(ItemParameters(iid, float(delta[k]), float(se_delta[k]), False))
        else:
            difficulty, se = _extreme_item_report(matrix, i, prep, beta, tau)
            items.append(ItemParameters(iid, difficulty, se, True))

    return CalibrationResult(
        items=tuple(items),
        persons=tuple(persons),
        thresholds=tuple(float(t) for t in tau),
        converged=converged,
        iterations=sweeps,
        log_likelihood=float(ll_hist[-1]) if ll_hist else float("nan"),
        excluded_persons=tuple(str(p) for p in np.array(matrix.person_ids)[~prep.active_p]),
        excluded_items=tuple(str(i) for i in np.array(matrix.item_ids)[~prep.active_i]),
        category_collapse=prep.collapse,
        config=cfg,
        loglik_by_sweep=tuple(ll_hist),
        skipped_updates=skipped,
    )


def _collapse_row(values: np.ndarray, observed_values: np.ndarray, top: int) -> np.ndarray:
    """Map raw codes onto the collapsed scale (missing kept as -1); codes that
    were never observed in the active data round down to the nearest rank."""
    obs = values >= 0
    ranks = np.searchsorted(observed_values, values, side="right") - 1
    return np.where(obs, np.clip(ranks, 0, top), -1)


def _solve_expected_total(target, deltas_or_beta, tau, solve_for_person):
    """Bisection for the measure (or difficulty) whose expected total equals
    ``target``; the expected total is strictly monotone in the parameter."""
    lo, hi = -30.0, 30.0

    def total(v):
        if solve_for_person:
            return float(np.sum(expected_score(np.full_like(deltas_or_beta, v), deltas_or_beta, tau)))
        return float(np.sum(expected_score(deltas_or_beta, np.full_like(deltas_or_beta, v), tau)))

    increasing = solve_for_person
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (total(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def _extreme_person_report(matrix, n, prep, delta, tau):
    row = _collapse_row(matrix.cells[n], prep.observed_values, prep.top)
    mask = (row >= 0) & prep.active_i
    count = int(mask.sum())
    if count == 0:
        return None, None
    total = float(row[mask].sum())
    adjusted = 0.25 if total <= 0 else count * prep.top - 0.25 if total >= count * prep.top else total
    deltas = delta[_active_positions(prep.active_i, mask)]
    measure = _solve_expected_total(adjusted, deltas, tau, solve_for_person=True)
    info = float(np.sum(score_variance(np.full_like(deltas, measure), deltas, tau)))
    return float(measure), float(1.0 / np.sqrt(info)) if info > 0 else None


def _extreme_item_report(matrix, i, prep, beta, tau):
    col = _collapse_row(matrix.cells[:, i], prep.observed_values, prep.top)
    mask = (col >= 0) & prep.active_p
    count = int(mask.sum())
    if count == 0:
        return None, None
    total = float(col[mask].sum())
    adjusted = 0.25 if total <= 0 else count * prep.top - 0.25 if total >= count * prep.top else total
    betas = beta[_active_positions(prep.active_p, mask)]
    difficulty = _solve_expected_total(adjusted, betas, tau, solve_for_person=False)
    info = float(np.sum(score_variance(betas, np.full_like(betas, difficulty), tau)))
    return float(difficulty), float(1.0 / np.sqrt(info)) if info > 0 else None


def _active_positions(active: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Positions within the active-only arrays of the active entries selected
    by ``mask`` (a full-length boolean)."""
    lookup = np.cumsum(active) - 1
    return lookup[mask]


def standard_errors(matrix: CodedMatrix, result: CalibrationResult):
    """Recompute standard errors at the calibrated parameter values; returns
    updated ``(items, persons)`` tuples."""
    prep = _prepare(matrix, warn=False)
    beta = np.array([result.person(p).measure for p in np.array(matrix.person_ids)[prep.active_p]])
    delta = np.array([result.item(i).difficulty for i in np.array(matrix.item_ids)[prep.active_i]])
    tau = np.asarray(result.thresholds, dtype=float)
    obs = prep.x >= 0
    _, w = K.esw(beta, delta, tau)
    w_rows, w_cols = _masked_sums(w, obs)
    se_beta = dict(zip(np.array(matrix.person_ids)[prep.active_p], 1.0 / np.sqrt(w_rows)))
    se_delta = dict(zip(np.array(matrix.item_ids)[prep.active_i], 1.0 / np.sqrt(w_cols)))
    items = tuple(
        ItemParameters(it.item_id, it.difficulty, float(se_delta[it.item_id]), it.extreme)
        if it.item_id in se_delta
        else it
        for it in result.items
    )
    persons = tuple(
        PersonParameters(p.person_id, p.measure, float(se_beta[p.person_id]), p.extreme)
        if p.person_id in se_beta
        else p
        for p in result.persons
    )
    return items, persons
