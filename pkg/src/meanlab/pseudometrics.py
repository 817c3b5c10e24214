"""Finite-window estimators for the five orbit pseudometrics.

All estimators share one mechanism: materialize the per-index difference
series over the largest scheduled window, then reduce prefixes.  The limsup
is realized as the max over post-burn-in windows; the density-threshold
metrics search the coupled epsilon by coarse grid plus bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .systems import Observable, SystemHandle, orbit_series
from .windows import DEFAULT_MESH, Schedule, Window, enumerate_window

F_KINDS = ("df_L2", "df_L1", "rho_f")
ORBIT_KINDS = ("db", "rho_b")

CONVERGENCE_RTOL = 0.05
_RHO_BISECT_ITERS = 48


@dataclass
class MetricEstimate:
    kind: str
    value: float
    per_window: list = field(default_factory=list)
    converged: bool = False


def top_window(s: SystemHandle, sched: Schedule, mesh: float = DEFAULT_MESH) -> Window:
    return Window(sched.max_size, kind=s.group_kind, d=s.group_dim, mesh=mesh)


def difference_series(s: SystemHandle, x, y, window: Window,
                      f: Observable | None = None) -> np.ndarray:
    """|f(T^g x) - f(T^g y)| over the window, or dist(T^g x, T^g y) when f is None."""
    if f is None:
        return np.asarray(s.dist_series(x, y, window), dtype=float)
    vx = orbit_series(s, f, x, window).values
    vy = orbit_series(s, f, y, window).values
    return np.abs(vx - vy)


def _window_counts(sched: Schedule, window: Window) -> list[int]:
    counts = []
    for n in sched.sizes:
        w = Window(n, kind=window.kind, d=window.d, mesh=window.mesh)
        counts.append(w.count)
    return counts


def _prefix_indexers(sched: Schedule, window: Window):
    """Per scheduled size, an object selecting that window's entries out of
    the top window's lexicographic enumeration."""
    if window.d == 1:
        return _window_counts(sched, window)
    pts, _ = enumerate_window(window)
    masks = []
    for n in sched.sizes:
        w = Window(n, kind=window.kind, d=window.d, mesh=window.mesh)
        limit = w.axis_values()[-1] + (1.0 if window.kind == "discrete" else w.mesh)
        masks.append(np.all(pts < limit - 1e-12, axis=1))
    return masks


def _per_window_means(values: np.ndarray, indexers) -> list[float]:
    out = []
    if isinstance(indexers[0], (int, np.integer)):
        csum = np.cumsum(values)
        for cnt in indexers:
            out.append(float(csum[cnt - 1] / cnt))
    else:
        for mask in indexers:
            out.append(float(values[mask].mean()))
    return out


def _converged(tail: list[float]) -> bool:
    if len(tail) < 2:
        return False
    scale = max(abs(tail[-1]), 1e-12)
    return abs(tail[-1] - tail[-2]) <= CONVERGENCE_RTOL * scale


def _avg_estimate(kind: str, series: np.ndarray, sched: Schedule,
                  indexers) -> MetricEstimate:
    if kind == "df_L2":
        vals = [float(np.sqrt(v)) for v in _per_window_means(series ** 2, indexers)]
    else:
        vals = _per_window_means(series, indexers)
    per_window = list(zip(sched.sizes, vals))
    tail = sched.tail(vals)
    return MetricEstimate(kind=kind, value=max(tail), per_window=per_window,
                          converged=_converged(tail))


def _upper_density(series: np.ndarray, eps: float, sched: Schedule,
                   indexers) -> float:
    return max(sched.tail(_per_window_means((series > eps).astype(float), indexers)))


def rho_value(series: np.ndarray, sched: Schedule, indexers, cap: float) -> float:
    """inf{eps > 0 : upper-density(series > eps) < eps}, coarse geometric grid
    refined by bisection (the admissible set is an up-set in eps)."""
    if float(series.max(initial=0.0)) <= 1e-15:
        return 0.0

    def admissible(eps):
        return _upper_density(series, eps, sched, indexers) < eps

    hi = cap
    if not admissible(hi):
        return cap
    lo = None
    eps = cap
    for _ in range(16):
        eps /= 2.0
        if admissible(eps):
            hi = eps
        else:
            lo = eps
            break
    if lo is None:
        lo = 0.0
    for _ in range(_RHO_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _rho_estimate(kind: str, series: np.ndarray, sched: Schedule, indexers,
                  cap: float) -> MetricEstimate:
    value = rho_value(series, sched, indexers, cap)
    dens = _per_window_means((series > value).astype(float), indexers)
    per_window = list(zip(sched.sizes, dens))
    return MetricEstimate(kind=kind, value=value, per_window=per_window,
                          converged=_converged(sched.tail(dens)))


def f_pseudometric(kind: str, s: SystemHandle, f: Observable, x, y,
                   sched: Schedule, mesh: float = DEFAULT_MESH) -> MetricEstimate:
    """Observable-relative pseudometrics: windowed L2 / L1 averages of
    |f(T^g x) - f(T^g y)|, or the coupled density threshold (rho_f)."""
    if kind not in F_KINDS:
        raise InvalidArgument(f"unknown f-pseudometric kind {kind!r}")
    w = top_window(s, sched, mesh)
    series = difference_series(s, x, y, w, f=f)
    indexers = _prefix_indexers(sched, w)
    if kind == "rho_f":
        return _rho_estimate(kind, series, sched, indexers,
                             cap=max(2.0 * f.sup_bound, 1.0))
    return _avg_estimate(kind, series, sched, indexers)


def orbit_pseudometric(kind: str, s: SystemHandle, x, y, sched: Schedule,
                       mesh: float = DEFAULT_MESH) -> MetricEstimate:
    """Besicovitch-type pseudometrics on orbits of the ambient metric."""
    if kind not in ORBIT_KINDS:
        raise InvalidArgument(f"unknown orbit pseudometric kind {kind!r}")
    w = top_window(s, sched, mesh)
    series = difference_series(s, x, y, w, f=None)
    indexers = _prefix_indexers(sched, w)
    if kind == "rho_b":
        return _rho_estimate(kind, series, sched, indexers,
                             cap=max(s.diameter, 1.0))
    return _avg_estimate("db", series, sched, indexers)


@dataclass
class EquivalenceReport:
    n_pairs: int
    n_checks: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def equivalence_check(s: SystemHandle, f: Observable, pairs, sched: Schedule,
                      eps_grid=None, mesh: float = DEFAULT_MESH) -> EquivalenceReport:
    """Check, on finite-window estimates, the two implications tying the
    density-threshold metric to the L1/L2 averages:

      rho < eps/2  implies  L1 < eps
      L2^2 < eps^3 implies  rho < eps

    Requires |f| <= 1/2 (the normalization under which they hold).
    """
    if f.sup_bound > 0.5 + 1e-12:
        raise InvalidArgument("equivalence_check requires sup|f| <= 1/2")
    if eps_grid is None:
        eps_grid = [2.0 ** -k for k in range(8)]
    pairs = list(pairs)
    w = top_window(s, sched, mesh)
    indexers = _prefix_indexers(sched, w)
    cap = max(2.0 * f.sup_bound, 1.0)
    violations = []
    n_checks = 0
    for idx, (x, y) in enumerate(pairs):
        series = difference_series(s, x, y, w, f=f)
        d1 = max(sched.tail(_per_window_means(series, indexers)))
        d2 = max(float(np.sqrt(v))
                 for v in sched.tail(_per_window_means(series ** 2, indexers)))
        rho = rho_value(series, sched, indexers, cap)
        for eps in eps_grid:
            n_checks += 2
            if rho < eps / 2 and not d1 < eps:
                violations.append({"pair": idx, "eps": eps, "rule": "rho->L1",
                                   "rho": rho, "d1": d1})
            if d2 ** 2 < eps ** 3 and not rho < eps:
                violations.append({"pair": idx, "eps": eps, "rule": "L2->rho",
                                   "rho": rho, "d2": d2})
    return EquivalenceReport(n_pairs=len(pairs), n_checks=n_checks,
                             violations=violations)
