"""Empirical classifiers for mean sensitivity / equicontinuity in the
topological, observable-relative, and measure-relative flavors.

"Every open set / every positive-measure set" is approximated by delta-balls
around measure-sampled centers.  The delta search descends geometrically; for
symbolic systems the radius is tracked as log2(delta) so cylinder depths far
beyond float underflow stay reachable.  Verdict ties break toward
`inconclusive`: a dichotomy is never claimed from mixed finite data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgument, SamplingExhausted
from .pseudometrics import difference_series, rho_value, _prefix_indexers, \
    _per_window_means, top_window
from .spectral import FrequencyGrid, almost_periodicity_probe, \
    discrete_spectrum_score, spectrum_scan
from .systems import Observable, SystemHandle, as_rng
from .windows import DEFAULT_MESH, Schedule, geometric_schedule

MEAN_EQUICONTINUOUS = "mean_equicontinuous"
MEAN_SENSITIVE = "mean_sensitive"
INCONCLUSIVE = "inconclusive"

TOPOLOGICAL = "topological"
F_RELATIVE = "f_relative"
MU_RELATIVE = "mu_relative"
MU_F_RELATIVE = "mu_f_relative"

# metric backing each flavor's sensitivity test; the mu_f equicontinuity
# search uses the density-threshold metric instead (they are equivalent)
_SENS_METRIC = {TOPOLOGICAL: "db", MU_RELATIVE: "db",
                F_RELATIVE: "df_L2", MU_F_RELATIVE: "df_L2"}
_EQUI_METRIC = {TOPOLOGICAL: "db", MU_RELATIVE: "db",
                F_RELATIVE: "df_L2", MU_F_RELATIVE: "rho_f"}

DEFAULT_EPS_GRID = tuple(2.0 ** -k for k in range(8, -1, -1))  # 2^-8 .. 1

# base radii per the sampler defaults, then a sparse deep descent
BASE_LOG2_DELTAS = tuple(float(-k) for k in range(2, 11))
DEEP_LOG2_DELTAS = tuple(float(-(16 * 4 ** k)) for k in range(10))  # -16 .. -4194304

_PLATEAU_RATIO = 0.7
_PLATEAU_SPAN = 3


@dataclass(frozen=True)
class SamplerConfig:
    n_centers: int = 32
    n_per_ball: int = 16
    log2_deltas: tuple = BASE_LOG2_DELTAS
    deep_log2_deltas: tuple = DEEP_LOG2_DELTAS
    seed: int = 0


@dataclass
class Verdict:
    label: str
    flavor: str
    epsilon: float = 0.0
    evidence: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)


@dataclass
class ExpansivityReport:
    epsilon: float
    fraction: float
    n_pairs: int


def pair_estimate(s: SystemHandle, f: Optional[Observable], metric: str,
                  x, y, sched: Schedule, mesh: float = DEFAULT_MESH) -> float:
    """Tail-max pseudometric estimate for one pair under the named metric."""
    w = top_window(s, sched, mesh)
    series = difference_series(s, x, y, w, f=f if metric != "db" else None)
    indexers = _prefix_indexers(sched, w)
    if metric == "db" or metric == "df_L1":
        return max(sched.tail(_per_window_means(series, indexers)))
    if metric == "df_L2":
        return max(float(np.sqrt(v))
                   for v in sched.tail(_per_window_means(series ** 2, indexers)))
    if metric == "rho_f":
        return rho_value(series, sched, indexers,
                         cap=max(2.0 * f.sup_bound, 1.0))
    raise InvalidArgument(f"unknown metric {metric!r}")


class BallEstimator:
    """Caches the max in-ball pair estimate per (center index, log2 delta).

    All sampling is keyed deterministically off the root seed so repeated
    searches reuse identical balls.
    """

    def __init__(self, s: SystemHandle, f: Optional[Observable], metric: str,
                 sampler: SamplerConfig, sched: Schedule,
                 mesh: float = DEFAULT_MESH):
        self.s, self.f, self.metric = s, f, metric
        self.sampler, self.sched, self.mesh = sampler, sched, mesh
        root = as_rng(sampler.seed)
        self.centers = [s.sample_mu(r) for r in root.spawn(sampler.n_centers)]
        self._cache: dict = {}
        self.max_depth = s.params.get("max_ball_depth")

    def depth_ok(self, log2_delta: float) -> bool:
        return self.max_depth is None or -log2_delta <= self.max_depth

    def ball_max(self, ci: int, log2_delta: float) -> float:
        key = (ci, log2_delta)
        if key in self._cache:
            return self._cache[key]
        seed = np.random.SeedSequence(
            [self.sampler.seed, ci, int(abs(log2_delta) * 16)])
        rng = np.random.default_rng(seed)
        pts = self.s.sample_ball_log2(self.centers[ci], log2_delta,
                                      self.sampler.n_per_ball, rng)
        best = 0.0
        for a, b in zip(pts[0::2], pts[1::2]):
            best = max(best, pair_estimate(self.s, self.f, self.metric, a, b,
                                           self.sched, self.mesh))
        self._cache[key] = best
        return best

    def level_stats(self, log2_delta: float) -> tuple[float, float]:
        vals = [self.ball_max(ci, log2_delta)
                for ci in range(self.sampler.n_centers)]
        return min(vals), max(vals)

    def descent(self):
        for d in list(self.sampler.log2_deltas) + list(self.sampler.deep_log2_deltas):
            if self.depth_ok(d):
                yield d


def _descend_min(est: BallEstimator, eps_min: float):
    """Walk the delta descent tracking min-over-balls of the in-ball max;
    stop when estimates drop below the smallest grid eps (not sensitive) or
    plateau well above it (sensitive)."""
    trace = []
    overall = np.inf
    verdict = "exhausted"
    for log2d in est.descent():
        lvl_min, lvl_max = est.level_stats(log2d)
        trace.append((log2d, lvl_min, lvl_max))
        overall = min(overall, lvl_min)
        if overall < eps_min:
            verdict = "decayed"
            break
        deep = [m for d, m, _ in trace if d < BASE_LOG2_DELTAS[-1]]
        if len(deep) >= _PLATEAU_SPAN and \
                deep[-1] >= _PLATEAU_RATIO * deep[-_PLATEAU_SPAN]:
            verdict = "plateau"
            break
    return overall, trace, verdict


def mean_sensitivity_test(s: SystemHandle, f: Optional[Observable],
                          sampler: SamplerConfig = SamplerConfig(),
                          sched: Schedule = None,
                          flavor: str = None,
                          eps_grid=DEFAULT_EPS_GRID,
                          mesh: float = DEFAULT_MESH,
                          estimator: BallEstimator = None) -> Verdict:
    """Sensitive iff some grid eps is exceeded by a pair inside every sampled
    ball at every tested radius; otherwise the equicontinuity search decides."""
    sched = sched or geometric_schedule()
    if flavor is None:
        flavor = TOPOLOGICAL if f is None else F_RELATIVE
    if f is None and flavor in (F_RELATIVE, MU_F_RELATIVE):
        raise InvalidArgument("observable-relative flavors need an observable")
    est = estimator or BallEstimator(s, f, _SENS_METRIC[flavor], sampler,
                                     sched, mesh)
    eps_sorted = sorted(eps_grid)
    overall, trace, how = _descend_min(est, eps_sorted[0])
    params = {"flavor": flavor, "n_centers": sampler.n_centers,
              "n_per_ball": sampler.n_per_ball, "seed": sampler.seed}
    evidence = {"descent": trace, "stop": how, "min_ball_max": overall}
    if overall > eps_sorted[0] and how in ("plateau", "exhausted"):
        eps_star = max(e for e in eps_sorted if e < overall)
        return Verdict(MEAN_SENSITIVE, flavor, epsilon=eps_star,
                       evidence=evidence, params=params)
    equi = mean_equicontinuity_test(s, f, eps_grid, sampler, sched,
                                    flavor=flavor, mesh=mesh)
    if equi.label == MEAN_EQUICONTINUOUS:
        equi.evidence["sensitivity_descent"] = trace
        return equi
    return Verdict(INCONCLUSIVE, flavor, evidence=evidence, params=params)


def _equi_search(est: BallEstimator, eps_grid, center_ids) -> tuple[bool, dict]:
    """For each eps find a radius whose sampled balls are all eps-small;
    returns the (eps -> log2 delta) table, or failure."""
    table = {}
    for eps in sorted(eps_grid, reverse=True):
        found = None
        maxima = []
        for log2d in est.descent():
            m = max(est.ball_max(ci, log2d) for ci in center_ids)
            maxima.append(m)
            if m <= eps:
                found = log2d
                break
            if len(maxima) >= len(est.sampler.log2_deltas) + _PLATEAU_SPAN and \
                    maxima[-1] >= _PLATEAU_RATIO * maxima[-_PLATEAU_SPAN]:
                break
        if found is None:
            return False, {"failed_eps": eps, "table": table}
        table[eps] = found
    return True, {"table": table}


def mean_equicontinuity_test(s: SystemHandle, f: Optional[Observable],
                             eps_grid=DEFAULT_EPS_GRID,
                             sampler: SamplerConfig = SamplerConfig(),
                             sched: Schedule = None,
                             flavor: str = None,
                             mesh: float = DEFAULT_MESH,
                             estimator: BallEstimator = None) -> Verdict:
    """Equicontinuous iff every grid eps admits a radius with zero sampled
    violations; records the (eps, delta) table found."""
    sched = sched or geometric_schedule()
    if flavor is None:
        flavor = TOPOLOGICAL if f is None else F_RELATIVE
    est = estimator or BallEstimator(s, f, _EQUI_METRIC[flavor], sampler,
                                     sched, mesh)
    ok, info = _equi_search(est, eps_grid, range(sampler.n_centers))
    params = {"flavor": flavor, "n_centers": sampler.n_centers,
              "n_per_ball": sampler.n_per_ball, "seed": sampler.seed}
    label = MEAN_EQUICONTINUOUS if ok else INCONCLUSIVE
    return Verdict(label, flavor, evidence=info, params=params)


def mu_mean_equicontinuity_test(s: SystemHandle, f: Optional[Observable],
                                tau: float = 0.05,
                                sampler: SamplerConfig = SamplerConfig(),
                                sched: Schedule = None,
                                flavor: str = None,
                                eps_grid=DEFAULT_EPS_GRID,
                                mesh: float = DEFAULT_MESH,
                                estimator: BallEstimator = None) -> Verdict:
    """Lusin-style surrogate: drop the worst tau-fraction of sampled centers,
    then run the (eps, delta) search on the survivors."""
    if not 0.0 < tau < 0.5:
        raise InvalidArgument("tau must lie in (0, 1/2)")
    sched = sched or geometric_schedule()
    if flavor is None:
        flavor = MU_RELATIVE if f is None else MU_F_RELATIVE
    est = estimator or BallEstimator(s, f, _EQUI_METRIC[flavor], sampler,
                                     sched, mesh)
    probe_depth = est.sampler.log2_deltas[-1]
    scores = [est.ball_max(ci, probe_depth) for ci in range(sampler.n_centers)]
    n_drop = int(np.ceil(tau * sampler.n_centers))
    order = np.argsort(scores)
    survivors = [int(i) for i in order[:sampler.n_centers - n_drop]]
    ok, info = _equi_search(est, eps_grid, survivors)
    info["dropped_centers"] = [int(i) for i in order[sampler.n_centers - n_drop:]]
    params = {"flavor": flavor, "tau": tau, "n_centers": sampler.n_centers,
              "seed": sampler.seed}
    label = MEAN_EQUICONTINUOUS if ok else INCONCLUSIVE
    return Verdict(label, flavor, evidence=info, params=params)


def expansivity_fraction(s: SystemHandle, f: Optional[Observable], eps: float,
                         n_pairs: int, sched: Schedule = None, seed: int = 0,
                         mesh: float = DEFAULT_MESH) -> ExpansivityReport:
    """Fraction of independent measure-sampled pairs whose pseudometric
    estimate exceeds eps."""
    if eps <= 0:
        raise InvalidArgument("eps must be positive")
    sched = sched or geometric_schedule()
    metric = "db" if f is None else "df_L2"
    rng = as_rng(seed)
    hits = 0
    per_pair = []
    for r in rng.spawn(n_pairs):
        r1, r2 = r.spawn(2)
        x, y = s.sample_mu(r1), s.sample_mu(r2)
        v = pair_estimate(s, f, metric, x, y, sched, mesh)
        per_pair.append(v)
        hits += v > eps
    return ExpansivityReport(epsilon=eps, fraction=hits / n_pairs,
                             n_pairs=n_pairs)


def inverse_invariance_check(s: SystemHandle, f: Optional[Observable], g,
                             eps: float, log2_delta: float,
                             n_samples: int = 8, sched: Schedule = None,
                             seed: int = 0, mesh: float = DEFAULT_MESH) -> dict:
    """If a sampled center passes (eps, delta), its g-image must pass
    (eps, delta') where delta' shrinks delta by the sampled expansion factor
    of T^g on nearby pairs."""
    sched = sched or geometric_schedule()
    rng = as_rng(seed)
    x = s.sample_mu(rng)
    metric = "db" if f is None else "df_L2"

    def ball_pass(center, l2d):
        pts = s.sample_ball_log2(center, l2d, n_samples, rng)
        vals = [pair_estimate(s, f, metric, a, b, sched, mesh)
                for a, b in zip(pts[0::2], pts[1::2])]
        return max(vals, default=0.0) <= eps

    # sampled expansion factor of T^g on the delta-ball
    pts = s.sample_ball_log2(x, log2_delta, n_samples, rng)
    factor = 1.0
    for a, b in zip(pts[0::2], pts[1::2]):
        d0 = s.dist(a, b)
        if d0 <= 0:
            continue
        factor = max(factor, s.dist(s.act(g, a), s.act(g, b)) / d0)
    log2_delta_prime = log2_delta - float(np.log2(factor))
    passed_center = ball_pass(x, log2_delta)
    passed_image = ball_pass(s.act(g, x), log2_delta_prime)
    return {"passed_center": passed_center, "passed_image": passed_image,
            "log2_delta_prime": log2_delta_prime,
            "holds": (not passed_center) or passed_image}


@dataclass
class ClassifyConfig:
    sampler: SamplerConfig = SamplerConfig()
    sched: Schedule = None
    tau: float = 0.05
    mesh: float = DEFAULT_MESH
    eps_grid: tuple = DEFAULT_EPS_GRID
    probe_eps: float = 0.2
    score_threshold: float = 0.9
    spectrum_grid: FrequencyGrid = None
    spectral_sched: Schedule = None
    seed: int = 0

    def __post_init__(self):
        if self.sched is None:
            self.sched = geometric_schedule(64, 7)
        if self.spectral_sched is None:
            self.spectral_sched = self.sched
        if self.spectrum_grid is None:
            self.spectrum_grid = FrequencyGrid.line(0.0, 1.0, 1e-3)


@dataclass
class DichotomyReport:
    system: str
    verdicts: dict
    scores: dict
    probes: dict
    implications: dict
    violations: list


def dichotomy_report(s: SystemHandle, f_list, config: ClassifyConfig = None) -> DichotomyReport:
    """Run every flavor on the system and each observable, plus spectral
    scores, and check the implication matrix tying them together."""
    if not f_list:
        raise InvalidArgument("f_list must be nonempty")
    config = config or ClassifyConfig()
    sampler, sched, mesh = config.sampler, config.sched, config.mesh
    verdicts, scores, probes = {}, {}, {}
    implications, violations = {}, []

    def record(name, ok):
        implications[name] = bool(ok)
        if not ok:
            violations.append(name)

    topo_sens = mean_sensitivity_test(s, None, sampler, sched,
                                      flavor=TOPOLOGICAL, mesh=mesh,
                                      eps_grid=config.eps_grid)
    topo_equi = mean_equicontinuity_test(s, None, config.eps_grid, sampler,
                                         sched, flavor=TOPOLOGICAL, mesh=mesh)
    mu_equi = mu_mean_equicontinuity_test(s, None, config.tau, sampler, sched,
                                          flavor=MU_RELATIVE,
                                          eps_grid=config.eps_grid, mesh=mesh)
    verdicts[(TOPOLOGICAL, None)] = (topo_sens, topo_equi)
    verdicts[(MU_RELATIVE, None)] = (topo_sens, mu_equi)
    record("topological:no_double_positive",
           not (topo_sens.label == MEAN_SENSITIVE
                and topo_equi.label == MEAN_EQUICONTINUOUS))

    for f in f_list:
        x = s.sample_mu(config.seed + 7)
        scan = spectrum_scan(s, f, x, config.spectrum_grid,
                             config.spectral_sched, mesh=mesh)
        scores[f.tag] = discrete_spectrum_score(scan)
        probes[f.tag] = almost_periodicity_probe(
            s, f, x, config.probe_eps, config.spectral_sched, mesh=mesh)

        f_sens = mean_sensitivity_test(s, f, sampler, sched,
                                       flavor=F_RELATIVE, mesh=mesh,
                                       eps_grid=config.eps_grid)
        f_equi = mean_equicontinuity_test(s, f, config.eps_grid, sampler,
                                          sched, flavor=F_RELATIVE, mesh=mesh)
        muf_sens = mean_sensitivity_test(s, f, sampler, sched,
                                         flavor=MU_F_RELATIVE, mesh=mesh,
                                         eps_grid=config.eps_grid)
        muf_equi = mu_mean_equicontinuity_test(s, f, config.tau, sampler,
                                               sched, flavor=MU_F_RELATIVE,
                                               eps_grid=config.eps_grid,
                                               mesh=mesh)
        verdicts[(F_RELATIVE, f.tag)] = (f_sens, f_equi)
        verdicts[(MU_F_RELATIVE, f.tag)] = (muf_sens, muf_equi)

        record(f"{f.tag}:f:no_double_positive",
               not (f_sens.label == MEAN_SENSITIVE
                    and f_equi.label == MEAN_EQUICONTINUOUS))
        record(f"{f.tag}:mu_f:no_double_positive",
               not (muf_sens.label == MEAN_SENSITIVE
                    and muf_equi.label == MEAN_EQUICONTINUOUS))
        # topological mean equicontinuity implies every f-relative one
        if topo_equi.label == MEAN_EQUICONTINUOUS:
            record(f"{f.tag}:topo_equi_implies_f_equi",
                   f_equi.label == MEAN_EQUICONTINUOUS)
        # almost periodicity of f is the complement of mu-f-mean sensitivity
        record(f"{f.tag}:almost_periodic_iff_not_mean_sensitive",
               probes[f.tag].consistent == (muf_sens.label != MEAN_SENSITIVE))

    avg_score = float(np.mean(list(scores.values())))
    record("mu_equi_matches_spectral_score",
           (mu_equi.label == MEAN_EQUICONTINUOUS)
           == (avg_score >= config.score_threshold))
    return DichotomyReport(system=s.tag, verdicts=verdicts, scores=scores,
                           probes=probes, implications=implications,
                           violations=violations)
