"""Built-in dynamical systems: point spaces, actions, metrics, and measure samplers.

Every handle carries vectorized fast paths (`orbit_views`, `dist_series`) so the
window estimators stay O(window) instead of O(window * python-call).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument, SamplingExhausted
from .windows import CONTINUOUS, DISCRETE, Window

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

DISCRETE_SPECTRUM = "discrete_spectrum"
WEAKLY_MIXING = "weakly_mixing"
UNKNOWN = "unknown"

DEFAULT_HORIZON = 8192
_HORIZON_SLACK = 64


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def is_irrational(a: float, terms: int = 40, tol: float = 1e-12) -> bool:
    """Continued-fraction guard: irrational iff the expansion does not
    terminate within `terms` partial quotients at tolerance `tol`."""
    x = a % 1.0
    for _ in range(terms):
        if x < tol:
            return False
        x = (1.0 / x) % 1.0
    return True


@dataclass(frozen=True)
class SymbolicPoint:
    """A one-sided symbol sequence, materialized up to a finite horizon.

    `phase` is kept for rotation-coded sequences (Sturmian family) and
    `offset` for fixed-word systems; both exist so delta-balls can be sampled
    exactly instead of by rejection.
    """

    symbols: np.ndarray
    phase: Optional[float] = None
    offset: Optional[int] = None

    def __len__(self):
        return len(self.symbols)


@dataclass(frozen=True)
class Observable:
    """Complex-valued function of a point, evaluated on local views.

    `fn` maps an array of local views (count, view_width) to complex values;
    `depth` is how many leading symbols a symbolic view must expose.
    """

    tag: str
    sup_bound: float
    fn: Callable[[np.ndarray], np.ndarray]
    depth: int = 1

    def __call__(self, views: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(views), dtype=complex)


@dataclass
class OrbitSeries:
    values: np.ndarray
    window: Window


@dataclass
class SystemHandle:
    tag: str
    point_kind: str
    group_kind: str
    known_class: str
    diameter: float
    act_fn: Callable
    dist_fn: Callable
    sample_mu_fn: Callable
    sample_ball_fn: Callable
    orbit_views_fn: Callable
    dist_series_fn: Callable
    group_dim: int = 1
    params: dict = field(default_factory=dict)

    def act(self, g, x):
        return self.act_fn(g, x)

    def dist(self, x, y) -> float:
        return float(self.dist_fn(x, y))

    def sample_mu(self, seed):
        return self.sample_mu_fn(as_rng(seed))

    def sample_ball(self, center, delta: float, count: int, seed):
        """Points within distance delta of `center`, drawn from the measure
        restricted near the center."""
        if delta <= 0:
            raise InvalidArgument("delta must be positive")
        return self.sample_ball_log2(center, float(np.log2(delta)), count, seed)

    def sample_ball_log2(self, center, log2_delta: float, count: int, seed):
        """Same as sample_ball with the radius given as log2(delta); symbolic
        systems accept radii far below float underflow this way."""
        return self.sample_ball_fn(center, log2_delta, count, as_rng(seed))

    def orbit_views(self, x, window: Window, depth: int = 1) -> np.ndarray:
        self._check_window(window)
        return self.orbit_views_fn(x, window, depth)

    def dist_series(self, x, y, window: Window) -> np.ndarray:
        self._check_window(window)
        return self.dist_series_fn(x, y, window)

    def _check_window(self, window: Window):
        if window.kind != self.group_kind:
            raise InvalidArgument(
                f"window kind {window.kind!r} does not match the "
                f"{self.group_kind!r} action of {self.tag!r}")
        if window.d != self.group_dim:
            raise InvalidArgument("window dimension does not match the action")


def orbit_series(s: SystemHandle, f: Observable, x, window: Window) -> OrbitSeries:
    """values[i] = f(T^{g_i} x) over the enumerated window."""
    views = s.orbit_views(x, window, f.depth)
    return OrbitSeries(values=f(views), window=window)


# ---------------------------------------------------------------------------
# torus rotations / flows

def _circle_dist(x, y):
    e = np.abs(np.asarray(x) - np.asarray(y)) % 1.0
    return float(np.max(np.minimum(e, 1.0 - e)))


def torus_rotation(alpha, *, flow: bool = False, tag: str = None) -> SystemHandle:
    """Rotation x -> x + j*alpha mod 1 on the torus, one coordinate per
    component of alpha.  `flow=True` makes it an R-action."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    for a in alpha:
        if not is_irrational(a):
            raise InvalidArgument(
                f"rotation angle {a} is rational to tolerance; degenerate")
    d_space = len(alpha)

    def act(j, x):
        return (np.asarray(x, dtype=float) + float(j) * alpha) % 1.0

    def sample_mu(rng):
        return rng.random(d_space)

    def sample_ball(center, log2_delta, count, rng):
        delta = min(2.0 ** max(log2_delta, -1060.0), 0.5)
        jit = rng.uniform(-delta, delta, size=(count, d_space))
        return list((np.asarray(center) + jit) % 1.0)

    def orbit_views(x, window, depth):
        t = window.axis_values()
        return (np.asarray(x)[None, :] + t[:, None] * alpha[None, :]) % 1.0

    def dist_series(x, y, window):
        return np.full(window.count, _circle_dist(x, y))

    return SystemHandle(
        tag=tag or ("torus_flow" if flow else "torus_rotation"),
        point_kind="torus",
        group_kind=CONTINUOUS if flow else DISCRETE,
        known_class=DISCRETE_SPECTRUM,
        diameter=0.5,
        act_fn=act, dist_fn=_circle_dist, sample_mu_fn=sample_mu,
        sample_ball_fn=sample_ball, orbit_views_fn=orbit_views,
        dist_series_fn=dist_series,
        params={"alpha": alpha.tolist(), "flow": flow},
    )


# ---------------------------------------------------------------------------
# symbolic systems (one-sided shifts)

_MAX_EXP = 64  # 2^-64 is below every tolerance used here
_MAX_CYLINDER_DEPTH = 1 << 23


def _sym_check(x):
    if not isinstance(x, SymbolicPoint):
        raise InvalidArgument("expected a SymbolicPoint")
    return x


def _sym_dist(x, y):
    a, b = _sym_check(x).symbols, _sym_check(y).symbols
    n = min(len(a), len(b))
    diff = np.flatnonzero(a[:n] != b[:n])
    if len(diff) == 0:
        return 0.0
    return 2.0 ** (-float(diff[0]))


def _sym_dist_series(x, y, window):
    count = window.count
    a, b = x.symbols, y.symbols
    n = min(len(a), len(b))
    if count > n:
        raise InvalidArgument("window exceeds the materialized horizon")
    diff = np.flatnonzero(a[:n] != b[:n])
    pos = np.arange(count)
    if len(diff) == 0:
        m = np.full(count, _MAX_EXP)
    else:
        j = np.searchsorted(diff, pos)
        m = np.where(j < len(diff), diff[np.minimum(j, len(diff) - 1)] - pos,
                     _MAX_EXP)
    out = 2.0 ** (-np.minimum(m, _MAX_EXP).astype(float))
    out[m >= _MAX_EXP] = 0.0  # beyond resolution counts as equal
    return out


def _sym_orbit_views(x, window, depth):
    count = window.count
    sym = x.symbols
    if count + depth - 1 > len(sym):
        raise InvalidArgument("window + depth exceeds the materialized horizon")
    return sliding_window_view(sym, depth)[:count].astype(float)


def _sym_act_factory(advance_phase=None):
    def act(j, x):
        j = int(j)
        if j < 0:
            raise InvalidArgument("shift actions are one-sided (j >= 0)")
        if j >= len(x.symbols):
            raise InvalidArgument("shift exceeds the materialized horizon")
        phase = advance_phase(j, x.phase) if (advance_phase and x.phase is not None) else None
        offset = x.offset + j if x.offset is not None else None
        return SymbolicPoint(x.symbols[j:], phase=phase, offset=offset)
    return act


def bernoulli_shift(p: float, alphabet=(0, 1), *,
                    horizon: int = DEFAULT_HORIZON, tag: str = None) -> SystemHandle:
    """Full shift with i.i.d. coordinates, P(symbol = alphabet[1]) = p."""
    if not 0.0 < p < 1.0:
        raise InvalidArgument("p must be in (0, 1)")
    if len(tuple(alphabet)) != 2:
        raise InvalidArgument("only binary alphabets are supported")
    horizon = int(horizon) + _HORIZON_SLACK

    def sample_mu(rng):
        return SymbolicPoint((rng.random(horizon) < p).astype(np.int8))

    def sample_ball(center, log2_delta, count, rng):
        m = int(np.clip(np.ceil(-log2_delta), 0, len(center.symbols)))
        out = []
        for _ in range(count):
            tail = (rng.random(horizon - m) < p).astype(np.int8)
            out.append(SymbolicPoint(np.concatenate([center.symbols[:m], tail])))
        return out

    return SystemHandle(
        tag=tag or f"bernoulli_shift_p{p}",
        point_kind="symbolic",
        group_kind=DISCRETE,
        known_class=WEAKLY_MIXING,
        diameter=1.0,
        act_fn=_sym_act_factory(), dist_fn=_sym_dist, sample_mu_fn=sample_mu,
        sample_ball_fn=sample_ball, orbit_views_fn=_sym_orbit_views,
        dist_series_fn=_sym_dist_series,
        params={"p": p, "horizon": horizon,
                "max_ball_depth": horizon - _HORIZON_SLACK},
    )


def _sturmian_coding(alpha: float, beta: float, length: int) -> np.ndarray:
    i = np.arange(length + 1, dtype=float)
    return (np.floor((i[1:]) * alpha + beta) - np.floor(i[:-1] * alpha + beta)).astype(np.int8)


def sturmian(alpha: float = GOLDEN, *, horizon: int = DEFAULT_HORIZON,
             tag: str = None, known_class: str = DISCRETE_SPECTRUM) -> SystemHandle:
    """Sturmian subshift of slope alpha, sampled through its rotation coding."""
    if not is_irrational(alpha):
        raise InvalidArgument("Sturmian slope must be irrational")
    alpha = float(alpha) % 1.0
    horizon = int(horizon) + _HORIZON_SLACK
    boundary = 1.0 - alpha

    def make_point(beta: float) -> SymbolicPoint:
        beta = float(beta) % 1.0
        return SymbolicPoint(_sturmian_coding(alpha, beta, horizon), phase=beta)

    def sample_mu(rng):
        return make_point(rng.random())

    def sample_ball(center, log2_delta, count, rng):
        # depth may exceed the horizon: the cylinder interval is computed
        # exactly in the phase, only materialized symbols are verified
        m = int(np.clip(np.ceil(-log2_delta), 1, _MAX_CYLINDER_DEPTH))
        vm = min(m, horizon)
        beta0 = center.phase
        p = (np.arange(m, dtype=float) * alpha + beta0) % 1.0
        low = np.where(p < boundary, 0.0, boundary)
        up = np.where(p < boundary, boundary, 1.0)
        room_down = float(np.min(p - low))
        room_up = float(np.min(up - p))
        out = []
        for _ in range(count):
            shrink = 1.0 - 1e-9
            for _attempt in range(40):
                u = rng.uniform(-room_down * shrink, room_up * shrink)
                pt = make_point(beta0 + u)
                if np.array_equal(pt.symbols[:vm], center.symbols[:vm]):
                    out.append(pt)
                    break
                shrink *= 0.5
            else:
                raise SamplingExhausted(
                    "could not sample inside the Sturmian cylinder")
        return out

    def advance(j, beta):
        return (beta + j * alpha) % 1.0

    return SystemHandle(
        tag=tag or f"sturmian_{alpha:.6f}",
        point_kind="symbolic",
        group_kind=DISCRETE,
        known_class=known_class,
        diameter=1.0,
        act_fn=_sym_act_factory(advance), dist_fn=_sym_dist,
        sample_mu_fn=sample_mu, sample_ball_fn=sample_ball,
        orbit_views_fn=_sym_orbit_views, dist_series_fn=_sym_dist_series,
        params={"alpha": alpha, "horizon": horizon},
    )


def _thue_morse_word(length: int) -> np.ndarray:
    w = np.array([0], dtype=np.int8)
    while len(w) < length:
        w = np.concatenate([w, 1 - w])
    return w[:length]


def substitution_subshift(rules: str, *, horizon: int = DEFAULT_HORIZON,
                          tag: str = None) -> SystemHandle:
    """Built-in substitution subshifts: 'fibonacci' (golden Sturmian coding)
    and 'thue_morse' (sampled from the fixed word)."""
    if rules == "fibonacci":
        # the Fibonacci word is the Sturmian coding of slope 1/phi^2
        alpha = 1.0 - GOLDEN  # = 2 - phi = 1/phi^2
        return sturmian(alpha, horizon=horizon, tag=tag or "fibonacci_substitution")
    if rules != "thue_morse":
        raise InvalidArgument(f"unknown substitution rules {rules!r}")

    horizon = int(horizon) + _HORIZON_SLACK
    offset_range = 1 << 16
    word = _thue_morse_word(offset_range + 2 * horizon)

    def sample_mu(rng):
        off = int(rng.integers(0, offset_range))
        return SymbolicPoint(word[off:off + horizon], offset=off)

    def sample_ball(center, log2_delta, count, rng):
        m = int(np.clip(np.ceil(-log2_delta), 1, horizon))
        if m > 512:
            raise SamplingExhausted(
                "prefix search beyond depth 512 is not supported for thue_morse")
        prefix = center.symbols[:m]
        search = word[:offset_range + horizon]
        hits = np.flatnonzero(
            np.all(sliding_window_view(search, m)[:offset_range] == prefix, axis=1))
        if len(hits) == 0:
            raise SamplingExhausted("no occurrence of the prefix found")
        picks = rng.choice(hits, size=count, replace=True)
        return [SymbolicPoint(word[o:o + horizon], offset=int(o)) for o in picks]

    return SystemHandle(
        tag=tag or "thue_morse",
        point_kind="symbolic",
        group_kind=DISCRETE,
        known_class=UNKNOWN,
        diameter=1.0,
        act_fn=_sym_act_factory(), dist_fn=_sym_dist, sample_mu_fn=sample_mu,
        sample_ball_fn=sample_ball, orbit_views_fn=_sym_orbit_views,
        dist_series_fn=_sym_dist_series,
        params={"rules": rules, "horizon": horizon, "max_ball_depth": 512},
    )


# ---------------------------------------------------------------------------
# products

def product_system(s1: SystemHandle, s2: SystemHandle, tag: str = None) -> SystemHandle:
    if s1.group_kind != s2.group_kind or s1.group_dim != s2.group_dim:
        raise InvalidArgument("product factors must share the same acting group")

    def act(j, x):
        return (s1.act(j, x[0]), s2.act(j, x[1]))

    def dist(x, y):
        return max(s1.dist(x[0], y[0]), s2.dist(x[1], y[1]))

    def sample_mu(rng):
        r1, r2 = rng.spawn(2)
        return (s1.sample_mu(r1), s2.sample_mu(r2))

    def sample_ball(center, log2_delta, count, rng):
        r1, r2 = rng.spawn(2)
        b1 = s1.sample_ball_fn(center[0], log2_delta, count, r1)
        b2 = s2.sample_ball_fn(center[1], log2_delta, count, r2)
        return list(zip(b1, b2))

    def orbit_views(x, window, depth):
        v1 = s1.orbit_views(x[0], window, depth)
        v2 = s2.orbit_views(x[1], window, depth)
        return np.hstack([v1, v2])

    def dist_series(x, y, window):
        return np.maximum(s1.dist_series(x[0], y[0], window),
                          s2.dist_series(x[1], y[1], window))

    if s1.known_class == s2.known_class == DISCRETE_SPECTRUM:
        known = DISCRETE_SPECTRUM
    else:
        known = UNKNOWN

    return SystemHandle(
        tag=tag or f"product({s1.tag},{s2.tag})",
        point_kind="product",
        group_kind=s1.group_kind,
        known_class=known,
        diameter=max(s1.diameter, s2.diameter),
        act_fn=act, dist_fn=dist, sample_mu_fn=sample_mu,
        sample_ball_fn=sample_ball, orbit_views_fn=orbit_views,
        dist_series_fn=dist_series,
        params={"factors": [s1.tag, s2.tag],
                "max_ball_depth": min(
                    (s.params["max_ball_depth"] for s in (s1, s2)
                     if s.params.get("max_ball_depth") is not None),
                    default=None)},
    )


# ---------------------------------------------------------------------------
# observables

def constant_observable(c: complex, tag: str = None) -> Observable:
    return Observable(tag=tag or f"const_{c}", sup_bound=abs(c),
                      fn=lambda v: np.full(len(v), c, dtype=complex))


def torus_character(k, scale: float = 1.0, tag: str = None) -> Observable:
    """x -> scale * exp(2 pi i <k, x>) on torus views."""
    k = np.atleast_1d(np.asarray(k, dtype=float))

    def fn(views):
        return scale * np.exp(2j * np.pi * (views[:, :len(k)] @ k))

    return Observable(tag=tag or f"char_{k.tolist()}", sup_bound=abs(scale), fn=fn)


def torus_cosine(k, scale: float = 0.5, tag: str = None) -> Observable:
    k = np.atleast_1d(np.asarray(k, dtype=float))

    def fn(views):
        return scale * np.cos(2 * np.pi * (views[:, :len(k)] @ k)) + 0j

    return Observable(tag=tag or f"cos_{k.tolist()}", sup_bound=abs(scale), fn=fn)


def symbol_at(shift: float = 0.0, scale: float = 1.0, tag: str = None) -> Observable:
    """symbol(x_0) mapped through scale * (x_0 - shift)."""

    def fn(views):
        return scale * (views[:, 0] - shift) + 0j

    sup = abs(scale) * max(abs(0.0 - shift), abs(1.0 - shift))
    return Observable(tag=tag or f"symbol(-{shift})*{scale}", sup_bound=sup, fn=fn)


def cylinder_indicator(word, shift: float = 0.0, tag: str = None) -> Observable:
    """Indicator of the cylinder fixing the first len(word) symbols,
    optionally centered by `shift`."""
    word = np.asarray(word, dtype=float)

    def fn(views):
        hit = np.all(views[:, :len(word)] == word[None, :], axis=1)
        return hit.astype(float) - shift + 0j

    sup = max(abs(1.0 - shift), abs(shift))
    return Observable(tag=tag or f"cyl_{word.astype(int).tolist()}",
                      sup_bound=sup, fn=fn, depth=len(word))


# ---------------------------------------------------------------------------
# registry

def make_system(spec: dict) -> SystemHandle:
    """Build a system from a declarative spec, e.g.
    {"kind": "torus_rotation", "alpha": [0.618...]}."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    builders = {
        "torus_rotation": lambda: torus_rotation(spec.get("alpha", GOLDEN),
                                                 flow=spec.get("flow", False)),
        "bernoulli_shift": lambda: bernoulli_shift(
            spec.get("p", 0.5), tuple(spec.get("alphabet", (0, 1))),
            horizon=spec.get("horizon", DEFAULT_HORIZON)),
        "sturmian": lambda: sturmian(spec.get("alpha", GOLDEN),
                                     horizon=spec.get("horizon", DEFAULT_HORIZON)),
        "substitution_subshift": lambda: substitution_subshift(
            spec.get("rules", "fibonacci"),
            horizon=spec.get("horizon", DEFAULT_HORIZON)),
        "product": lambda: product_system(make_system(spec["first"]),
                                          make_system(spec["second"])),
    }
    if kind not in builders:
        raise InvalidArgument(
            f"unknown system kind {kind!r}; valid kinds: {sorted(builders)}")
    return builders[kind]()


def builtin_fixtures(horizon: int = DEFAULT_HORIZON) -> dict:
    """The canonical fixture systems keyed by tag."""
    rot = torus_rotation(GOLDEN, tag="rotation_golden")
    fixtures = {
        "rotation_golden": rot,
        "rotation_product": product_system(
            torus_rotation(GOLDEN), torus_rotation(GOLDEN), tag="rotation_product"),
        "sturmian_golden": sturmian(GOLDEN, horizon=horizon, tag="sturmian_golden"),
        "fibonacci_substitution": substitution_subshift(
            "fibonacci", horizon=horizon, tag="fibonacci_substitution"),
        "thue_morse": substitution_subshift("thue_morse", horizon=horizon),
        "bernoulli_half": bernoulli_shift(0.5, horizon=horizon, tag="bernoulli_half"),
    }
    return fixtures


def fixture_observables(system: SystemHandle) -> list[Observable]:
    """Default observable triple for each fixture family."""
    if system.point_kind == "torus":
        return [torus_character([1.0]), torus_character([2.0]),
                torus_cosine([1.0], scale=0.5)]
    if system.point_kind == "product":
        return [
            Observable("char_first", 1.0,
                       lambda v: np.exp(2j * np.pi * v[:, 0])),
            Observable("char_second", 1.0,
                       lambda v: np.exp(2j * np.pi * v[:, 1])),
            Observable("char_sum", 1.0,
                       lambda v: np.exp(2j * np.pi * (v[:, 0] + v[:, 1]))),
        ]
    if system.point_kind == "symbolic":
        if system.known_class == WEAKLY_MIXING:
            return [symbol_at(shift=0.5), symbol_at(shift=0.0),
                    cylinder_indicator([0, 1], shift=0.25)]
        return [symbol_at(shift=0.0), symbol_at(shift=0.5),
                cylinder_indicator([0, 1], shift=0.0)]
    raise InvalidArgument(f"no default observables for {system.tag!r}")
