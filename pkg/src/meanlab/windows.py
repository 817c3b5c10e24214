"""Averaging windows [0,n)^d, the volume functional, and density/syndeticity estimators.

All long-run limits in this package are replaced by statistics over a finite
increasing schedule of window sides.  Windows are half-open cubes so that the
discrete point count is exactly n^d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument

DISCRETE = "discrete"
CONTINUOUS = "continuous"

DEFAULT_MESH = 0.1


@dataclass(frozen=True)
class GroupIndex:
    """An element of Z^d or R^d indexing the action."""

    coords: tuple
    kind: str = DISCRETE

    def __post_init__(self):
        if len(self.coords) < 1:
            raise InvalidArgument("GroupIndex needs dimension >= 1")
        if self.kind == DISCRETE and any(c != int(c) for c in self.coords):
            raise InvalidArgument("discrete GroupIndex must have integer coordinates")

    @property
    def d(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class Window:
    """Half-open cube [0,n)^d, discretized by `mesh` in the continuous case."""

    n: float
    kind: str = DISCRETE
    d: int = 1
    mesh: float = DEFAULT_MESH

    def __post_init__(self):
        if self.n <= 0:
            raise InvalidArgument(f"window side must be positive, got {self.n}")
        if self.d < 1:
            raise InvalidArgument("window dimension must be >= 1")
        if self.kind == CONTINUOUS:
            if self.mesh <= 0:
                raise InvalidArgument("mesh must be positive")
            if self.mesh > self.n:
                raise InvalidArgument("mesh must not exceed the window side")
        elif self.kind != DISCRETE:
            raise InvalidArgument(f"unknown window kind {self.kind!r}")

    def axis_values(self) -> np.ndarray:
        if self.kind == DISCRETE:
            return np.arange(int(self.n), dtype=float)
        m = int(np.floor(self.n / self.mesh + 1e-12))
        return np.arange(m, dtype=float) * self.mesh

    @property
    def count_per_axis(self) -> int:
        return len(self.axis_values())

    @property
    def count(self) -> int:
        return self.count_per_axis ** self.d

    @property
    def volume(self) -> float:
        if self.kind == DISCRETE:
            return float(self.count)
        return self.mesh ** self.d * self.count


def enumerate_window(w: Window) -> tuple[np.ndarray, float]:
    """All group indices of the window in lexicographic order, plus its volume.

    Returns an array of shape (count, d).
    """
    ax = w.axis_values()
    if w.d == 1:
        pts = ax[:, None]
    else:
        grids = np.meshgrid(*([ax] * w.d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts, w.volume


@dataclass(frozen=True)
class Schedule:
    """Strictly increasing window sides; entries below `burn_in` are ignored
    for tail statistics."""

    sizes: tuple
    burn_in: int = 2

    def __post_init__(self):
        if len(self.sizes) < 2:
            raise InvalidArgument("schedule needs at least two windows")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise InvalidArgument("schedule sizes must be strictly increasing")
        if not 0 <= self.burn_in < len(self.sizes):
            raise InvalidArgument("burn_in must be < number of windows")

    @property
    def max_size(self):
        return self.sizes[-1]

    def tail(self, values: Sequence) -> list:
        return list(values[self.burn_in:])


def geometric_schedule(n1: int = 64, n_windows: int = 8, factor: float = 2.0,
                       burn_in: int = 2) -> Schedule:
    """Default schedule n_k = ceil(n1 * factor^k)."""
    sizes, n = [], float(n1)
    for _ in range(n_windows):
        sizes.append(int(np.ceil(n)))
        n *= factor
    return Schedule(tuple(sizes), burn_in=burn_in)


@dataclass
class DensityEstimate:
    lower: float
    upper: float
    per_window: list = field(default_factory=list)


Indicator = Callable[[np.ndarray], np.ndarray]
"""Vectorized set indicator: (count, d) coordinates -> boolean array."""


def density(indicator: Indicator, sched: Schedule, *, d: int = 1,
            kind: str = DISCRETE, mesh: float = DEFAULT_MESH) -> DensityEstimate:
    """Per-window occupation ratios nu(S & F_n)/nu(F_n); lower/upper taken as
    min/max over the post-burn-in windows."""
    top = Window(sched.max_size, kind=kind, d=d, mesh=mesh)
    pts, _ = enumerate_window(top)
    hit = np.asarray(indicator(pts), dtype=bool)
    if hit.shape != (len(pts),):
        raise InvalidArgument("indicator must return one boolean per point")
    per_window = []
    for n in sched.sizes:
        w = Window(n, kind=kind, d=d, mesh=mesh)
        limit = w.axis_values()[-1] + (1 if kind == DISCRETE else w.mesh)
        mask = np.all(pts < limit - 1e-12, axis=1) if n != sched.max_size else None
        if mask is None:
            inside = hit
            cnt = w.count
        else:
            inside = hit[mask]
            cnt = int(mask.sum())
        ratio = float(inside.sum()) / cnt if cnt else 0.0
        per_window.append((n, ratio))
    tail = sched.tail([r for _, r in per_window])
    return DensityEstimate(lower=min(tail), upper=max(tail), per_window=per_window)


def syndetic_probe(indicator: Indicator, k_side: float, sched: Schedule, *,
                   d: int = 1, kind: str = DISCRETE,
                   mesh: float = DEFAULT_MESH) -> tuple[bool, GroupIndex | None]:
    """True iff every translate of [0,k_side)^d inside the largest scheduled
    window meets the set; on failure returns an empty translate as witness."""
    if k_side <= 0:
        raise InvalidArgument("k_side must be positive")
    if k_side > sched.max_size:
        raise InvalidArgument("k_side exceeds the largest scheduled window")
    top = Window(sched.max_size, kind=kind, d=d, mesh=mesh)
    pts, _ = enumerate_window(top)
    hit = np.asarray(indicator(pts), dtype=bool)
    m = top.count_per_axis
    occ = hit.reshape((m,) * d)
    step = 1.0 if kind == DISCRETE else top.mesh
    k_cells = max(1, int(np.round(k_side / step)))
    if k_cells > m:
        raise InvalidArgument("k_side exceeds the largest scheduled window")
    view = sliding_window_view(occ, (k_cells,) * d)
    covered = view.any(axis=tuple(range(d, 2 * d)))
    if covered.all():
        return True, None
    first = np.unravel_index(int(np.argmin(covered)), covered.shape)
    coords = tuple(
        int(i) if kind == DISCRETE else float(i * step) for i in first)
    return False, GroupIndex(coords, kind=kind)
