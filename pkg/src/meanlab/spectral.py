"""Birkhoff averages, Fourier point-spectrum scanning, and almost-periodicity probes.

Frequencies are located in two stages: a coarse pass over the declared grid at
a window length matched to the grid resolution (so mainlobes are visible), then
a zoom refinement that doubles the window while shrinking the bracket, ending
with a bounded golden/Brent search at the full window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import minimize_scalar

from .errors import InvalidArgument, UndefinedScore
from .systems import Observable, SystemHandle, orbit_series
from .windows import DEFAULT_MESH, Schedule, Window

DIVERGENCE_RTOL = 0.2
PEAK_FLOOR_FACTOR = 0.05
REFINE_XATOL = 1e-8
_MAX_CANDIDATES = 64


@dataclass
class AverageResult:
    value: complex
    per_window: list
    diverged: bool


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform per-axis frequency grid [start, stop) with the given step."""
    start: tuple
    stop: tuple
    step: tuple

    @classmethod
    def line(cls, start: float, stop: float, step: float) -> "FrequencyGrid":
        return cls((start,), (stop,), (step,))

    @property
    def d(self) -> int:
        return len(self.start)

    def axes(self) -> list[np.ndarray]:
        out = []
        for a, b, h in zip(self.start, self.stop, self.step):
            if h <= 0 or b <= a:
                raise InvalidArgument("frequency grid axes must be non-degenerate")
            out.append(np.arange(a, b - 1e-12, h))
        if any(len(ax) == 0 for ax in out):
            raise InvalidArgument("empty frequency grid")
        return out

    def points(self) -> np.ndarray:
        axes = self.axes()
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass
class SpectrumScan:
    peaks: list  # (frequency d-vector, complex amplitude, magnitude)
    grid: FrequencyGrid
    f_energy: float


def _series_and_times(s: SystemHandle, f: Observable, x, sched: Schedule,
                      mesh: float):
    if s.group_dim != 1:
        raise InvalidArgument("spectral estimators support 1-dimensional time")
    w = Window(sched.max_size, kind=s.group_kind, d=1, mesh=mesh)
    values = orbit_series(s, f, x, w).values
    return values, w.axis_values(), w


def _prefix_counts(sched: Schedule, window: Window):
    return [Window(n, kind=window.kind, d=1, mesh=window.mesh).count
            for n in sched.sizes]


def _windowed_means(values: np.ndarray, counts) -> list[complex]:
    csum = np.cumsum(values)
    return [complex(csum[c - 1] / c) for c in counts]


def _diverged(tail, sup_bound: float) -> bool:
    arr = np.asarray(tail)
    osc = float(np.max(np.abs(arr - arr[-1]))) if len(arr) > 1 else 0.0
    return osc > DIVERGENCE_RTOL * max(sup_bound, 1e-12)


def birkhoff_average(s: SystemHandle, f: Observable, x,
                     sched: Schedule, mesh: float = DEFAULT_MESH) -> AverageResult:
    """Per-window orbit averages of f; the tail value plus its trace."""
    values, _, w = _series_and_times(s, f, x, sched, mesh)
    counts = _prefix_counts(sched, w)
    means = _windowed_means(values, counts)
    tail = sched.tail(means)
    return AverageResult(value=tail[-1], per_window=list(zip(sched.sizes, means)),
                         diverged=_diverged(tail, f.sup_bound))


def fourier_mode(s: SystemHandle, f: Observable, x, freq,
                 sched: Schedule, mesh: float = DEFAULT_MESH) -> AverageResult:
    """Per-window averages of e^{-2 pi i freq * t} f(T^t x)."""
    values, times, w = _series_and_times(s, f, x, sched, mesh)
    freq = float(np.atleast_1d(freq)[0])
    twisted = values * np.exp(-2j * np.pi * freq * times)
    counts = _prefix_counts(sched, w)
    means = _windowed_means(twisted, counts)
    tail = sched.tail(means)
    return AverageResult(value=tail[-1], per_window=list(zip(sched.sizes, means)),
                         diverged=_diverged(tail, f.sup_bound))


def _amplitudes(values, times, freqs: np.ndarray) -> np.ndarray:
    """Mean of values * e^{-2 pi i <w, t>} for each row w of freqs (times is
    (count,) for 1-d frequency axes)."""
    out = np.empty(len(freqs), dtype=complex)
    chunk = max(1, int(4e6 // max(len(values), 1)))
    for i in range(0, len(freqs), chunk):
        w = freqs[i:i + chunk, 0]
        phases = np.exp(-2j * np.pi * np.outer(times, w))
        out[i:i + chunk] = (values[:, None] * phases).mean(axis=0)
    return out


def _refine_1d(values, times, total_time, w0: float, radius: float,
               coarse_len: float):
    """Zoom refinement: double the window while shrinking the bracket, then a
    bounded scalar search at the full window."""
    lo, hi = w0 - radius, w0 + radius
    span = coarse_len
    while span < total_time:
        span = min(span * 2.0, total_time)
        cnt = int(np.searchsorted(times, span, side="right"))
        sub_v, sub_t = values[:cnt], times[:cnt]
        probe = np.linspace(lo, hi, 17)
        mags = np.abs(_amplitudes(sub_v, sub_t, probe[:, None]))
        best = int(np.argmax(mags))
        width = (hi - lo) / 16.0
        lo = probe[best] - 2 * width
        hi = probe[best] + 2 * width

    def neg_mag(w):
        return -float(np.abs(np.mean(values * np.exp(-2j * np.pi * w * times))))

    res = minimize_scalar(neg_mag, bounds=(lo, hi), method="bounded",
                          options={"xatol": REFINE_XATOL})
    w_ref = float(res.x)
    amp = complex(np.mean(values * np.exp(-2j * np.pi * w_ref * times)))
    return w_ref, amp


def spectrum_scan(s: SystemHandle, f: Observable, x, grid: FrequencyGrid,
                  sched: Schedule, mesh: float = DEFAULT_MESH,
                  peak_floor: float = None) -> SpectrumScan:
    """Scan the grid for point-spectrum frequencies and refine each local
    maximum; peaks are kept when the refined full-window magnitude clears
    the floor (default 0.05 * sqrt(f_energy))."""
    if grid.d != 1:
        raise InvalidArgument("spectrum_scan supports 1-dimensional frequency grids")
    values, times, w = _series_and_times(s, f, x, sched, mesh)
    f_energy = float(np.mean(np.abs(values) ** 2))
    if peak_floor is None:
        peak_floor = PEAK_FLOOR_FACTOR * np.sqrt(f_energy)
    axes = grid.axes()
    step = grid.step[0]
    total_time = float(times[-1]) + (times[1] - times[0] if len(times) > 1 else 1.0)

    # coarse pass at a window matched to the grid resolution
    coarse_len = min(total_time, 2.0 / step)
    cnt = max(8, int(np.searchsorted(times, coarse_len, side="right")))
    coarse_v, coarse_t = values[:cnt], times[:cnt]
    freqs = axes[0][:, None]
    mags = np.abs(_amplitudes(coarse_v, coarse_t, freqs))
    local_max = (maximum_filter(mags, size=3, mode="nearest") == mags)
    coarse_floor = max(0.5 * peak_floor, 2.5 * float(np.median(mags)))
    cand = np.flatnonzero(local_max & (mags >= coarse_floor))
    if len(cand) > _MAX_CANDIDATES:
        cand = cand[np.argsort(mags[cand])[::-1][:_MAX_CANDIDATES]]

    refined = []
    for idx in cand:
        w0 = float(axes[0][idx])
        w_ref, amp = _refine_1d(values, times, total_time, w0, step, coarse_len)
        if abs(amp) >= peak_floor:
            refined.append((w_ref, amp, abs(amp)))

    # deduplicate refined candidates that converged to the same frequency
    wrap = 1.0 if s.group_kind == "discrete" else None
    refined.sort(key=lambda p: -p[2])
    peaks = []
    for w_ref, amp, mag in refined:
        if wrap is not None:
            w_ref %= wrap
        sep = step / 2.0
        dup = False
        for (wk, _, _) in peaks:
            dw = abs(w_ref - wk)
            if wrap is not None:
                dw = min(dw, wrap - dw)
            if dw < sep:
                dup = True
                break
        if not dup:
            peaks.append((np.array([w_ref]), amp, mag))
    peaks.sort(key=lambda p: float(p[0][0]))
    return SpectrumScan(peaks=peaks, grid=grid, f_energy=f_energy)


def discrete_spectrum_score(scan: SpectrumScan) -> float:
    """Fraction of the signal energy carried by the detected point spectrum."""
    if scan.f_energy <= 0:
        raise UndefinedScore("score undefined for zero-energy observables")
    total = sum(mag ** 2 for _, _, mag in scan.peaks)
    return float(np.clip(total / scan.f_energy, 0.0, 1.0))


@dataclass
class ProbeResult:
    consistent: bool
    per_eps: list = field(default_factory=list)
    reason: str = ""


def _lag_profile(values: np.ndarray, max_lag: int) -> np.ndarray:
    """e_hat[j] = mean_i |v_{i+j} - v_i|^2 for j = 0..max_lag, via FFT."""
    n = len(values)
    m = 1 << int(np.ceil(np.log2(2 * n)))
    F = np.fft.fft(values, m)
    cross = np.fft.ifft(np.conj(F) * F)[:max_lag + 1].real
    sq = np.abs(values) ** 2
    pre = np.cumsum(sq)
    suf = pre[-1] - np.concatenate([[0.0], pre[:-1]])
    j = np.arange(max_lag + 1)
    s_head = pre[n - 1 - j]          # sum_{i < n-j} |v_i|^2
    s_tail = suf[j]                  # sum_{i >= j} |v_i|^2
    counts = n - j
    return (s_head + s_tail - 2.0 * cross) / counts


def almost_periodicity_probe(s: SystemHandle, f: Observable, x, eps: float,
                             sched: Schedule, mesh: float = DEFAULT_MESH,
                             k_cap: float = 2048.0,
                             n_eps: int = 3) -> ProbeResult:
    """Estimate the lag profile e_hat(j) of |f(T^{i+j}x) - f(T^i x)|^2 and test
    whether {j : e_hat(j) <= eps'} has bounded gaps, for eps' = eps, eps/2, ...

    Consistent with almost periodicity iff every tested level is syndetic
    within the gap cap.
    """
    if eps <= 0:
        raise InvalidArgument("eps must be positive")
    values, times, w = _series_and_times(s, f, x, sched, mesh)
    n = len(values)
    max_lag = n // 2
    prof = _lag_profile(values, max_lag)
    step = float(times[1] - times[0]) if len(times) > 1 else 1.0
    per_eps = []
    consistent = True
    for k in range(n_eps):
        level = eps / (2.0 ** k)
        good = np.flatnonzero(prof <= level)
        if len(good) == 0 or (len(good) == 1 and good[0] == 0):
            per_eps.append({"eps": level, "syndetic": False, "k_side": None,
                            "max_gap": None})
            consistent = False
            continue
        positions = good * step
        gaps = np.diff(positions)
        trailing = max_lag * step - positions[-1]
        max_gap = float(max(gaps.max(initial=0.0), trailing, positions[0]))
        k_side = 2.0 ** np.ceil(np.log2(max(max_gap, step)))
        syndetic = k_side <= k_cap
        per_eps.append({"eps": level, "syndetic": bool(syndetic),
                        "k_side": float(k_side), "max_gap": max_gap})
        consistent = consistent and syndetic
    reason = "" if consistent else "gap cap exceeded or no admissible lags"
    return ProbeResult(consistent=consistent, per_eps=per_eps, reason=reason)
