import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanlab import (GOLDEN, Schedule, equivalence_check, f_pseudometric,
                     geometric_schedule, orbit_pseudometric, symbol_at,
                     torus_character, torus_cosine)
from meanlab.errors import InvalidArgument
from meanlab.pseudometrics import (_per_window_means, _prefix_indexers,
                                   difference_series, rho_value, top_window)


def _pair(system, rng):
    r1, r2 = rng.spawn(2)
    return system.sample_mu(r1), system.sample_mu(r2)


def test_rotation_character_oracle(rotation, mid_sched):
    # d(T^j 0, T^j 1/4) under f = e^{2 pi i x} is constantly |1 - i| = sqrt 2
    f = torus_character([1.0])
    est = f_pseudometric("df_L2", rotation, f,
                         np.array([0.0]), np.array([0.25]), mid_sched)
    assert est.value == pytest.approx(np.sqrt(2.0), abs=1e-9)
    assert est.converged


def test_identical_points_give_zero(bernoulli, small_sched, rng):
    x = bernoulli.sample_mu(rng)
    for kind in ("db", "rho_b"):
        assert orbit_pseudometric(kind, bernoulli, x, x, small_sched).value == 0.0
    f = symbol_at(shift=0.5)
    for kind in ("df_L1", "df_L2", "rho_f"):
        assert f_pseudometric(kind, bernoulli, f, x, x, small_sched).value == 0.0


def test_bernoulli_db_oracle(bernoulli, mid_sched, rng):
    # independent pair: E db = sum_m 2^-m 2^-(m+1) = 2/3
    vals = [orbit_pseudometric("db", bernoulli, *_pair(bernoulli, rng),
                               mid_sched).value for _ in range(10)]
    assert np.mean(vals) == pytest.approx(2.0 / 3.0, abs=0.03)


def test_l2_dominates_l1(bernoulli, small_sched, rng):
    f = symbol_at(shift=0.5)
    x, y = _pair(bernoulli, rng)
    d1 = f_pseudometric("df_L1", bernoulli, f, x, y, small_sched).value
    d2 = f_pseudometric("df_L2", bernoulli, f, x, y, small_sched).value
    assert d2 >= d1 - 1e-12


def test_unknown_kind_rejected(bernoulli, small_sched, rng):
    x, y = _pair(bernoulli, rng)
    with pytest.raises(InvalidArgument):
        orbit_pseudometric("df_L2", bernoulli, x, y, small_sched)
    with pytest.raises(InvalidArgument):
        f_pseudometric("db", bernoulli, symbol_at(), x, y, small_sched)


def test_rho_definition_on_synthetic_series():
    # series: fraction q of entries at level h, rest zero ->
    # rho = min over admissible eps; here upper density(> eps) = q for eps < h
    sched = Schedule((64, 128, 256, 512), burn_in=1)
    q, h = 0.125, 0.75
    series = np.zeros(512)
    series[:: int(1 / q)] = h
    indexers = list(sched.sizes)
    rho = rho_value(series, sched, indexers, cap=1.0)
    # admissible iff eps > q (density q < eps) for eps < h, so rho ~ q
    assert rho == pytest.approx(q, abs=0.01)


def test_rho_zero_series(small_sched):
    indexers = list(small_sched.sizes)
    assert rho_value(np.zeros(small_sched.max_size), small_sched,
                     indexers, cap=1.0) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_pseudometric_axioms_per_window(seed):
    # symmetry and triangle inequality hold per window for db, df_L1, df_L2
    from meanlab import bernoulli_shift
    s = bernoulli_shift(0.5, horizon=300)
    sched = Schedule((32, 64, 128, 256), burn_in=1)
    rng = np.random.default_rng(seed)
    r1, r2, r3 = rng.spawn(3)
    x, y, z = s.sample_mu(r1), s.sample_mu(r2), s.sample_mu(r3)
    f = symbol_at(shift=0.5)
    w = top_window(s, sched)
    idx = _prefix_indexers(sched, w)

    def windows(a, b, use_f, square):
        series = difference_series(s, a, b, w, f=f if use_f else None)
        if square:
            return np.sqrt(_per_window_means(series ** 2, idx))
        return np.array(_per_window_means(series, idx))

    for use_f, square in ((False, False), (True, False), (True, True)):
        dxy = windows(x, y, use_f, square)
        dyx = windows(y, x, use_f, square)
        dxz = windows(x, z, use_f, square)
        dyz = windows(y, z, use_f, square)
        assert np.allclose(dxy, dyx, rtol=0, atol=1e-12)
        assert np.all(dxz <= dxy + dyz + 1e-9)


def test_equivalence_check_requires_bounded_observable(rotation, small_sched):
    big = torus_character([1.0])  # sup bound 1 > 1/2
    with pytest.raises(InvalidArgument):
        equivalence_check(rotation, big, [], small_sched)


def test_equivalence_check_rotation(rotation, mid_sched, rng):
    f = torus_cosine([1.0], scale=0.5)
    pairs = [_pair(rotation, rng) for _ in range(20)]
    rep = equivalence_check(rotation, f, pairs, mid_sched)
    assert rep.ok
    assert rep.n_pairs == 20
    assert rep.n_checks == 20 * 8 * 2
