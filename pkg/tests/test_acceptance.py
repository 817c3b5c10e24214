"""The eight acceptance criteria, one pass/fail line each (run with -s or
read the captured stdout).  Tolerances are pinned to the stated values."""

import json
import time

import numpy as np
import pytest

from meanlab import (GOLDEN, FrequencyGrid, Schedule, build_delone,
                     classify_delone, discrete_spectrum_score,
                     equivalence_check, expansivity_fraction, f_pseudometric,
                     geometric_schedule, orbit_pseudometric, spectrum_scan,
                     symbol_at, torus_character, torus_cosine)
from meanlab.classify import (ClassifyConfig, MEAN_EQUICONTINUOUS,
                              MEAN_SENSITIVE, SamplerConfig, dichotomy_report,
                              pair_estimate)
from meanlab.pseudometrics import (_per_window_means, _prefix_indexers,
                                   difference_series, top_window)
from meanlab.systems import (DISCRETE_SPECTRUM, WEAKLY_MIXING,
                             bernoulli_shift, builtin_fixtures,
                             fixture_observables, torus_rotation)

SCHED_1E5 = Schedule((3125, 6250, 12500, 25000, 50000, 100000), burn_in=2)
SCHED_MID = geometric_schedule(64, 7)  # up to 4096


def _report(num, name, ok, detail=""):
    print(f"\n[ACCEPTANCE {num}] {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def _pairs(system, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for r in rng.spawn(n):
        r1, r2 = r.spawn(2)
        out.append((system.sample_mu(r1), system.sample_mu(r2)))
    return out


def test_criterion_1_pseudometric_oracles():
    rot = torus_rotation(GOLDEN)
    f = torus_character([1.0])
    est = f_pseudometric("df_L2", rot, f, np.array([0.0]), np.array([0.25]),
                         SCHED_1E5)
    ok_rot = abs(est.value - np.sqrt(2.0)) <= 1e-6

    b = bernoulli_shift(0.5, horizon=100100)
    fs = symbol_at(shift=0.5)
    d1s, dbs = [], []
    for x, y in _pairs(b, 20, 10):
        d1s.append(f_pseudometric("df_L1", b, fs, x, y, SCHED_1E5).value)
        dbs.append(orbit_pseudometric("db", b, x, y, SCHED_1E5).value)
    d1, db = float(np.mean(d1s)), float(np.mean(dbs))
    ok_b = abs(d1 - 0.5) <= 0.02 and abs(db - 2.0 / 3.0) <= 0.02
    _report(1, "pseudometric oracles", ok_rot and ok_b,
            f"df_L2 err={abs(est.value - np.sqrt(2)):.2e}, "
            f"df_L1={d1:.4f}, db={db:.4f}")


def test_criterion_2_metric_equivalence():
    rot = torus_rotation(GOLDEN)
    f_rot = torus_cosine([1.0], scale=0.5)
    rep_rot = equivalence_check(rot, f_rot, _pairs(rot, 200, 20), SCHED_MID)
    b = bernoulli_shift(0.5, horizon=4200)
    f_b = symbol_at(shift=0.5, scale=0.5)
    rep_b = equivalence_check(b, f_b, _pairs(b, 200, 21), SCHED_MID)
    _report(2, "metric-equivalence implications",
            rep_rot.ok and rep_b.ok,
            f"violations: rotation={len(rep_rot.violations)}, "
            f"shift={len(rep_b.violations)} over "
            f"{rep_rot.n_checks + rep_b.n_checks} checks")


def test_criterion_3_pseudometric_axioms():
    b = bernoulli_shift(0.5, horizon=600)
    sched = Schedule((64, 128, 256, 512), burn_in=1)
    f = symbol_at(shift=0.5)
    w = top_window(b, sched)
    idx = _prefix_indexers(sched, w)
    rng = np.random.default_rng(30)
    bad = 0
    for r in rng.spawn(1000):
        r1, r2, r3 = r.spawn(3)
        x, y, z = b.sample_mu(r1), b.sample_mu(r2), b.sample_mu(r3)
        for use_f, square in ((False, False), (True, False), (True, True)):
            def per_window(a, c):
                series = difference_series(b, a, c, w,
                                           f=f if use_f else None)
                if square:
                    return np.sqrt(_per_window_means(series ** 2, idx))
                return np.array(_per_window_means(series, idx))
            dxy, dyx = per_window(x, y), per_window(y, x)
            dxz, dyz = per_window(x, z), per_window(y, z)
            if not np.array_equal(dxy, dyx):
                bad += 1
            if not np.all(dxz <= dxy + dyz + 1e-12):
                bad += 1
    _report(3, "pseudometric axioms", bad == 0,
            f"{bad} violations on 1000 triples x 3 kinds")


def test_criterion_4_spectrum():
    t0 = time.monotonic()
    rot = torus_rotation(GOLDEN)
    grid = FrequencyGrid.line(0.0, 1.0, 1e-3)
    scan = spectrum_scan(rot, torus_character([1.0]), rot.sample_mu(3),
                         grid, SCHED_1E5)
    score = discrete_spectrum_score(scan)
    ok_rot = (len(scan.peaks) == 1
              and abs(scan.peaks[0][0][0] - GOLDEN) <= 1e-4
              and scan.peaks[0][2] >= 0.98 and score >= 0.95)

    b = bernoulli_shift(0.5, horizon=100100)
    scan_b = spectrum_scan(b, symbol_at(shift=0.5), b.sample_mu(4),
                           grid, SCHED_1E5)
    score_b = discrete_spectrum_score(scan_b)
    elapsed = time.monotonic() - t0
    _report(4, "spectrum scan", ok_rot and score_b <= 0.05 and elapsed < 30,
            f"rotation score={score:.4f}, bernoulli score={score_b:.4f}, "
            f"{elapsed:.1f}s")


def test_criterion_5_theorem_consistency_matrix():
    fixtures = builtin_fixtures(horizon=8192)
    tags = ["rotation_golden", "rotation_product", "sturmian_golden",
            "fibonacci_substitution", "bernoulli_half"]
    cfg = ClassifyConfig(
        sampler=SamplerConfig(n_centers=12, n_per_ball=8, seed=0),
        sched=SCHED_MID)
    all_violations, details = [], []
    sens_eps = {}
    for tag in tags:
        s = fixtures[tag]
        rep = dichotomy_report(s, fixture_observables(s), cfg)
        all_violations.extend(f"{tag}:{v}" for v in rep.violations)
        double_pos = [
            key for key, (sens, equi) in rep.verdicts.items()
            if sens.label == MEAN_SENSITIVE
            and equi.label == MEAN_EQUICONTINUOUS]
        all_violations.extend(f"{tag}:double_positive:{k}" for k in double_pos)
        if s.known_class == DISCRETE_SPECTRUM:
            for key, (sens, equi) in rep.verdicts.items():
                if equi.label != MEAN_EQUICONTINUOUS:
                    all_violations.append(f"{tag}:not_equicontinuous:{key}")
        if s.known_class == WEAKLY_MIXING:
            for key, (sens, _) in rep.verdicts.items():
                if sens.label != MEAN_SENSITIVE or sens.epsilon < 0.3:
                    all_violations.append(f"{tag}:not_sensitive:{key}")
                else:
                    sens_eps[tag] = max(sens_eps.get(tag, 0.0), sens.epsilon)
        details.append(f"{tag}: {len(rep.violations)} implication violations")
    for tag, eps in sens_eps.items():
        frac = expansivity_fraction(fixtures[tag], None, eps, 40,
                                    SCHED_MID, seed=5).fraction
        if frac < 0.95:
            all_violations.append(f"{tag}:expansivity_fraction={frac}")
    _report(5, "theorem-consistency matrix", not all_violations,
            "; ".join(details) + (f"; violations: {all_violations}"
                                  if all_violations else ""))


def test_criterion_6_expansivity_uniformity():
    b = bernoulli_shift(0.5, horizon=100100)
    rng = np.random.default_rng(6)
    per_center = []
    for r in rng.spawn(32):
        c = b.sample_mu(r)
        pts = b.sample_ball_log2(c, -6.0, 8, r)
        vals = [pair_estimate(b, None, "db", x, y, SCHED_1E5)
                for x, y in zip(pts[0::2], pts[1::2])]
        per_center.append(float(np.mean(vals)))
    per_center = np.array(per_center)
    spread = float((per_center.max() - per_center.min()) / per_center.mean())
    _report(6, "expansivity uniformity", spread <= 0.1,
            f"relative spread={spread:.4f} across 32 centers")


def test_criterion_7_delone_classification():
    results, times = {}, {}

    def classify(name, lam):
        t0 = time.monotonic()
        results[name] = classify_delone(lam)
        times[name] = time.monotonic() - t0

    classify("Z", build_delone("lattice", ((0.0, 10000.0),)))
    classify("Z2", build_delone("lattice", ((0.0, 100.0), (0.0, 100.0))))
    fib = build_delone("cut_project", ((0.0, 13900.0),))
    classify("fibonacci", fib)
    classify("poisson", build_delone(
        "poisson", ((0.0, 13900.0),),
        {"intensity": len(fib.points) / 13900.0}, seed=3))

    # peak-position stability under window doubling
    grid = FrequencyGrid.line(0.0, 3.0, 1e-3)
    from meanlab import diffraction
    s1 = diffraction(fib, grid, (3000.0, 6000.0))
    s2 = diffraction(fib, grid, (6000.0, 12000.0))
    k2 = np.array(sorted(float(k[0]) for k, _ in s2.peaks))
    nearest = [float(np.min(np.abs(k2 - float(k[0])))) for k, _ in s1.peaks]
    matched = [d for d in nearest if d < 5e-3]
    drift = max(matched) if matched else np.inf

    labels = {n: v.label for n, v in results.items()}
    ok = (results["Z"].label == "crystalline"
          and results["Z2"].label == "crystalline"
          and results["fibonacci"].label == "quasicrystalline"
          and results["fibonacci"].evidence["point_fraction"] >= 0.9
          and drift <= 1e-3
          and results["poisson"].label == "neither"
          and results["poisson"].evidence["point_fraction"] <= 0.1
          and max(times.values()) <= 60.0)
    _report(7, "delone classification", ok,
            f"labels={labels} "
            f"pf_fib={results['fibonacci'].evidence['point_fraction']:.3f} "
            f"pf_poisson={results['poisson'].evidence['point_fraction']:.3f} "
            f"drift={drift:.1e} max_time={max(times.values()):.1f}s")


def test_criterion_8_determinism(tmp_path):
    from meanlab.cli import run
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("""
kind = "dichotomy"
system = "bernoulli_half"
seed = 7
n_centers = 6
n_per_ball = 6
schedule = [64, 128, 256, 512, 1024]
""")
    outs = []
    for sub in ("a", "b"):
        run(str(cfg), out_dir=str(tmp_path / sub))
        rep = json.loads((tmp_path / sub / "report.json").read_text())
        rep.pop("timing")
        outs.append(json.dumps(rep, sort_keys=True))
    _report(8, "determinism", outs[0] == outs[1],
            "bit-identical reports modulo timing")
