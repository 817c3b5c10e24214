#!/usr/bin/env python3
"""Scan a fixture system for point-spectrum frequencies and print the peaks,
the discrete-spectrum score, and the almost-periodicity probe result."""

import argparse

from meanlab import (FrequencyGrid, Schedule, almost_periodicity_probe,
                     discrete_spectrum_score, spectrum_scan)
from meanlab.systems import builtin_fixtures, fixture_observables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("system", nargs="?", default="rotation_golden")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--n", type=int, default=100000,
                    help="largest window length")
    ap.add_argument("--step", type=float, default=1e-3)
    args = ap.parse_args()

    s = builtin_fixtures(horizon=args.n + 128)[args.system]
    f = fixture_observables(s)[0]
    sizes = tuple(int(args.n * 2.0 ** -k) for k in range(5, -1, -1))
    sched = Schedule(sizes, burn_in=2)
    x = s.sample_mu(args.seed)
    scan = spectrum_scan(s, f, x, FrequencyGrid.line(0.0, 1.0, args.step),
                         sched)
    print(f"{s.tag} / {f.tag}: {len(scan.peaks)} peaks, "
          f"score={discrete_spectrum_score(scan):.4f}")
    for w, amp, mag in scan.peaks:
        print(f"  w={w[0]:.8f}  |a|={mag:.4f}")
    probe = almost_periodicity_probe(s, f, x, 0.2, sched)
    print(f"almost-periodicity probe consistent: {probe.consistent}")


if __name__ == "__main__":
    main()
