#!/usr/bin/env python3
"""Classify the canonical Delone constructions (integer lattice, jittered
lattice, Fibonacci chain, Poisson points) and print the evidence bundle."""

import argparse
import time

from meanlab import build_delone, classify_delone


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--length", type=float, default=13900.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jitter", type=float, default=0.05)
    args = ap.parse_args()

    region = ((0.0, args.length),)
    cases = {
        "lattice_Z": ("lattice", {}),
        "perturbed": ("perturbed", {"amplitude": args.jitter}),
        "fibonacci": ("cut_project", {}),
        "poisson": ("poisson", {"intensity": 0.72}),
    }
    for name, (kind, params) in cases.items():
        lam = build_delone(kind, region, params, seed=args.seed)
        t0 = time.monotonic()
        verdict = classify_delone(lam)
        print(f"{name:12s} n={len(lam.points):6d}  {verdict.label:16s} "
              f"[{time.monotonic() - t0:.1f}s]")
        for key, val in verdict.evidence.items():
            if key != "hull_mu_table":
                print(f"    {key}: {val}")


if __name__ == "__main__":
    main()
