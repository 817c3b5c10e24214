#!/usr/bin/env python3
"""Run the full dichotomy matrix over the built-in fixtures and print a
summary table: verdict per (system, flavor, observable), spectral scores,
probe consistency, and any violated implications."""

import argparse
import time

from meanlab import geometric_schedule
from meanlab.classify import ClassifyConfig, SamplerConfig, dichotomy_report
from meanlab.systems import builtin_fixtures, fixture_observables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--systems", nargs="*", default=None,
                    help="fixture tags (default: all)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-centers", type=int, default=12)
    ap.add_argument("--horizon", type=int, default=8192)
    args = ap.parse_args()

    fixtures = builtin_fixtures(horizon=args.horizon)
    tags = args.systems or list(fixtures)
    cfg = ClassifyConfig(
        sampler=SamplerConfig(n_centers=args.n_centers, seed=args.seed),
        sched=geometric_schedule(64, 7))

    any_violation = False
    for tag in tags:
        s = fixtures[tag]
        t0 = time.monotonic()
        rep = dichotomy_report(s, fixture_observables(s), cfg)
        print(f"\n== {tag} (known: {s.known_class}) "
              f"[{time.monotonic() - t0:.1f}s]")
        for (flavor, obs), (sens, equi) in rep.verdicts.items():
            label = obs or "-"
            eps = f" eps={sens.epsilon:g}" if sens.epsilon else ""
            print(f"  {flavor:15s} {label:20s} "
                  f"sens={sens.label:20s} equi={equi.label}{eps}")
        for obs, score in rep.scores.items():
            probe = rep.probes[obs].consistent
            print(f"  score[{obs}] = {score:.3f}  probe_consistent={probe}")
        if rep.violations:
            any_violation = True
            print(f"  VIOLATIONS: {rep.violations}")
    print("\nno violated implications" if not any_violation
          else "\nimplication violations found")
    return 1 if any_violation else 0


if __name__ == "__main__":
    raise SystemExit(main())
