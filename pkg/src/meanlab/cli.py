"""Experiment runner: declarative TOML configs, seeded reproducible runs,
JSON report plus CSV traces.

Exit codes: 0 success, 2 config error, 3 internal error.  Output files are
written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import classify as cls
from . import delone as dl
from .errors import InvalidArgument
from .pseudometrics import f_pseudometric, orbit_pseudometric
from .spectral import FrequencyGrid, discrete_spectrum_score, spectrum_scan
from .systems import (DEFAULT_HORIZON, GOLDEN, Observable, builtin_fixtures,
                      cylinder_indicator, fixture_observables, make_system,
                      symbol_at, torus_character, torus_cosine)
from .windows import Schedule, geometric_schedule

FORMAT_VERSION = 1
OUT_ENV = "MEANLAB_OUT"

EXPERIMENT_KINDS = ("pseudometric", "spectrum", "classify", "dichotomy",
                    "delone")


class ConfigError(InvalidArgument):
    pass


# ---------------------------------------------------------------------------
# config resolution

def _resolve_system(spec):
    fixtures = builtin_fixtures()
    if isinstance(spec, str):
        if spec not in fixtures:
            raise ConfigError(
                f"unknown system tag {spec!r}; valid tags: {sorted(fixtures)}")
        return fixtures[spec]
    if isinstance(spec, dict):
        try:
            return make_system(spec)
        except InvalidArgument as e:
            raise ConfigError(str(e)) from e
    raise ConfigError("system must be a fixture tag or a spec table")


def _resolve_observable(spec, system):
    if spec in (None, "default"):
        return fixture_observables(system)[0]
    if isinstance(spec, dict):
        kind = spec.get("kind")
        builders = {
            "torus_character": lambda: torus_character(
                spec.get("k", [1.0]), spec.get("scale", 1.0)),
            "torus_cosine": lambda: torus_cosine(
                spec.get("k", [1.0]), spec.get("scale", 0.5)),
            "symbol_at": lambda: symbol_at(
                spec.get("shift", 0.0), spec.get("scale", 1.0)),
            "cylinder_indicator": lambda: cylinder_indicator(
                spec.get("word", [0, 1]), spec.get("shift", 0.0)),
        }
        if kind not in builders:
            raise ConfigError(
                f"unknown observable kind {kind!r}; valid kinds: "
                f"{sorted(builders)}")
        return builders[kind]()
    raise ConfigError("observable must be 'default' or a spec table")


def _resolve_schedule(cfg) -> Schedule:
    sched = cfg.get("schedule")
    if sched is None:
        return geometric_schedule()
    if isinstance(sched, list):
        return Schedule(tuple(int(n) for n in sched),
                        burn_in=int(cfg.get("burn_in", 2)))
    raise ConfigError("schedule must be a list of window sides")


def _resolve_grid(cfg) -> FrequencyGrid:
    g = cfg.get("freq_grid", {})
    return FrequencyGrid.line(float(g.get("start", 0.0)),
                              float(g.get("stop", 1.0)),
                              float(g.get("step", 1e-3)))


# ---------------------------------------------------------------------------
# experiments

def _run_pseudometric(cfg):
    s = _resolve_system(cfg.get("system", "rotation_golden"))
    sched = _resolve_schedule(cfg)
    seed = int(cfg.get("seed", 0))
    n_pairs = int(cfg.get("n_pairs", 8))
    kinds = cfg.get("kinds", ["db", "df_L2", "df_L1", "rho_f"])
    f = _resolve_observable(cfg.get("observable", "default"), s)
    rng = np.random.default_rng(seed)
    rows = []
    for i, r in enumerate(rng.spawn(n_pairs)):
        r1, r2 = r.spawn(2)
        x, y = s.sample_mu(r1), s.sample_mu(r2)
        row = {"pair": i}
        for kind in kinds:
            if kind in ("db", "rho_b"):
                est = orbit_pseudometric(kind, s, x, y, sched)
            else:
                est = f_pseudometric(kind, s, f, x, y, sched)
            row[kind] = est.value
            row[f"{kind}_converged"] = est.converged
        rows.append(row)
    return {"system": s.tag, "observable": f.tag, "pairs": rows}, {
        "pseudometrics.csv": _rows_to_csv(rows)}


def _run_spectrum(cfg):
    s = _resolve_system(cfg.get("system", "rotation_golden"))
    sched = _resolve_schedule(cfg)
    f = _resolve_observable(cfg.get("observable", "default"), s)
    grid = _resolve_grid(cfg)
    x = s.sample_mu(int(cfg.get("seed", 0)))
    scan = spectrum_scan(s, f, x, grid, sched)
    score = discrete_spectrum_score(scan)
    peaks = [{"freq": p[0].tolist(), "amp_re": p[1].real, "amp_im": p[1].imag,
              "magnitude": p[2]} for p in scan.peaks]
    rows = [{"freq": p["freq"][0], "magnitude": p["magnitude"]} for p in peaks]
    return {"system": s.tag, "observable": f.tag, "peaks": peaks,
            "discrete_spectrum_score": score,
            "f_energy": scan.f_energy}, {"spectrum.csv": _rows_to_csv(rows)}


def _run_classify(cfg):
    s = _resolve_system(cfg.get("system", "rotation_golden"))
    sched = _resolve_schedule(cfg)
    seed = int(cfg.get("seed", 0))
    flavor = cfg.get("flavor", cls.TOPOLOGICAL)
    if flavor not in cls._SENS_METRIC:
        raise ConfigError(f"unknown flavor {flavor!r}; valid flavors: "
                          f"{sorted(cls._SENS_METRIC)}")
    f = None
    if flavor in (cls.F_RELATIVE, cls.MU_F_RELATIVE):
        f = _resolve_observable(cfg.get("observable", "default"), s)
    sampler = cls.SamplerConfig(
        n_centers=int(cfg.get("n_centers", 16)),
        n_per_ball=int(cfg.get("n_per_ball", 8)), seed=seed)
    sens = cls.mean_sensitivity_test(s, f, sampler, sched, flavor=flavor)
    report = {"system": s.tag, "flavor": flavor,
              "verdict": sens.label, "epsilon": sens.epsilon}
    if f is not None:
        report["observable"] = f.tag
    return report, {}


def _run_dichotomy(cfg):
    s = _resolve_system(cfg.get("system", "rotation_golden"))
    f_list = fixture_observables(s)
    config = cls.ClassifyConfig(
        sampler=cls.SamplerConfig(
            n_centers=int(cfg.get("n_centers", 12)),
            n_per_ball=int(cfg.get("n_per_ball", 8)),
            seed=int(cfg.get("seed", 0))),
        sched=_resolve_schedule(cfg), seed=int(cfg.get("seed", 0)))
    rep = cls.dichotomy_report(s, f_list, config)
    verdicts = {
        f"{flavor}|{tag}": [v.label for v in pair]
        for (flavor, tag), pair in rep.verdicts.items()}
    return {"system": rep.system, "verdicts": verdicts,
            "scores": rep.scores,
            "probes": {k: v.consistent for k, v in rep.probes.items()},
            "implications": rep.implications,
            "violations": rep.violations}, {}


def _run_delone(cfg):
    construction = cfg.get("construction", "lattice")
    length = float(cfg.get("length", 1000.0))
    d = int(cfg.get("d", 1))
    region = tuple((0.0, length) for _ in range(d))
    lam = dl.build_delone(construction, region,
                          params=cfg.get("params", {}),
                          seed=int(cfg.get("seed", 0)))
    verdict = dl.classify_delone(lam)
    report = {"construction": construction, "n_points": len(lam.points),
              "label": verdict.label, "evidence": verdict.evidence}
    files = {}
    if "point_fraction" in verdict.evidence and d == 1:
        grid = dl.FrequencyGrid.line(0.0, 3.0, 1e-3)
        extent = float(np.min(lam.extent))
        spec = dl.diffraction(lam, grid,
                              (extent / 4, extent / 2, extent * 0.999))
        rows = [{"k0": float(k), "intensity": float(i), "is_peak": int(p)}
                for k, i, p in zip(spec.freqs[:, 0], spec.intensities,
                                   spec.is_peak)]
        files["diffraction.csv"] = _rows_to_csv(rows)
    return report, files


_RUNNERS = {"pseudometric": _run_pseudometric, "spectrum": _run_spectrum,
            "classify": _run_classify, "dichotomy": _run_dichotomy,
            "delone": _run_delone}


# ---------------------------------------------------------------------------
# plumbing

def _rows_to_csv(rows) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".meanlab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config does not parse: {e}") from e
    if "kind" not in cfg:
        raise ConfigError("config needs a 'kind' key")
    if cfg["kind"] not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {cfg['kind']!r}; valid: "
                          f"{sorted(EXPERIMENT_KINDS)}")
    return cfg


def run(config_path: str, out_dir: str = None, seed: int = None,
        schedule=None) -> dict:
    cfg = load_config(config_path)
    if seed is not None:
        cfg["seed"] = int(seed)
    if schedule is not None:
        cfg["schedule"] = [int(n) for n in schedule]
    out_dir = out_dir or cfg.get("out") or os.environ.get(OUT_ENV) or "."
    t0 = time.monotonic()
    body, files = _RUNNERS[cfg["kind"]](cfg)
    elapsed = time.monotonic() - t0
    report = {"format_version": FORMAT_VERSION, "config": cfg,
              "results": body, "timing": {"wall_seconds": elapsed}}
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "report.json"),
                  json.dumps(report, indent=2, default=_json_default,
                             sort_keys=True) + "\n")
    for name, text in files.items():
        _atomic_write(os.path.join(out_dir, name), text)
    return report


def list_fixtures(filter_text: str = "") -> list[dict]:
    rows = []
    for tag, s in builtin_fixtures().items():
        rows.append({"tag": tag, "kind": "system",
                     "known_class": s.known_class})
    for kind in ("torus_rotation", "bernoulli_shift", "sturmian",
                 "substitution_subshift", "product"):
        rows.append({"tag": kind, "kind": "system_builder", "known_class": ""})
    for kind in ("lattice", "cut_project", "perturbed", "poisson"):
        rows.append({"tag": kind, "kind": "delone_construction",
                     "known_class": ""})
    for kind in ("torus_character", "torus_cosine", "symbol_at",
                 "cylinder_indicator"):
        rows.append({"tag": kind, "kind": "observable", "known_class": ""})
    rows = [r for r in rows if filter_text in r["tag"]]
    return sorted(rows, key=lambda r: (r["kind"], r["tag"]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="meanlab",
        description="Finite-window estimators for mean equicontinuity, "
                    "mean sensitivity, and discrete spectrum.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--schedule", default=None,
                       help="comma-separated window sides")
    p_list = sub.add_parser("list", help="catalog of built-in fixtures")
    p_list.add_argument("--filter", default="")
    args = parser.parse_args(argv)

    if args.command == "list":
        for row in list_fixtures(args.filter):
            label = f" [{row['known_class']}]" if row["known_class"] else ""
            print(f"{row['kind']:20s} {row['tag']}{label}")
        return 0

    if args.threads is not None:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
    schedule = None
    if args.schedule is not None:
        try:
            schedule = [int(n) for n in args.schedule.split(",")]
        except ValueError:
            print("error: --schedule must be comma-separated integers",
                  file=sys.stderr)
            return 2
    try:
        report = run(args.config, out_dir=args.out, seed=args.seed,
                     schedule=schedule)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    print(json.dumps({"kind": report["config"]["kind"],
                      "wall_seconds": report["timing"]["wall_seconds"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
