"""Command-line entry point: ``run``, ``list-checks``, ``compare-backends``.

Configs are flat ``key = value`` text with dotted keys::

    grid.n = 32
    grid.length = 2pi
    sim.ic = taylor_green
    sim.nu = 0.1
    checks = check_theorem1, monitor_theorem34
    check.check_theorem1.tolerance = 1e-6
    output.dir = out/tg32

Exit codes: 0 all pass, 1 a non-informational check failed, 2 bad config,
3 simulation aborted.
"""
from __future__ import annotations

import argparse
import inspect
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from . import flow
from . import verify
from .grid import make_grid, parse_boundary, write_snapshot
from .helmholtz import quadrature_vs_spectral_report
from .report import dump_json

log = logging.getLogger("helmns")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SIM = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# --- config parsing --------------------------------------------------------------------

def parse_number(text: str) -> float:
    """Float literal, optionally times pi: ``0.1``, ``2pi``, ``pi``, ``2*pi``."""
    s = text.strip().lower().replace("*", "")
    if s.endswith("pi"):
        head = s[:-2].strip()
        return (float(head) if head else 1.0) * math.pi
    return float(s)


def read_kv(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _triple(text: str, conv) -> tuple:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ConfigError(f"expected one or three values, got {text!r}")
    return tuple(conv(p) for p in parts)


def _scalar(text: str) -> Any:
    s = text.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return parse_number(s)
    except ValueError:
        pass
    if "," in s:
        return tuple(_scalar(p) for p in s.split(","))
    return s


@dataclass
class RunConfig:
    n: tuple[int, int, int] = (32, 32, 32)
    length: tuple[float, float, float] = (2 * math.pi,) * 3
    boundary: str = "periodic"
    nu: float = 0.1
    rho: float = 1.0
    dt: float = 5e-3
    t_end: float = 1.0
    snapshot_every: int = 10
    ic: str = "taylor_green"
    ic_params: dict = field(default_factory=dict)
    seed: int = 0
    checks: list = field(default_factory=list)
    check_params: dict = field(default_factory=dict)
    output_dir: str = "out"
    formats: tuple = ("json", "csv")

    def echo(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d["length"] = list(self.length)
        d["formats"] = list(self.formats)
        d["ic_params"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.ic_params.items()}
        return d


_SIM_KEYS = {"sim.nu": "nu", "sim.rho": "rho", "sim.dt": "dt", "sim.t_end": "t_end"}


def load_config(path) -> RunConfig:
    try:
        kv = read_kv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = RunConfig()
    try:
        for key, value in kv.items():
            if key == "grid.n":
                cfg.n = _triple(value, int)
            elif key == "grid.length":
                cfg.length = _triple(value, parse_number)
            elif key == "grid.boundary":
                parse_boundary(value)
                cfg.boundary = value.strip().lower()
            elif key in _SIM_KEYS:
                setattr(cfg, _SIM_KEYS[key], parse_number(value))
            elif key == "sim.snapshot_every":
                cfg.snapshot_every = int(value)
            elif key == "sim.ic":
                cfg.ic = value.strip()
            elif key == "sim.seed":
                cfg.seed = int(value)
            elif key.startswith("ic."):
                cfg.ic_params[key[3:]] = _scalar(value)
            elif key == "checks":
                names = [c.strip() for c in value.split(",") if c.strip()]
                cfg.checks = list(verify.REGISTRY) if names == ["all"] else names
            elif key.startswith("check."):
                _, name, param = key.split(".", 2)
                cfg.check_params.setdefault(name, {})[param] = _scalar(value)
            elif key == "output.dir":
                cfg.output_dir = value
            elif key == "output.formats":
                cfg.formats = tuple(f.strip().lower() for f in value.split(",") if f.strip())
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for name in cfg.checks:
        if name not in verify.REGISTRY:
            raise ConfigError(f"unknown check {name!r}")
    for name, params in cfg.check_params.items():
        if name not in verify.REGISTRY:
            raise ConfigError(f"unknown check {name!r}")
        sig = inspect.signature(verify.REGISTRY[name].run)
        for p, val in params.items():
            if p not in sig.parameters or p == "traj":
                raise ConfigError(f"check {name!r} has no parameter {p!r}")
            if "tol" in p and not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {name}.{p} must be > 0, got {val!r}")
    if cfg.ic not in flow.INITIAL_CONDITIONS:
        raise ConfigError(f"unknown initial condition {cfg.ic!r}; choose from {sorted(flow.INITIAL_CONDITIONS)}")
    sig = inspect.signature(flow.INITIAL_CONDITIONS[cfg.ic])
    for p in cfg.ic_params:
        if p not in sig.parameters or p == "grid":
            raise ConfigError(f"initial condition {cfg.ic!r} has no parameter {p!r}")
    for f in cfg.formats:
        if f not in ("json", "csv"):
            raise ConfigError(f"unknown output format {f!r}")
    if not (cfg.nu > 0 and cfg.rho > 0 and cfg.dt > 0 and cfg.t_end >= 0 and cfg.snapshot_every >= 1):
        raise ConfigError("sim.nu, sim.rho, sim.dt must be > 0, sim.t_end >= 0, sim.snapshot_every >= 1")
    try:
        make_grid(cfg.n, cfg.length, cfg.boundary)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if parse_boundary(cfg.boundary) != parse_boundary("periodic"):
        raise ConfigError("runs need a periodic grid (the flow solver is spectral)")


# --- commands ---------------------------------------------------------------------------

def build_ic(cfg: RunConfig):
    grid = make_grid(cfg.n, cfg.length, cfg.boundary)
    fn = flow.INITIAL_CONDITIONS[cfg.ic]
    params = dict(cfg.ic_params)
    if "seed" in inspect.signature(fn).parameters:
        params.setdefault("seed", cfg.seed)
    return fn(grid, **params)


def run_checks(traj, cfg: RunConfig):
    reports, timings = [], {}
    for name in cfg.checks:
        spec = verify.REGISTRY[name]
        t0 = time.perf_counter()
        rep = spec.run(traj, **cfg.check_params.get(name, {}))
        timings[name] = time.perf_counter() - t0
        rep.informational = rep.informational or spec.informational
        reports.append(rep)
        log.info("%-28s %s worst=%.3e (%.2fs)", name, _status(rep), rep.worst_sup, timings[name])
    return reports, timings


def _status(rep) -> str:
    if not rep.applicable:
        return "n/a"
    if rep.informational:
        return "info"
    return "PASS" if rep.passed else "FAIL"


def run(config_path, out_dir: Optional[str] = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir or cfg.output_dir)
    params = flow.SimParams(nu=cfg.nu, rho=cfg.rho, dt=cfg.dt, steps=int(round(cfg.t_end / cfg.dt)))
    t0 = time.perf_counter()
    try:
        u0 = build_ic(cfg)
        traj = flow.simulate(u0, params, cfg.snapshot_every)
    except flow.SimulationError as exc:
        print(f"simulation aborted at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sim_time = time.perf_counter() - t0
    reports, timings = run_checks(traj, cfg)

    out.mkdir(parents=True, exist_ok=True)
    files = []
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, s in enumerate(traj.states):
        for label, fld in (("u", s.u), ("p", s.p)):
            rel = f"snapshots/{label}_{i:04d}.hnsf"
            write_snapshot(fld, out / rel)
            files.append(rel)
    summary = []
    for rep in reports:
        csv_rel = None
        if "csv" in cfg.formats:
            csv_rel = f"{rep.name}.csv"
            rep.write_csv(out / csv_rel)
            files.append(csv_rel)
        if "json" in cfg.formats:
            dump_json(rep.to_json(csv_rel), out / f"{rep.name}.json")
            files.append(f"{rep.name}.json")
        summary.append({"name": rep.name, "passed": bool(rep.passed), "informational": rep.informational,
                        "applicable": rep.applicable, "worst_sup": rep.worst_sup, "worst_l2": rep.worst_l2,
                        "masked_total": rep.masked_total})
    dump_json({"simulate": sim_time, "checks": timings}, out / "timings.json")
    files.append("timings.json")
    files.append("manifest.json")
    manifest = {
        "artifact_version": __version__,
        "config": cfg.echo(),
        "snapshot_times": [s.t for s in traj.states],
        "checks": summary,
        "files": sorted(files),
    }
    dump_json(manifest, out / "manifest.json")
    failed = [r.name for r in reports if not r.informational and not r.passed]
    for rep in reports:
        print(f"{rep.name:28s} {_status(rep):5s} worst_sup={rep.worst_sup:.3e} tol={rep.tolerance:.1e}")
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def list_checks() -> str:
    lines = []
    for spec in verify.REGISTRY.values():
        kind = ", informational" if spec.informational else ""
        lines.append(f"{spec.name} ({spec.anchor}{kind})")
    return "\n".join(lines)


def load_ladder(path) -> dict:
    kv = read_kv(path)
    known = {"ladder.n", "ladder.length", "ladder.interior", "field", "vortex.scale", "vortex.strength",
             "output.dir", "output.csv", "quadrature.method"}
    for key in kv:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    ns = [int(p) for p in kv.get("ladder.n", "12, 24, 48, 96").split(",")]
    lengths = [parse_number(p) for p in kv.get("ladder.length", "3, 4, 5, 6").split(",")]
    if len(ns) != len(lengths):
        raise ConfigError("ladder.n and ladder.length need the same number of rungs")
    cfg = {
        "n": ns, "length": lengths,
        "interior": float(kv.get("ladder.interior", "0.5")),
        "field": kv.get("field", "gaussian_vortex").strip(),
        "scale": parse_number(kv.get("vortex.scale", "0.5")),
        "strength": parse_number(kv.get("vortex.strength", "1.0")),
        "out": kv.get("output.dir", "out/ladder"),
        "csv": kv.get("output.csv", "backend_ladder.csv"),
        "method": kv.get("quadrature.method", "fft").strip(),
    }
    if cfg["field"] not in ("gaussian_vortex", "taylor_green", "abc"):
        raise ConfigError(f"unknown ladder field {cfg['field']!r}")
    if cfg["method"] not in ("fft", "direct"):
        raise ConfigError(f"unknown quadrature method {cfg['method']!r}")
    return cfg


def backend_ladder(cfg: dict) -> list[dict]:
    if cfg["field"] == "gaussian_vortex":
        def field_fn(g):
            return flow.ic_gaussian_vortex(g, scale=cfg["scale"], strength=cfg["strength"], project=False)
    elif cfg["field"] == "taylor_green":
        field_fn = flow.ic_taylor_green
    else:
        field_fn = flow.ic_abc
    rows = []
    for n, L in zip(cfg["n"], cfg["length"]):
        w = make_grid((n,) * 3, (L,) * 3, "window")
        p = make_grid((n,) * 3, (L,) * 3, "periodic")
        cmp = quadrature_vs_spectral_report(field_fn, w, p, cfg["interior"], cfg["method"])
        rows.append({"n": n, "length": L, "h": L / n, "discrepancy": cmp.discrepancy,
                     "discrepancy_l2": cmp.report.worst_l2, "runtime_spectral": cmp.runtime_spectral,
                     "runtime_quadrature": cmp.runtime_quadrature, "decay_warning": int(cmp.decay_warning)})
    return rows


def compare_backends(config_path, out_dir: Optional[str] = None) -> int:
    try:
        cfg = load_ladder(config_path)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = backend_ladder(cfg)
    out = Path(out_dir or cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    cols = list(rows[0])
    with open(out / cfg["csv"], "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(repr(r[c]) for c in cols) + "\n")
    d = [r["discrepancy"] for r in rows]
    monotone = all(b < a for a, b in zip(d, d[1:]))
    for r in rows:
        flag = "  [decay warning]" if r["decay_warning"] else ""
        print(f"n={r['n']:4d} L={r['length']:.3f} discrepancy={r['discrepancy']:.3e}{flag}")
    print(f"monotone decreasing: {monotone}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="helmns", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate and run the configured checks")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="override output.dir")
    sub.add_parser("list-checks", help="list every check with its anchor")
    p_cmp = sub.add_parser("compare-backends", help="quadrature vs spectral ladder")
    p_cmp.add_argument("config")
    p_cmp.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "run":
        return run(args.config, args.out)
    if args.command == "list-checks":
        print(list_checks())
        return EXIT_OK
    return compare_backends(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
