"""Command-line front end: ``hybridqm run | selftest | limits``."""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, build_potential, build_state, load_config
from .dynamics import (energy_decomposition, ehrenfest_check, evolve, fit_autocorrelation,
                       momentum_force_check, propagator_slice, qsl_report)
from .errors import ConfigurationError, NumericalAbort
from .grid import LEAK_THRESHOLD, boundary_leak
from .io import write_csv, write_json
from .operators import build_operators
from .symbols import HybridParams
from .uncertainty import exact_bound, limiting_case_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT, EXIT_FLAGS = 0, 1, 2, 3, 4
THREADS_ENV = "HYBRIDQM_THREADS"
LOCK_NAME = ".hybridqm.lock"


def thread_cap() -> int:
    try:
        n = int(os.environ.get(THREADS_ENV, ""))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


class RunDirectory:
    """Exclusive ownership of an output directory via an ``O_EXCL`` lock file."""

    def __init__(self, path: Path):
        self.path = path
        self.lock = path / LOCK_NAME
        self.fd = None

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            self.fd = os.open(self.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise ConfigurationError(f"output directory {str(self.path)!r} is locked by another run",
                                     field="output.directory") from exc
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        os.close(self.fd)
        self.lock.unlink(missing_ok=True)
        return False


def _sweep_row(cfg: ScenarioConfig, axis: str, value: float):
    params = cfg.params.with_(**{axis: value})
    ops = build_operators(params, cfg.grid)
    psi = build_state(cfg)
    V = build_potential(cfg)
    rep = exact_bound(psi, ops, cfg.p_ref)
    d = energy_decomposition(psi, ops, V)
    dh = math.sqrt(max(d["var_K"] + d["var_V"] + 2 * d["cov_KV"], 0.0))
    mt = math.pi * params.hbar / (2 * dh) if dh > 0 else math.inf
    return (axis, value, rep.product, rep.exact_bound, math.sqrt(d["var_K"]), mt)


def execute(cfg: ScenarioConfig, out: Path) -> tuple[list, list]:
    """Run every requested analysis and write its files; returns (files, flags)."""
    files, flags = [], []
    ops = build_operators(cfg.params, cfg.grid)
    psi = build_state(cfg)
    V = build_potential(cfg)
    fmt = cfg.output_format
    names = cfg.analysis_names()
    leak0 = boundary_leak(psi.field)
    if leak0 > LEAK_THRESHOLD:
        flags.append(dict(name="boundary_leak", detail=f"initial edge amplitude {leak0:.3e}"))

    trace = None
    if cfg.evolution is not None:
        trace = evolve(psi, ops, V, cfg.evolution)
        lk = float(np.max(trace.leak))
        if lk > LEAK_THRESHOLD and leak0 <= LEAK_THRESHOLD:
            flags.append(dict(name="boundary_leak", detail=f"edge amplitude reached {lk:.3e}"))
        if fmt == "csv":
            write_csv(out / "trace.csv", trace.CSV_COLUMNS, trace.csv_rows())
            files.append("trace.csv")
        else:
            rows = trace.csv_rows()
            write_json(out / "trace.json", {c: [r[i] for r in rows] for i, c in enumerate(trace.CSV_COLUMNS)})
            files.append("trace.json")

    if "uncertainty" in names:
        rep = exact_bound(psi, ops, cfg.p_ref)
        doc = rep.as_dict()
        doc["params"] = dict(q=cfg.params.q, alpha=cfg.params.alpha, hbar=cfg.params.hbar,
                             mass=cfg.params.mass)
        write_json(out / "uncertainty.json", doc, "uncertainty")
        files.append("uncertainty.json")
        if not rep.log_reliable and cfg.params.delta() > 0:
            flags.append(dict(name="log_moments_unreliable", detail="k = 0 bin carries > 1e-3 of the weight"))
        if not rep.in_regime:
            flags.append(dict(name="expansion_out_of_regime",
                              detail=f"eps={cfg.params.eps():.4g}, delta={cfg.params.delta():.4g}"))

    if "qsl" in names:
        q = qsl_report(psi, ops, V, trace, cfg.fid_threshold)
        doc = q.as_dict()
        doc["mt_ratio"] = (q.t_perp_measured / q.mt_bound) if q.t_perp_measured is not None else None
        write_json(out / "qsl.json", doc, "qsl")
        files.append("qsl.json")
        if not q.mt_integral_ok:
            flags.append(dict(name="mt_integral_violation", detail="Bures angle exceeded Delta H t / hbar"))

    if "ehrenfest" in names:
        ex, mf = ehrenfest_check(trace), momentum_force_check(trace)
        write_json(out / "ehrenfest.json",
                   {"position": ex.__dict__, "momentum": mf.__dict__}, "ehrenfest")
        files.append("ehrenfest.json")
        for nm, r in (("ehrenfest_position", ex), ("ehrenfest_momentum", mf)):
            if not r.passed:
                flags.append(dict(name=nm, detail=f"residual {r.max_residual:.3e} > {r.tolerance:.1e}"))

    if "autocorr_fit" in names:
        fit = fit_autocorrelation(trace)
        write_json(out / "fit.json", fit.as_dict(), "fit")
        files.append("fit.json")
        for f in fit.flags:
            flags.append(dict(name=f"fit_{f}", detail="autocorrelation fit"))

    if "limits_suite" in names:
        cases = limiting_case_suite(cfg.params.q, cfg.params.alpha, cfg.params.hbar, cfg.params.mass)
        write_json(out / "limits.json", {"cases": [c.__dict__ for c in cases],
                                         "all_passed": all(c.passed for c in cases)}, "limits")
        files.append("limits.json")

    for a in cfg.analysis:
        if a["name"] == "propagator":
            t = a.get("t", cfg.evolution.dt * cfg.evolution.n_steps if cfg.evolution else 1.0)
            src = a.get("source_index", cfg.grid.n_points // 2)
            g = propagator_slice(ops, t, src, a.get("source_width"))
            rows = [(float(x), float(v.real), float(v.imag), float(abs(v))) for x, v in zip(cfg.grid.x, g)]
            write_csv(out / "propagator.csv", ("x", "re", "im", "abs"), rows)
            files.append("propagator.csv")
            break

    for a in cfg.analysis:
        if a["name"] == "sweep":
            with ThreadPoolExecutor(max_workers=min(thread_cap(), len(a["values"]))) as pool:
                rows = list(pool.map(lambda v: _sweep_row(cfg, a["axis"], v), a["values"]))
            header = ("axis", "value", "product", "exact_bound", "delta_K", "mt_bound")
            if fmt == "csv":
                write_csv(out / "sweep.csv", header, rows)
                files.append("sweep.csv")
            else:
                write_json(out / "sweep.json", [dict(zip(header, r)) for r in rows])
                files.append("sweep.json")
            break
    return files, flags


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"configuration error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output_dir or "hybridqm_out")
    if not out.is_absolute() and args.out is None and cfg.output_dir:
        out = cfg.base_dir / out
    try:
        with RunDirectory(out):
            files, flags = execute(cfg, out)
            manifest = dict(tool="hybridqm", version=__version__, config_sha256=cfg.sha256,
                            flags=flags, files=files, overridden=bool(args.override_flags and flags),
                            p_ref=cfg.p_ref)
            write_json(out / "manifest.json", manifest, "manifest")
    except ConfigurationError as exc:
        print(f"configuration error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    for f in flags:
        print(f"flag {f['name']}: {f['detail']}", file=sys.stderr)
    if flags and not args.override_flags:
        return EXIT_FLAGS
    print(f"wrote {', '.join(files + ['manifest.json'])} to {out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import acceptance

    only = None
    if args.only:
        try:
            only = sorted({int(s) for s in args.only.split(",") if s.strip()})
        except ValueError:
            print("--only expects comma-separated criterion numbers", file=sys.stderr)
            return EXIT_CONFIG
        bad = [n for n in only if n not in acceptance.CRITERIA]
        if bad:
            print(f"unknown criteria {bad}", file=sys.stderr)
            return EXIT_CONFIG
    results = acceptance.run(only)
    print(acceptance.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_limits(args) -> int:
    try:
        p = HybridParams(args.q, args.alpha, args.hbar, args.mass)
    except ConfigurationError as exc:
        print(f"configuration error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cases = limiting_case_suite(p.q, p.alpha, p.hbar, p.mass)
    print(f"{'case':<5} {'result':<6} {'value':>14} {'target':>10}  description / detail")
    for c in cases:
        print(f"{c.case:<5} {'PASS' if c.passed else 'FAIL':<6} {c.value:>14.6g} {c.target:>10.4g}  "
              f"{c.description}; {c.detail}")
    return EXIT_OK if all(c.passed for c in cases) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridqm", description=__doc__)
    ap.add_argument("--version", action="version", version=f"hybridqm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a JSON scenario")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.directory)")
    r.add_argument("--override-flags", action="store_true",
                   help="exit 0 even when reliability flags are raised")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("selftest", help="run the acceptance criteria")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_selftest)
    lm = sub.add_parser("limits", help="print the limiting-case table")
    lm.add_argument("--q", type=float, required=True)
    lm.add_argument("--alpha", type=float, required=True)
    lm.add_argument("--hbar", type=float, default=1.0)
    lm.add_argument("--mass", type=float, default=1.0)
    lm.set_defaults(func=cmd_limits)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
