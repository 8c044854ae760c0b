"""Command line interface: run, sweep, check and geometry export/import.

The thread count of the numerical libraries is taken from the
IGABEM_NUM_THREADS environment variable (applied before numpy loads).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

THREADS_ENV = "IGABEM_NUM_THREADS"


def _apply_thread_env() -> None:
    n = os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
            os.environ.setdefault(var, n)


_apply_thread_env()

from pathlib import Path  # noqa: E402

EXIT_USAGE = 2
EXIT_WARNINGS = 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="igabem", description="Isogeometric collocation BEM for Helmholtz problems")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, text in (("run", "solve one configuration"), ("sweep", "solve every configuration of a sweep")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--problem", help="use the reference settings of a benchmark problem")
        p.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                       help="override a configuration field (VALUE parsed as JSON)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--strict", action="store_true", help="exit nonzero if the solver emitted warnings")

    p = sub.add_parser("check", help="run the built-in invariant checks")
    p.add_argument("--quick", action="store_true", help="skip the boundary-integral checks")

    g = sub.add_parser("geom", help="export or inspect multipatch geometries")
    gs = g.add_subparsers(dest="geom_command", required=True)
    e = gs.add_parser("export", help="write a built-in geometry as JSON")
    e.add_argument("name", choices=["sphere", "torus"])
    e.add_argument("file")
    i = gs.add_parser("import", help="load a JSON geometry and report its properties")
    i.add_argument("file")
    return ap


def _load_config(args):
    from .config import ConfigError, RunConfig
    if args.config and args.problem:
        raise ConfigError("problem", "give either --config or --problem")
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(item, "override must look like FIELD=VALUE")
        k, v = item.split("=", 1)
        try:
            overrides[k] = json.loads(v)
        except json.JSONDecodeError:
            overrides[k] = v
    if args.out:
        overrides["out"] = args.out
    if args.strict:
        overrides["strict"] = True
    if args.config:
        d = RunConfig.load(args.config).to_dict()
        d.update(overrides)
        return RunConfig.from_dict(d)
    return RunConfig.preset(args.problem or "rigid_scattering", **overrides)


def _cmd_run(args, sweep: bool) -> int:
    from .config import run, sweep as do_sweep
    cfg = _load_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    if sweep:
        records = do_sweep(cfg, out)
    else:
        records = [run(cfg, out, tag="run")]
    print("%-8s %-10s %-7s %-12s %-9s" % ("n", "h", "N_DOF", "e_L2", "time[s]"))
    for r in records:
        print("%-8s %-10.4g %-7d %-12.4e %-9.2f" % (r.n, r.h, r.n_dof, r.e_l2, r.runtime_s))
        if r.e_p_max is not None:
            print("         max e_P on the circle: %.4e" % r.e_p_max)
    n_warn = sum(len(r.warnings) for r in records)
    if n_warn:
        print("%d solver warning(s); see the JSON records" % n_warn, file=sys.stderr)
        if cfg.strict:
            return EXIT_WARNINGS
    return 0


def _cmd_check(args) -> int:
    from .checks import run_checks
    results = run_checks(quick=args.quick)
    failed = 0
    for name, ok, detail in results:
        print("%s  %-40s %s" % ("PASS" if ok else "FAIL", name, detail))
        failed += not ok
    return 1 if failed else 0


def _cmd_geom(args) -> int:
    from .geometry import MultiPatchSurface, sphere, torus
    if args.geom_command == "export":
        surf = sphere() if args.name == "sphere" else torus()
        surf.save(args.file)
        print("wrote %d patches to %s" % (len(surf), args.file))
        return 0
    surf = MultiPatchSurface.load(args.file)
    print("patches:             %d" % len(surf))
    print("interfaces:          %d" % len(surf.interfaces))
    print("closed:              %s" % surf.is_closed)
    print("orientation:         %+d" % surf.orientation)
    print("consistent normals:  %s" % surf.orientation_consistent())
    print("max interface gap:   %.3e" % surf.interface_error())
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    from .config import ConfigError
    try:
        if args.command == "run":
            return _cmd_run(args, sweep=False)
        if args.command == "sweep":
            return _cmd_run(args, sweep=True)
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_geom(args)
    except ConfigError as exc:
        print("igabem: configuration error in %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print("igabem: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
