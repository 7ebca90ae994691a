"""Command-line entry point: simulate, reproduce, dp and asymptotics."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import asymptotics as asy
from . import presets
from .harness import ConfigError, ScenarioConfig, emit, format_table, run_scenario, write_records

FORMATS = ("csv", "table-text", "plot-data")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _formats(text: str) -> list:
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise UsageError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return fmts


def cmd_simulate(args) -> dict:
    cfg = ScenarioConfig.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.trials is not None:
        over["trials"] = args.trials
    cfg = replace(cfg, **over) if over else cfg
    Path(args.out).mkdir(parents=True, exist_ok=True)
    res = run_scenario(cfg, workers=args.workers, keep_records=args.dump_records)
    files = emit(res.rows, args.out, _formats(args.format))
    if args.dump_records:
        files.append(write_records(res.records, Path(args.out) / "records.csv"))
    return {"status": "ok", "rows": len(res.rows), "files": [str(f) for f in files]}


def cmd_reproduce(args) -> dict:
    files, rows = [], 0
    for cfg in presets.PRESETS[args.target](trials=args.trials, seed=args.seed):
        res = run_scenario(cfg, workers=args.workers)
        files += emit(res.rows, args.out, _formats(args.format), stem=cfg.name)
        rows += len(res.rows)
        if not args.quiet:
            for metric in ("pfa", "add", "fdr"):
                if any(getattr(r, metric) is not None for r in res.rows):
                    print(format_table(res.rows, metric), file=sys.stderr)
    return {"status": "ok", "rows": rows, "files": [str(f) for f in files]}


def cmd_dp(args) -> dict:
    from .dp import DPInstance, backward_induction, threshold_diagnostic
    from .observation import QuantizedModel
    from .state_model import PriorParams

    model = QuantizedModel(tuple(args.pmf0), tuple(args.pmf1))
    tables = {}
    for rho in args.rho:
        inst = DPInstance([[0.0, 0.0]], [[args.sensor_distance, 0.0]], args.rmax,
                          PriorParams(rho, args.rho1), model)
        tables[rho] = backward_induction(inst, args.cost, args.horizon, args.resolution)
    first = tables[args.rho[0]]
    return {"status": "ok", "value_at_prior": first.value(0, first.instance.filter().initial()),
            "diagnostic": [asdict(r) for r in threshold_diagnostic(tables)]}


def cmd_asymptotics(args) -> dict:
    if args.what == "qphi":
        return {"q_phi": asy.q_phi_quadrature(args.phi, args.R, args.theta, args.clamp, args.d0, args.reading),
                "q_phi_closed": asy.q_phi_closed(args.phi, args.R) if args.theta == 2 else None}
    if args.what == "lambda":
        return {"lambda": asy.lambda_limit(args.phi, args.density)}
    q = asy.q_phi_quadrature(args.phi, args.R, args.theta, args.clamp, args.d0)
    return {"q_phi": q, "add": asy.add_approx_attenuating(args.alpha, args.rho, args.L, q),
            "lower_bound_flat": asy.add_lower_bound(args.alpha, args.rho, [asy.flat_drift(args.L, args.phi)])}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="radialqd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario config file")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", default="csv,table-text,plot-data")
    s.add_argument("--dump-records", action="store_true")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="run a desk-scale table or figure preset")
    r.add_argument("target", choices=sorted(presets.PRESETS))
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="results")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--format", default="csv,table-text,plot-data")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_reproduce)

    d = sub.add_parser("dp", help="backward induction on a one-origin quantized instance")
    d.add_argument("--rho", type=float, nargs="+", default=[0.1, 0.01, 0.001])
    d.add_argument("--rho1", type=float, default=1.0)
    d.add_argument("--rmax", type=int, default=1)
    d.add_argument("--cost", type=float, default=0.05)
    d.add_argument("--horizon", type=int, default=20)
    d.add_argument("--resolution", type=int, default=2000)
    d.add_argument("--pmf0", type=float, nargs="+", default=[0.7, 0.3])
    d.add_argument("--pmf1", type=float, nargs="+", default=[0.3, 0.7])
    d.add_argument("--sensor-distance", type=float, default=0.5)
    d.set_defaults(func=cmd_dp)

    a = sub.add_parser("asymptotics", help="drift and delay approximations")
    a.add_argument("what", choices=["qphi", "lambda", "add"])
    a.add_argument("--phi", type=float, default=1.0)
    a.add_argument("--R", type=float, default=10.0)
    a.add_argument("--theta", type=float, default=2.0)
    a.add_argument("--clamp", default="unit-floor")
    a.add_argument("--d0", type=float, default=1.0)
    a.add_argument("--reading", default="density", choices=["density", "printed"])
    a.add_argument("--density", type=float, default=1.0)
    a.add_argument("--alpha", type=float, default=0.01)
    a.add_argument("--rho", type=float, default=0.02)
    a.add_argument("--L", type=int, default=100)
    a.set_defaults(func=cmd_asymptotics)
    return p


def _fail(kind: str, exc) -> int:
    msg = " ".join(str(exc).split())
    print(json.dumps({"status": "error", "error": kind, "message": msg}), file=sys.stderr)
    return 2 if kind in ("usage", "config") else 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = args.func(args)
    except UsageError as exc:
        return _fail("usage", exc)
    except ConfigError as exc:
        return _fail("config", exc)
    except OSError as exc:
        return _fail("io", exc)
    except Exception as exc:  # noqa: BLE001 - surface any failure as one machine-readable line
        return _fail(type(exc).__name__, exc)
    print(json.dumps(out, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
