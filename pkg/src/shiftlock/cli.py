"""Command line: norms, maximizers, normal forms, lock-in plans, suites.

Every number prints as an exact "p/q" string; --float adds decimal twins
next to the exact values without replacing them.  Each flag can also be
set in a TOML config (--config, one table per subcommand, dashes spelled
as underscores); an explicit flag wins over the config.  Machine output
goes to stdout, human chatter and timing to stderr, so runs with the
same inputs and seed are byte-identical on stdout.  Output files carry a
run manifest (command, input hashes, seed, version, timing).

Exit codes: 0 success, 1 usage, 2 bad input, 3 a certificate or suite
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from fractions import Fraction

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import jsonio, verify
from .aseq import CustomTable, Dyadic, Geometric, TriangularDyadic
from .cylinder import ergodic_average, lift_depth, norm_report
from .jsonio import frac_str, parse_frac
from .lockin import build_perturbation, empirical_lockin_radius, lockin_report
from .maxplus import (
    CertificateError,
    build_graph,
    max_mean_cycle,
    normal_form,
    oracle_max,
)


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


# --- option plumbing --------------------------------------------------------------


def _load_config(path):
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _opt(args, cfg, name, default=None):
    """CLI value if given, else the config table for this subcommand."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    return cfg.get(args.command, {}).get(name, default)


def _sequence_from_spec(spec) -> "Dyadic | TriangularDyadic | Geometric | CustomTable":
    """Named shorthand or a JSON file holding a sequence object.

    Shorthands: dyadic | triangular | geometric:RATIO (optionally
    geometric:A0:RATIO) | custom:v1,v2,...:TAIL_RATIO.
    """
    if not isinstance(spec, str):
        raise ValueError("sequence spec must be a string")
    if spec == "dyadic":
        return Dyadic()
    if spec in ("triangular", "triangular-dyadic"):
        return TriangularDyadic()
    if spec.startswith("geometric:"):
        parts = spec.split(":")[1:]
        if len(parts) == 1:
            return Geometric(Fraction(1), parse_frac(parts[0]))
        if len(parts) == 2:
            return Geometric(parse_frac(parts[0]), parse_frac(parts[1]))
        raise ValueError(f"bad geometric spec {spec!r}")
    if spec.startswith("custom:"):
        parts = spec.split(":")[1:]
        if len(parts) != 2:
            raise ValueError(f"bad custom spec {spec!r} (want custom:v1,v2:tail)")
        vals = tuple(parse_frac(v) for v in parts[0].split(","))
        return CustomTable(vals, parse_frac(parts[1]))
    if os.path.exists(spec):
        return jsonio.aseq_from_obj(jsonio.read_json(spec))
    raise ValueError(f"unrecognized sequence spec {spec!r}")


_FRAC_RE = re.compile(r"-?\d+(/\d+)?$")


def _floatify(obj):
    """Add key_float twins beside every exact "p/q" value, recursively."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out[k] = _floatify(v)
            if isinstance(v, str) and _FRAC_RE.match(v):
                out[f"{k}_float"] = float(Fraction(v))
            elif (
                isinstance(v, list)
                and v
                and all(isinstance(t, str) and _FRAC_RE.match(t) for t in v)
            ):
                out[f"{k}_float"] = [float(Fraction(t)) for t in v]
        return out
    if isinstance(obj, list):
        return [_floatify(v) for v in obj]
    return obj


def _emit(obj, args, cfg):
    want = getattr(args, "float_out", None)
    if want is None:
        want = bool(cfg.get("float", False))
    if want:
        obj = _floatify(obj)
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _write_output(path, payload, command, inputs, seed):
    payload = dict(payload)
    payload["manifest"] = jsonio.make_manifest(command, inputs, seed=seed).to_obj()
    jsonio.write_json(path, payload)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _load_function(path):
    return jsonio.function_from_obj(jsonio.read_json(path))


# --- subcommands ------------------------------------------------------------------


def cmd_norm(args, cfg):
    f = _load_function(args.fn)
    A = _sequence_from_spec(_opt(args, cfg, "sequence", "dyadic"))
    rep = norm_report(f, A)
    obj = {
        "m": f.m,
        "depth": rep.depth,
        "sequence": jsonio.aseq_to_obj(A),
        "variations": [frac_str(v) for v in rep.variations],
        "tails": [frac_str(v) for v in rep.tails],
        "sup": frac_str(rep.sup),
        "lip": frac_str(rep.lip),
        "a_norm": frac_str(rep.norm),
    }
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, obj, "norm", [args.fn], None)
    _emit(obj, args, cfg)
    return 0


def cmd_maximize(args, cfg):
    f = _load_function(args.fn)
    mm = max_mean_cycle(build_graph(f if f.depth >= 1 else lift_depth(f, 1)))
    obj = {
        "beta": frac_str(mm.beta),
        "unique": mm.unique,
        "cycles_truncated": mm.cycles_truncated,
        "cycles": [
            {
                "necklace": list(o.necklace),
                "period": o.period,
                "mean": frac_str(ergodic_average(f, o)),
            }
            for o in mm.critical_cycles
        ],
    }
    period = _opt(args, cfg, "oracle_period")
    if period is not None:
        beta_oracle, _, _ = oracle_max(f, int(period))
        if beta_oracle != mm.beta:
            raise CertificateError(
                f"orbit oracle max {beta_oracle} disagrees with solver {mm.beta}"
            )
        obj["oracle_period"] = int(period)
        obj["oracle_agrees"] = True
    csv_path = _opt(args, cfg, "csv")
    if csv_path:
        _write_csv(
            csv_path,
            ("necklace", "period", "mean"),
            [
                ("".join(map(str, c["necklace"])), c["period"], c["mean"])
                for c in obj["cycles"]
            ],
        )
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, obj, "maximize", [args.fn], None)
    _emit(obj, args, cfg)
    return 0


def cmd_normal_form(args, cfg):
    f = _load_function(args.fn)
    A = _sequence_from_spec(_opt(args, cfg, "sequence", "dyadic"))
    nf = normal_form(f, A)
    obj = {
        "beta": frac_str(nf.beta),
        "f_hat": jsonio.function_to_obj(nf.f_hat),
        "h": jsonio.function_to_obj(nf.h.h),
        "certificates": {name: ok for name, ok in nf.certificates},
        "sequence": jsonio.aseq_to_obj(A),
    }
    _emit(obj, args, cfg)
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, obj, "normal-form", [args.fn], None)
    return 0


def cmd_perturb(args, cfg):
    f = _load_function(args.fn)
    A = _sequence_from_spec(_opt(args, cfg, "sequence", "dyadic"))
    eps = _opt(args, cfg, "epsilon")
    if eps is None:
        raise _Usage("perturb needs --epsilon")
    k = _opt(args, cfg, "k")
    K = _opt(args, cfg, "big_k")
    plan = build_perturbation(
        f,
        A,
        parse_frac(eps),
        k=None if k is None else int(k),
        K=None if K is None else int(K),
    )
    obj = {
        "mode": plan.mode,
        "orbit": {"necklace": list(plan.Y.necklace), "period": plan.p},
        "recurrence": list(plan.recurrence),
        "k": plan.k,
        "K": plan.K,
        "gamma": frac_str(plan.gamma),
        "lip_bound": frac_str(plan.lip_bound),
        "sigma": frac_str(plan.sigma),
        "alpha": frac_str(plan.alpha),
        "beta_tilde": frac_str(plan.beta_tilde),
        "margin0": frac_str(plan.margin0),
        "locked_at_zero": plan.locked,
        "tie_census_complete": plan.tie_complete,
    }
    _emit(obj, args, cfg)
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, jsonio.plan_to_obj(plan), "perturb", [args.fn], None)
    return 0


def cmd_lockin(args, cfg):
    plan = jsonio.plan_from_obj(jsonio.read_json(args.plan))
    trials = int(_opt(args, cfg, "trials", 24))
    seed = int(_opt(args, cfg, "seed", 0))
    bound = _opt(args, cfg, "bound")
    rep = lockin_report(
        plan, trials=trials, seed=seed, bound=None if bound is None else parse_frac(bound)
    )
    obj = jsonio.report_to_obj(rep, plan)
    radius = _opt(args, cfg, "empirical_radius")
    if radius:
        lo, hi = empirical_lockin_radius(plan, trials=trials, seed=seed)
        obj["theorem_radius"] = frac_str(plan.eps * plan.sigma)
        obj["empirical_radius"] = {"lo": frac_str(lo), "hi": frac_str(hi)}
    csv_path = _opt(args, cfg, "csv")
    if csv_path:
        _write_csv(
            csv_path,
            ("label", "norm", "margin", "locked"),
            [(t["label"], t["norm"], t["margin"], t["locked"]) for t in obj["trials"]],
        )
    _emit(obj, args, cfg)
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, obj, "lockin", [args.plan], seed)
    if plan.locked and plan.mode == "certified" and not rep.all_locked:
        print("lockin: a trial inside the certified radius unlocked", file=sys.stderr)
        return 3
    return 0


def cmd_verify(args, cfg):
    name = _opt(args, cfg, "suite", "all")
    seed = int(_opt(args, cfg, "seed", 0))
    n = int(_opt(args, cfg, "instances", 100))
    if name != "all" and name not in verify.suite_names():
        raise _Usage(
            f"unknown suite {name!r}; choose from {', '.join(verify.suite_names())} or all"
        )
    names = verify.suite_names() if name == "all" else (name,)
    reports = [verify.run_suite(nm, seed, n) for nm in names]
    for rep in reports:
        print(rep.summary(), file=sys.stderr)
    ok = all(r.status == "pass" for r in reports)
    obj = {
        "status": "pass" if ok else "fail",
        "seed": seed,
        "instances": n,
        "suites": [r.to_obj() for r in reports],
    }
    _emit(obj, args, cfg)
    out = _opt(args, cfg, "out")
    if out:
        _write_output(out, obj, "verify", [], seed)
    return 0 if ok else 3


# --- wiring -----------------------------------------------------------------------


def _build_parser() -> _Parser:
    p = _Parser(prog="shiftlock", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML file with one option table per subcommand")
    p.add_argument(
        "--float",
        dest="float_out",
        action="store_const",
        const=True,
        help="add decimal twins next to exact p/q values",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def seq_flag(sp):
        sp.add_argument(
            "--sequence",
            help="dyadic | triangular | geometric:[a0:]r | custom:v1,..:tail | file.json",
        )

    sp = sub.add_parser("norm", help="exact variations, tails, and norm of a table")
    sp.add_argument("fn", help="function JSON file")
    seq_flag(sp)
    sp.add_argument("-o", "--out", help="also write the result (with manifest) here")

    sp = sub.add_parser("maximize", help="max mean over periodic orbits, with cycles")
    sp.add_argument("fn")
    sp.add_argument(
        "--oracle-period",
        dest="oracle_period",
        type=int,
        help="cross-check beta against brute force over periods <= P",
    )
    sp.add_argument("--csv", help="write the critical cycle table to this CSV file")
    sp.add_argument("-o", "--out", help="also write the result (with manifest) here")

    sp = sub.add_parser("normal-form", help="nonpositive cohomologous representative")
    sp.add_argument("fn")
    seq_flag(sp)
    sp.add_argument("-o", "--out", help="also write the result (with manifest) here")

    sp = sub.add_parser("perturb", help="build a lock-in plan around the maximizer")
    sp.add_argument("fn")
    seq_flag(sp)
    sp.add_argument("--epsilon", help="perturbation budget, exact p/q in [0, 1)")
    sp.add_argument("--k", type=int, help="tracking depth (default: derived)")
    sp.add_argument(
        "--K", dest="big_k", type=int, help="truncation depth (default: derived)"
    )
    sp.add_argument("-o", "--out", help="write the plan JSON here")

    sp = sub.add_parser("lockin", help="run exact trials against a plan file")
    sp.add_argument("plan", help="plan JSON file from perturb -o")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--bound", help="trial norm bound, exact p/q")
    sp.add_argument(
        "--empirical-radius",
        dest="empirical_radius",
        action="store_const",
        const=True,
        help="also bracket the observed lock-in radius",
    )
    sp.add_argument("--csv", help="write per-trial margins to this CSV file")
    sp.add_argument("-o", "--out")

    sp = sub.add_parser("verify", help="run randomized verification suites")
    sp.add_argument("--suite", help="suite name or: all")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--instances", type=int)
    sp.add_argument("-o", "--out")

    return p


_HANDLERS = {
    "norm": cmd_norm,
    "maximize": cmd_maximize,
    "normal-form": cmd_normal_form,
    "perturb": cmd_perturb,
    "lockin": cmd_lockin,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args.config)
        started = time.monotonic()
        code = _HANDLERS[args.command](args, cfg)
        print(f"{args.command}: {time.monotonic() - started:.2f}s", file=sys.stderr)
        return code
    except _Usage as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except CertificateError as err:
        print(f"certificate failure: {err}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
