"""Exact JSON round-trips for functions, sequences, plans, and reports.

Rationals serialize as "p/q" strings (JSON numbers cannot hold them) and
every table is written in lexicographic word order, which is the order
the in-memory tuples already use.  Plan files are self-contained: the
perturbed function is embedded in exact factored form (normal form plus
the profile parameters), so loading one rebuilds the model without
re-running any solver.  Output files are written atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction

from . import aseq
from .cylinder import CylinderFunction
from .lockin import PerturbationPlan
from .maxplus import CertificateError, normal_form
from .packed import ScaledModel, build_c_table
from .shift import PeriodicOrbit, Point, point

SCHEMAS = {
    "function": "shiftlock/function/1",
    "plan": "shiftlock/plan/1",
    "report": "shiftlock/report/1",
    "suite": "shiftlock/suite-report/1",
}


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise ValueError(f"expected a rational string, got {type(s).__name__}")
    return Fraction(s.strip())


# --- functions and sequences ------------------------------------------------------


def function_to_obj(f: CylinderFunction) -> dict:
    return {
        "schema": SCHEMAS["function"],
        "m": f.m,
        "depth": f.depth,
        "table": [frac_str(v) for v in f.table],
    }


def function_from_obj(obj: dict) -> CylinderFunction:
    return CylinderFunction(
        int(obj["m"]), int(obj["depth"]), tuple(parse_frac(v) for v in obj["table"])
    )


def aseq_to_obj(A) -> dict:
    if isinstance(A, aseq.Dyadic):
        return {"kind": A.kind}
    if isinstance(A, aseq.TriangularDyadic):
        return {"kind": A.kind}
    if isinstance(A, aseq.Geometric):
        return {"kind": A.kind, "a0": frac_str(A.a0), "ratio": frac_str(A.r)}
    if isinstance(A, aseq.CustomTable):
        return {
            "kind": A.kind,
            "values": [frac_str(v) for v in A.values],
            "tail_ratio": frac_str(A.tail_ratio),
        }
    raise ValueError(f"unknown A-sequence kind {type(A).__name__}")


def aseq_from_obj(obj: dict):
    kind = obj["kind"]
    if kind == "dyadic":
        return aseq.Dyadic()
    if kind == "triangular_dyadic":
        return aseq.TriangularDyadic()
    if kind == "geometric":
        return aseq.Geometric(parse_frac(obj.get("a0", 1)), parse_frac(obj["ratio"]))
    if kind == "custom_table":
        return aseq.CustomTable(
            tuple(parse_frac(v) for v in obj["values"]), parse_frac(obj["tail_ratio"])
        )
    raise ValueError(f"unknown A-sequence kind {kind!r}")


def point_to_obj(x: Point) -> dict:
    return {"preperiod": list(x.preperiod), "period": list(x.period)}


def point_from_obj(m: int, obj: dict) -> Point:
    return point(m, tuple(obj["preperiod"]), tuple(obj["period"]))


# --- plans ------------------------------------------------------------------------


def plan_to_obj(plan: PerturbationPlan) -> dict:
    return {
        "schema": SCHEMAS["plan"],
        "f": function_to_obj(plan.f),
        "A": aseq_to_obj(plan.A),
        "eps": frac_str(plan.eps),
        "x": point_to_obj(plan.x),
        "k": plan.k,
        "recurrence": list(plan.recurrence),
        "Y": list(plan.Y.necklace),
        "p": plan.p,
        "gamma": frac_str(plan.gamma),
        "lip_bound": frac_str(plan.lip_bound),
        "sigma": frac_str(plan.sigma),
        "alpha": frac_str(plan.alpha),
        "K": plan.K,
        "mode": plan.mode,
        "f_hat": [frac_str(v) for v in plan.nf.f_hat.table],
        "beta": frac_str(plan.nf.beta),
        "beta_tilde": frac_str(plan.beta_tilde),
        "lambda2": frac_str(plan.lambda2),
        "runner_up": [int(e) for e in plan.runner_up],
        "margin0": frac_str(plan.margin0),
        "locked": plan.locked,
        "W": frac_str(plan.W),
        "tie_cycles": [
            {"mean": frac_str(mu), "edges": [int(e) for e in cyc]}
            for mu, cyc in plan.tie_cycles
        ],
        "tie_complete": plan.tie_complete,
        "certificate": plan.certificate,
    }


def plan_from_obj(obj: dict) -> PerturbationPlan:
    """Rebuild a plan without re-running the big solves.

    The cheap normal form is recomputed and checked against the embedded
    table, and the stored orbit/runner-up means are re-verified against
    the rebuilt model, so a corrupted file fails instead of lying.
    """
    if obj.get("schema") != SCHEMAS["plan"]:
        raise ValueError("not a plan file")
    f = function_from_obj(obj["f"])
    A = aseq_from_obj(obj["A"])
    eps = parse_frac(obj["eps"])
    Y = PeriodicOrbit(f.m, tuple(obj["Y"]))
    K = int(obj["K"])
    nf = normal_form(f, A)
    if [frac_str(v) for v in nf.f_hat.table] != obj["f_hat"]:
        raise CertificateError("embedded normal form does not match the function")
    ct = build_c_table(f.m, K, Y)
    model = ScaledModel(nf.f_hat, A, eps, K, Y, ct)
    beta_tilde = parse_frac(obj["beta_tilde"])
    lambda2 = parse_frac(obj["lambda2"])
    runner = tuple(int(e) for e in obj["runner_up"])
    ties = tuple(
        (parse_frac(t["mean"]), tuple(int(e) for e in t["edges"]))
        for t in obj["tie_cycles"]
    )
    if model.cycle_mean(model.y_edges) != beta_tilde:
        raise CertificateError("stored orbit mean does not match the model")
    if model.cycle_mean(runner) != lambda2:
        raise CertificateError("stored runner-up mean does not match the model")
    for mu, cyc in ties:
        if model.cycle_mean(cyc) != mu:
            raise CertificateError("stored tie mean does not match the model")
    return PerturbationPlan(
        f=f, A=A, eps=eps, nf=nf, x=point_from_obj(f.m, obj["x"]),
        k=int(obj["k"]), recurrence=tuple(obj["recurrence"]), Y=Y,
        p=int(obj["p"]), gamma=parse_frac(obj["gamma"]),
        lip_bound=parse_frac(obj["lip_bound"]), sigma=parse_frac(obj["sigma"]),
        alpha=parse_frac(obj["alpha"]), K=K, mode=obj["mode"], model=model,
        beta_tilde=beta_tilde, lambda2=lambda2, runner_up=runner,
        margin0=parse_frac(obj["margin0"]), locked=bool(obj["locked"]),
        W=parse_frac(obj["W"]), tie_cycles=ties,
        tie_complete=bool(obj["tie_complete"]), certificate=obj["certificate"],
    )


def report_to_obj(report, plan: PerturbationPlan) -> dict:
    trials = []
    for t in report.trials:
        comp = None
        if t.competitor is not None:
            comp = list(t.competitor.necklace)
        trials.append(
            {
                "label": t.label,
                "norm": frac_str(t.norm),
                "sup": frac_str(t.sup),
                "margin": frac_str(t.margin),
                "locked": t.locked,
                "competitor": comp,
            }
        )
    return {
        "schema": SCHEMAS["report"],
        "Y": list(plan.Y.necklace),
        "eps_sigma": frac_str(plan.eps * plan.sigma),
        "margin0": frac_str(plan.margin0),
        "seed": report.seed,
        "bound": frac_str(report.bound),
        "all_locked": report.all_locked,
        "min_margin": frac_str(report.min_margin),
        "trials": trials,
    }


# --- files ------------------------------------------------------------------------


def write_json(path: str, obj) -> None:
    """Serialize to a sibling temp file, then atomically replace."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    inputs: dict          # name -> sha256
    seed: int | None
    version: str

    def to_obj(self) -> dict:
        return {
            "command": self.command,
            "inputs": dict(self.inputs),
            "seed": self.seed,
            "version": self.version,
        }


def make_manifest(command: str, paths, seed=None) -> RunManifest:
    """Reproducibility stamp for written reports: no timing, so reruns
    are byte-identical; wall-clock goes to the stderr log instead."""
    from . import __version__

    inputs = {os.path.basename(p): sha256_file(p) for p in paths}
    return RunManifest(command, inputs, seed, __version__)
