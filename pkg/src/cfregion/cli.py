"""Command-line interface: region computation, validation suites and worked examples.

Exit codes: 0 success, 1 failed check or reference disagreement, 2 malformed
or invalid input, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import sys
from fractions import Fraction
from typing import Any, Optional, Sequence

import jsonschema

from . import __version__
from . import cfcore as cf
from . import region as rg
from . import reference, validate
from .intlab import IntMatrix

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_BUDGET = 0, 1, 2, 3
SIG_DIGITS = 12

_number = {"type": "number"}
_prob = {"oneOf": [{"type": "number", "minimum": 0}, {"type": "string", "pattern": r"^\s*\d+\s*(/\s*\d+\s*)?$"}]}
_int_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "integer"}}}
_symbol = {"type": ["integer", "number", "string", "array"]}

_budget = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "b_max": {"type": "integer", "minimum": 1},
        "c_max": {"type": "integer", "minimum": 1},
        "lb_range": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "det_cap": {"type": "integer", "minimum": 1},
    },
}

_GAUSSIAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "H", "P"],
    "properties": {
        "kind": {"const": "gaussian"},
        "H": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _number}},
        "P": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}]},
        "beta": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}]},
        "A": _int_matrix,
        "budget": _budget,
    },
}

_DISCRETE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "pmf", "channel"],
    "properties": {
        "kind": {"enum": ["integer", "finite_field"]},
        "q": {"type": "integer", "minimum": 3},
        "pmf": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "prefixItems": [{"type": "integer"}, _prob], "minItems": 2, "maxItems": 2},
            },
        },
        "modulation": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "prefixItems": [{"type": "integer"}, _symbol], "minItems": 2, "maxItems": 2}},
        },
        "channel": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y"],
                "properties": {
                    "x": {"type": "array", "items": _symbol},
                    "y": {"type": "array", "minItems": 1, "items": {"type": "array", "prefixItems": [_symbol, _prob], "minItems": 2, "maxItems": 2}},
                },
            },
        },
        "A": _int_matrix,
        "budget": _budget,
    },
}

SPEC_SCHEMAS = {"gaussian": _GAUSSIAN_SCHEMA, "integer": _DISCRETE_SCHEMA, "finite_field": _DISCRETE_SCHEMA}


class SpecError(ValueError):
    pass


def _hashable(v: Any):
    return tuple(_hashable(x) for x in v) if isinstance(v, list) else v


def _prob_value(p):
    return Fraction(p.replace(" ", "")) if isinstance(p, str) else p


def _schema_error_message(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


def parse_spec_document(text: str):
    """Parse and validate a spec document; returns (spec, A, budget)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecError("<root>: spec document must be a JSON object")
    schema = SPEC_SCHEMAS.get(doc.get("kind"))
    if schema is None:
        raise SpecError(f"kind: expected one of {sorted(SPEC_SCHEMAS)}, got {doc.get('kind')!r}")
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(doc))
    if err is not None:
        raise SpecError(_schema_error_message(err))
    try:
        return _build(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise SpecError(str(exc)) from exc


def _build(doc: dict):
    kind = doc["kind"]
    if kind == "gaussian":
        spec = cf.GaussianSpec(doc["H"], doc["P"], doc.get("beta"))
    else:
        if kind == "finite_field" and "q" not in doc:
            raise ValueError("finite_field specs need q")
        if kind == "integer" and "q" in doc:
            raise ValueError("integer specs take no q")
        pmfs = [{int(v): _prob_value(p) for v, p in user} for user in doc["pmf"]]
        modulation = None
        if "modulation" in doc:
            if len(doc["modulation"]) != len(pmfs):
                raise ValueError("one modulation table per user required")
            modulation = [{int(u): _hashable(x) for u, x in table} for table in doc["modulation"]]
        channel = {}
        for entry in doc["channel"]:
            x = tuple(_hashable(v) for v in entry["x"])
            if x in channel:
                raise ValueError(f"duplicate channel input {list(entry['x'])}")
            channel[x] = {_hashable(y): _prob_value(p) for y, p in entry["y"]}
        if kind == "finite_field":
            spec = cf.FiniteFieldSpec(doc["q"], pmfs, channel, modulation)
        else:
            spec = cf.IntegerSpec(pmfs, channel, modulation)
        for u in itertools.product(*[sorted(pm) for pm in spec.pmfs]):
            try:
                x = tuple(modulation[k][v] for k, v in enumerate(u)) if modulation else u
            except KeyError as exc:
                raise ValueError(f"modulation table misses symbol {exc}") from exc
            if x not in channel:
                raise ValueError(f"channel has no entry for input {list(x)}")
            if abs(float(sum(channel[x].values())) - 1.0) > 1e-12:
                raise ValueError(f"channel pmf for input {list(x)} does not sum to 1")
    K = spec.K
    A = IntMatrix(doc["A"]) if "A" in doc else IntMatrix.identity(K)
    if A.ncols != K:
        raise ValueError(f"A has {A.ncols} columns but the spec has {K} users")
    b = doc.get("budget", {})
    budget = cf.SearchBudget(
        b_max=b.get("b_max", 3),
        c_max=b.get("c_max", 5),
        lb_range=tuple(b["lb_range"]) if "lb_range" in b else None,
        det_cap=b.get("det_cap"),
    )
    return spec, A, budget


# ---------------------------------------------------------------- region documents


def fmt(x: float) -> float:
    """Round to 12 significant digits for presentation."""
    return float(f"{x:.{SIG_DIGITS}g}")


def region_document(report: cf.RegionReport, mode: str, input_hash: str, nats: bool = False) -> dict:
    K = report.region.K
    scale = math.log(2) if nats else 1.0
    polys = []
    for p in report.region.polyhedra:
        bounds = [
            {"T": [k + 1 for k in b.users], "r": fmt(b.bound * scale), "r_hex": float.hex(float(b.bound))}
            for b in p.bounds
        ]
        entry = {"bounds": bounds}
        if K <= 3 and not p.unbounded_users():
            entry["vertices"] = [[fmt(v * scale) for v in pt] for pt in rg.vertices(p)]
        polys.append(entry)
    ledger = [
        {
            "B": [list(r) for r in rec.B],
            "matroid": rec.matroid,
            "S": [s + 1 for s in rec.S],
            "T": [t + 1 for t in rec.T],
            "bound": fmt(rec.bound * scale),
            "user_entropy": fmt(rec.user_entropy * scale),
            "h_B": fmt(rec.h_B * scale),
            "J": fmt(rec.J * scale),
            "C": [list(r) for r in rec.C] if rec.C is not None else None,
            "J_truncated": rec.j_truncated,
        }
        for rec in report.ledger
    ]
    return {
        "tool": "cfregion",
        "version": __version__,
        "input_sha256": input_hash,
        "mode": mode,
        "units": "nats" if nats else "bits",
        "K": K,
        "polyhedra": polys,
        "B": [[list(r) for r in B] for B in report.B_list],
        "ledger": ledger,
        "truncated": {"B_union": report.b_truncated, "C_search": report.c_truncated},
    }


def load_region_document(doc: dict) -> rg.RateRegion:
    """Rebuild the region of a RegionDocument from its exact (hex) bounds."""
    K = int(doc["K"])
    polys = [
        rg.Polyhedron(K, [(tuple(t - 1 for t in b["T"]), float.fromhex(b["r_hex"])) for b in p["bounds"]])
        for p in doc["polyhedra"]
    ]
    return rg.RateRegion(K, polys, prune_members=False)


def region_csv(report: cf.RegionReport, nats: bool = False) -> str:
    K = report.region.K
    if K > 3:
        raise ValueError("vertex export supports at most 3 users")
    scale = math.log(2) if nats else 1.0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polyhedron"] + [f"R{k + 1}" for k in range(K)])
    for i, p in enumerate(report.region.polyhedra):
        if p.unbounded_users():
            continue
        for pt in rg.vertices(p):
            w.writerow([i] + [repr(fmt(v * scale)) for v in pt])
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_region(args) -> int:
    try:
        with open(args.spec, "rb") as fh:
            raw = fh.read()
        spec, A, budget = parse_spec_document(raw.decode("utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if args.mode == "simultaneous":
            report = cf.simultaneous_R(spec, A, budget)
        else:
            report = cf.sequential_region(spec, A, budget)
    except cf.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.format == "csv":
        text = region_csv(report, args.nats)
    else:
        text = _dumps(region_document(report, args.mode, hashlib.sha256(raw).hexdigest(), args.nats))
    _emit(text, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    reports = validate.run_suite(args.suite, seed=args.seed, trials=args.trials)
    doc = {"seed": args.seed, "suite": args.suite, "passed": all(r.passed for r in reports), "checks": [r.to_dict() for r in reports]}
    sys.stdout.write(_dumps(doc))
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _jsonable(x):
    if isinstance(x, float):
        return fmt(x) if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def cmd_examples(args) -> int:
    outcome = reference.EXAMPLES[args.name]()
    sys.stdout.write(_dumps({"example": outcome.name, "agree": outcome.agree, **_jsonable(outcome.payload)}))
    return EXIT_OK if outcome.agree else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfregion", description="Compute-forward rate regions.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("region", help="compute a rate region from a JSON spec")
    r.add_argument("spec")
    r.add_argument("--mode", choices=["simultaneous", "sequential"], default="simultaneous")
    r.add_argument("--out")
    r.add_argument("--format", choices=["json", "csv"], default="json")
    r.add_argument("--nats", action="store_true", help="present rates in nats")
    r.set_defaults(func=cmd_region)

    v = sub.add_parser("validate", help="run numerical lemma checks")
    v.add_argument("--suite", choices=["all", *validate.SUITES], default="all")
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--trials", type=int)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("examples", help="reproduce a worked example")
    e.add_argument("name", choices=sorted(reference.EXAMPLES))
    e.set_defaults(func=cmd_examples)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
