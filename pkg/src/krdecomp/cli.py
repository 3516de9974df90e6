"""Command-line interface: norms, decompositions, verification, family
inspection, brute-force oracle values, and random instance generation.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from .decompose import (
    AtomicDecomposition,
    AtomicDecomposition0,
    decompose_balanced,
    decompose_full,
    decompose_l1_minimal,
    reconstruct,
    verify_bounds,
)
from .family import DEFAULT_OFFSET, FamilyConfig, dump_pairs_csv
from .measures import (
    DiscreteSignedMeasure,
    Domain,
    measure_from_json,
    measure_to_json,
)
from .oracle import oracle_kr, oracle_kr0
from .solver import GAP_TOL, NormResult, kr0_norm, kr_norm

OK, INPUT_ERROR, VERIFY_FAIL = 0, 1, 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return INPUT_ERROR


def _load_measure(path: str) -> DiscreteSignedMeasure:
    return measure_from_json(Path(path).read_text())


def _parse_box(spec: str) -> Domain:
    """Parse a box given as comma-separated per-axis 'lo:hi' ranges."""
    lo, hi = [], []
    for axis in spec.split(","):
        bounds = axis.split(":")
        if len(bounds) != 2:
            raise ValueError(f"bad box axis '{axis}', expected lo:hi")
        lo.append(float(bounds[0]))
        hi.append(float(bounds[1]))
    return Domain(tuple(lo), tuple(hi))


def _g17(v: float) -> str:
    return format(v, ".17g")


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _norm_payload(result: NormResult, emit: set[str]) -> dict:
    payload: dict = {"value": result.value, "gap": result.gap}
    if "plan" in emit:
        payload["plan"] = [
            {
                "source": list(e.source) if e.source is not None else None,
                "target": list(e.target) if e.target is not None else None,
                "mass": e.mass,
            }
            for e in result.plan.edges
        ]
    if "potential" in emit:
        payload["potential"] = [
            {"point": list(p), "value": v}
            for p, v in zip(result.potential.points, result.potential.values)
        ]
    return payload


def _norm_csv(payload: dict) -> str:
    lines = [f"value,{_g17(payload['value'])}", f"gap,{_g17(payload['gap'])}"]
    for e in payload.get("plan", []):
        src = ";".join(map(_g17, e["source"])) if e["source"] else "bank"
        tgt = ";".join(map(_g17, e["target"])) if e["target"] else "bank"
        lines.append(f"plan,{src},{tgt},{_g17(e['mass'])}")
    for p in payload.get("potential", []):
        lines.append(f"potential,{';'.join(map(_g17, p['point']))},{_g17(p['value'])}")
    return "\n".join(lines) + "\n"


def cmd_norm(args: argparse.Namespace) -> int:
    try:
        m = _load_measure(args.input)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    try:
        result = kr0_norm(m, args.tol) if args.variant == "kr0" else kr_norm(m, args.tol)
    except ValueError as exc:
        return _fail(str(exc))
    emit = set(filter(None, (args.emit or "").split(",")))
    payload = _norm_payload(result, emit)
    text = (
        json.dumps(payload, indent=2) + "\n"
        if args.format == "json"
        else _norm_csv(payload)
    )
    _write_out(text, args.out)
    return OK if result.gap <= args.tol else VERIFY_FAIL


def _dec_to_doc(dec, ratio: float) -> dict:
    return {
        "variant": "kr0" if isinstance(dec, AtomicDecomposition0) else "kr",
        "method": dec.method,
        "offset": dec.family.offset,
        "offset_label": dec.family.offset_label,
        "terms": [list(t) for t in dec.terms],
        "l1": dec.l1,
        "residual_norm": dec.residual_norm,
        "ratio": ratio,
    }


def _dec_from_doc(doc: dict, m: DiscreteSignedMeasure):
    for field in ("variant", "terms", "l1", "residual_norm"):
        if field not in doc:
            raise ValueError(f"decomposition file missing field '{field}'")
    cfg = FamilyConfig(m.domain, doc.get("offset", DEFAULT_OFFSET))
    if doc["variant"] == "kr0":
        terms0 = tuple((int(t[0]), float(t[1])) for t in doc["terms"])
        return AtomicDecomposition0(
            cfg, terms0, float(doc["l1"]), float(doc["residual_norm"]), m,
            doc.get("method", "greedy"),
        )
    terms = tuple((int(t[0]), float(t[1]), float(t[2])) for t in doc["terms"])
    return AtomicDecomposition(
        cfg, terms, float(doc["l1"]), float(doc["residual_norm"]), m,
        doc.get("method", "greedy"),
    )


def cmd_decompose(args: argparse.Namespace) -> int:
    try:
        m = _load_measure(args.input)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    cfg = FamilyConfig(m.domain, args.offset)
    try:
        if args.method == "l1":
            dec = decompose_l1_minimal(m, args.truncate, args.variant, cfg)
        elif args.variant == "kr0":
            dec = decompose_balanced(m, args.tol, cfg, args.min_depth)
        else:
            dec = decompose_full(m, args.tol, cfg, args.min_depth)
    except ValueError as exc:
        return _fail(str(exc))
    norm = kr0_norm(m).value if args.variant == "kr0" else kr_norm(m).value
    ratio = norm / dec.l1 if dec.l1 > 0 else 1.0
    _write_out(json.dumps(_dec_to_doc(dec, ratio), indent=2) + "\n", args.out)
    return OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        m = _load_measure(args.input)
        doc = json.loads(Path(args.dec).read_text())
        dec = _dec_from_doc(doc, m)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    is_kr0 = isinstance(dec, AtomicDecomposition0)
    try:
        fresh = (
            kr0_norm(m - reconstruct(dec)).value
            if is_kr0
            else kr_norm(m - reconstruct(dec)).value
        )
    except ValueError as exc:
        return _fail(str(exc))
    if fresh > dec.residual_norm + max(args.tol, 1e-6):
        return _fail(
            f"decomposition does not match the measure: certified residual "
            f"{fresh:.3e} exceeds the stated {dec.residual_norm:.3e}"
        )
    dec = type(dec)(dec.family, dec.terms, dec.l1, fresh, m, dec.method)
    report = verify_bounds(
        m, dec, args.tol, ratio_floor=args.ratio_floor, check_terms=args.check_terms
    )
    payload = {
        "norm": report.norm,
        "l1": report.l1,
        "residual_norm": report.residual_norm,
        "upper_ok": report.upper_ok,
        "ratio": report.ratio,
        "per_term_lower_ok": report.per_term_lower_ok,
        "ratio_floor_ok": report.ratio_floor_ok,
    }
    _write_out(json.dumps(payload, indent=2) + "\n", args.out)
    ok = report.upper_ok
    if report.per_term_lower_ok is not None:
        ok = ok and report.per_term_lower_ok
    if report.ratio_floor_ok is not None:
        ok = ok and report.ratio_floor_ok
    return OK if ok else VERIFY_FAIL


def cmd_family(args: argparse.Namespace) -> int:
    if args.action != "dump":
        return _fail(f"unknown family action '{args.action}'")
    try:
        domain = _parse_box(args.box)
    except ValueError as exc:
        return _fail(str(exc))
    cfg = FamilyConfig(domain, args.offset)
    _write_out(dump_pairs_csv(cfg, args.count), args.out)
    return OK


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        m = _load_measure(args.input)
        value = (
            oracle_kr0(m, args.unit) if args.variant == "kr0" else oracle_kr(m, args.unit)
        )
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    print(_g17(value))
    return OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.size < 1:
        return _fail("support size must be >= 1")
    try:
        domain = _parse_box(args.box)
    except ValueError as exc:
        return _fail(str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    for i in range(args.count):
        atoms = []
        for _ in range(args.size):
            point = tuple(rng.uniform(lo, hi) for lo, hi in zip(domain.lo, domain.hi))
            atoms.append((point, rng.uniform(-1.0, 1.0)))
        if args.balanced:
            mean = sum(w for _, w in atoms) / len(atoms)
            atoms = [(p, w - mean) for p, w in atoms]
        m = DiscreteSignedMeasure.from_atoms(domain, atoms)
        (out_dir / f"measure_{i:04d}.json").write_text(measure_to_json(m) + "\n")
    print(f"wrote {args.count} measures to {out_dir}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krdecomp",
        description="Kantorovich-Rubinstein norms and atomic decompositions "
        "of finitely supported signed measures on boxes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="compute a norm with certificates")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", choices=["kr0", "kr"], default="kr0")
    p.add_argument("--tol", type=float, default=GAP_TOL)
    p.add_argument("--emit", default="", help="comma list of plan,potential")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("decompose", help="decompose a measure into atoms")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", choices=["kr0", "kr"], default="kr0")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--method", choices=["greedy", "l1"], default="greedy")
    p.add_argument("--truncate", type=int, default=64, help="family size for --method l1")
    p.add_argument("--min-depth", type=int, default=0)
    p.add_argument("--offset", type=float, default=DEFAULT_OFFSET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="check the bound report of a decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--dec", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--check-terms", type=int, default=0)
    p.add_argument("--ratio-floor", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("family", help="inspect the dense pair family")
    p.add_argument("action", choices=["dump"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--box", default="0:1")
    p.add_argument("--offset", type=float, default=DEFAULT_OFFSET)
    p.add_argument("--out")
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("oracle", help="brute-force norm of a quantized instance")
    p.add_argument("--input", required=True)
    p.add_argument("--variant", choices=["kr0", "kr"], default="kr0")
    p.add_argument("--unit", type=float, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate random measure files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--box", default="0:1,0:1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
