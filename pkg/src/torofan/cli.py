"""Command-line entry point: `torofan <command> ...`."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .cech import CechError, CechSetup, complete_cohomology_dims, e1_degeneration_check, higher_direct_image_check
from .cones import ConeError
from .fans import FanError, FanQuadruple, fan_validate, orbit_closure_triple
from .forms import FormError, FormSpec, hilbert_table, verify_phi_ses_identities, verify_pushforward, verify_reflexive_intersection
from .io import SchemaError, chain_from_data, chain_to_data, dumps, fan_to_data, load_fan_file
from .linalg import DimensionError
from .sortedness import Counterexample, SortednessMode, certificate_to_json, classify_sorted, geometric_partial_check
from .subdivision import (
    SubdivisionError,
    canonicity_failures,
    ext,
    find_separating_ray,
    resolve_log_simplicial,
    sequential_star,
    star_quadruple,
    verify_chain,
)

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2
INPUT_ERRORS = (SchemaError, FanError, ConeError, SubdivisionError, FormError, CechError, DimensionError, OSError)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Command-line mistakes are input errors (exit 1); exit 2 is reserved for failed properties."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class Outcome:
    """What a command found: a verdict, its tags, and any payload for the JSON report."""

    def __init__(self, verdict: str, holds: bool, tags=(), **body):
        self.verdict = verdict
        self.holds = holds
        self.tags = set(tags) | {verdict}
        self.body = body


def _ray_arg(text: str, q: FanQuadruple) -> tuple:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad ray {text!r}: give an index or comma-separated integers") from None
    if len(values) == 1 and q.fan.ambient_rank != 1:
        if not 0 <= values[0] < len(q.fan.rays):
            raise UsageError(f"ray index {values[0]} out of range")
        return q.fan.rays[values[0]]
    if len(values) != q.fan.ambient_rank:
        raise UsageError(f"ray {text!r} has the wrong length")
    return tuple(values)


def _order(ff, name: str) -> tuple:
    if name not in ff.orders:
        raise UsageError(f"no order named {name!r} in the input (have: {', '.join(sorted(ff.orders)) or 'none'})")
    return ff.orders[name]


def _ps(args, n: int) -> list[int]:
    return list(range(n + 1)) if args.p is None else [args.p]


# ---------------------------------------------------------------- commands


def cmd_validate(args, ff):
    report = fan_validate(ff.fan)
    verdict = "valid" if report.ok else "invalid"
    return Outcome(verdict, report.ok, violations=list(report.violations))


def cmd_classify(args, ff):
    q = ff.quadruple
    mode = SortednessMode.well(q) if args.mode == "well" else SortednessMode.partial(q)
    result = classify_sorted(q, mode)
    sorted_ = not isinstance(result, Counterexample)
    name = "well-sorted" if args.mode == "well" else "partially-sorted"
    verdict = name if sorted_ else f"not {name}"
    tag = args.mode if sorted_ else f"not-{args.mode}"
    body = {"mode": args.mode}
    if sorted_:
        body["certificate"] = certificate_to_json(result, q)
    else:
        body["counterexample"] = sorted(q.fan.index[r] for r in result.cone)
    if args.mode == "partial":
        body["geometric_criterion"] = geometric_partial_check(q).ok
    return Outcome(verdict, True, [tag], **body)


def cmd_subdivide(args, ff):
    q = ff.quadruple
    if args.star is not None:
        nu = _ray_arg(args.star, q)
        result = star_quadruple(q, nu, args.role)
        body = {"operation": "star", "ray": list(nu)}
    elif args.seq is not None:
        order = _order(ff, args.seq)
        chain = sequential_star(q, order, order)
        result = chain.final
        body = {"operation": "sequential-star", "order": [list(r) for r in order], "steps": len(chain.steps)}
    else:
        if not q.is_affine():
            raise UsageError("--ext extends an affine fan")
        nu = _ray_arg(args.ext, q)
        fan = ext(q.fan, q.fan.rays, nu)
        result = q.on(fan)
        body = {"operation": "ext", "ray": list(nu)}
    canonical = result.on(result.fan.canonical())
    data = fan_to_data(canonical)
    if args.fan_out:
        Path(args.fan_out).write_text(dumps(data), encoding="utf-8")
    body["fan"] = data
    body["simplicial"] = result.fan.is_simplicial()
    body["valid"] = fan_validate(result.fan).ok
    return Outcome("subdivided", body["valid"], ["valid" if body["valid"] else "invalid"], **body)


def cmd_resolve(args, ff):
    q = ff.quadruple
    order = _order(ff, args.order)
    outdir = Path(args.outdir)
    chain_path = outdir / "chain.json"
    previous = None
    if chain_path.exists():
        previous = chain_from_data(json.loads(chain_path.read_text(encoding="utf-8")))
    chain = resolve_log_simplicial(q, order)
    problems = verify_chain(chain)
    final = chain.final
    body = {
        "order": [list(r) for r in order],
        "steps": [{"kind": s.kind, "datum": None if s.datum is None else list(s.datum)} for s in chain.steps],
        "efficient": chain.is_efficient(),
        "log_simplicial": final.is_log_simplicial(),
        "simplicial": final.fan.is_simplicial(),
        "certificate_problems": problems,
        "canonicity_failures": [list(map(list, c)) for c in canonicity_failures(q, order, final.fan)] if q.is_affine() else [],
    }
    data = chain_to_data(chain)
    if previous is not None:
        body["previous_chain_verified"] = not verify_chain(previous)
        body["idempotent"] = chain_to_data(previous) == data
    outdir.mkdir(parents=True, exist_ok=True)
    chain_path.write_text(dumps(data), encoding="utf-8")
    for k, step in enumerate(data["steps"]):
        (outdir / f"step{k}_certificates.json").write_text(dumps(step.get("certificates", [])), encoding="utf-8")
    (outdir / "final.json").write_text(dumps(fan_to_data(final)), encoding="utf-8")
    body["chain_file"] = str(chain_path)
    ok = not problems and body["efficient"] and body["log_simplicial"] and not body["canonicity_failures"]
    return Outcome("verified" if ok else "unverified", ok, **body)


def cmd_forms(args, ff):
    q = ff.quadruple
    twist = None
    if args.twist:
        if args.twist not in ff.divisors:
            raise UsageError(f"no divisor named {args.twist!r}")
        twist = ff.divisors[args.twist]
    if not q.is_affine():
        raise UsageError("forms tables are computed on affine inputs")
    tables = {}
    for p in _ps(args, q.fan.ambient_rank):
        table = hilbert_table(FormSpec(q, p, twist), args.bound)
        tables[str(p)] = table.to_json()
    return Outcome("computed", True, hilbert=tables)


def _setup_for(args, ff, p: int) -> CechSetup:
    q = ff.quadruple
    if args.orbit is not None:
        ray = _ray_arg(args.orbit, q)
        if ray not in q.fan.index:
            raise UsageError(f"--orbit {args.orbit!r} is not a ray of the fan")
        q, _ = orbit_closure_triple(q, ray)
    base = None
    if args.relative:
        base = load_fan_file(args.relative).quadruple
    return CechSetup(FormSpec(q, p), base)


def cmd_cech(args, ff):
    if not args.relative and not args.complete:
        raise UsageError("choose --relative BASE or --complete")
    if args.relative:
        setup = _setup_for(args, ff, 0)
        report = higher_direct_image_check(setup, _ps(args, setup.rank), args.bound)
        return Outcome("vanishing" if report.ok else "nonvanishing", report.ok, direct_images=report.to_json())
    setup = _setup_for(args, ff, 0)
    table = complete_cohomology_dims(setup)
    return Outcome("computed", True, cohomology=table.to_json(), total=table.total())


def cmd_verify(args, ff):
    q = ff.quadruple
    kind = args.kind
    if kind == "reflexive":
        report = verify_reflexive_intersection(q, args.bound, None if args.p is None else [args.p])
        return Outcome("pass" if report.ok else "fail", report.ok, report=report.to_json())
    if kind == "pushforward":
        if args.model:
            model = load_fan_file(args.model).quadruple
        elif args.order:
            model = resolve_log_simplicial(q, _order(ff, args.order), certify=False).final
        else:
            raise UsageError("pushforward needs --model FILE or --order NAME")
        report = verify_pushforward(q, model, args.bound, None if args.p is None else [args.p])
        return Outcome("pass" if report.ok else "fail", report.ok, report=report.to_json())
    if kind == "ses":
        if args.ray is None:
            raise UsageError("ses needs --ray")
        report = verify_phi_ses_identities(q, _ray_arg(args.ray, q), args.mode)
        ok = report.identity_holds
        tags = ["eligible" if report.eligible else "ineligible"]
        return Outcome("pass" if ok else "fail", ok, tags, report=report.to_json())
    if kind == "e1":
        setup = _setup_for(args, ff, 0)
        report = e1_degeneration_check(setup)
        return Outcome("pass" if report.ok else "fail", report.ok, report=report.to_json())
    if kind == "separating-ray":
        sep = find_separating_ray(q)
        idx = q.fan.index
        return Outcome(
            "found",
            True,
            ["pass"],
            ray=list(sep.ray),
            b_plus=sorted(idx[r] for r in sep.b_plus),
            c_plus=sorted(idx[r] for r in sep.c_plus),
        )
    raise UsageError(f"unknown verification {kind!r}")


COMMANDS = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "subdivide": cmd_subdivide,
    "resolve": cmd_resolve,
    "forms": cmd_forms,
    "cech": cmd_cech,
    "verify": cmd_verify,
}
# verdicts of these commands are properties; a failing one exits 2 even without --expect
PROPERTY_COMMANDS = {"validate", "resolve", "cech", "verify"}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--expect", help="expected verdict tag; exit 2 when the run does not produce it")
    common.add_argument("--report", help="write the JSON report to this path")
    common.add_argument("--json", action="store_true", help="print the JSON report instead of a summary")

    parser = _Parser(prog="torofan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"torofan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the fan axioms")
    p.add_argument("input")

    p = sub.add_parser("classify", parents=[common], help="well- or partial sortedness")
    p.add_argument("input")
    p.add_argument("--mode", choices=("well", "partial"), required=True)

    p = sub.add_parser("subdivide", parents=[common], help="star, sequential star or extension")
    p.add_argument("input")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--star", metavar="RAY")
    g.add_argument("--seq", metavar="ORDER")
    g.add_argument("--ext", metavar="RAY")
    p.add_argument("--role", choices=("A", "B", "C"), default="A", help="decoration of a new starred ray")
    p.add_argument("--fan-out", help="write the canonical subdivided fan file here")

    p = sub.add_parser("resolve", parents=[common], help="efficient locally-convex log-simplicial resolution")
    p.add_argument("input")
    p.add_argument("--order", required=True)
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("forms", parents=[common], help="Hilbert tables of graded pieces")
    p.add_argument("input")
    p.add_argument("--p", type=int)
    p.add_argument("--bound", type=int, default=2)
    p.add_argument("--twist")

    p = sub.add_parser("cech", parents=[common], help="Čech cohomology tables")
    p.add_argument("input")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--relative", metavar="BASE")
    g.add_argument("--complete", action="store_true")
    p.add_argument("--orbit", metavar="RAY", help="work on the orbit closure of this ray")
    p.add_argument("--p", type=int)
    p.add_argument("--bound", type=int, default=3)

    p = sub.add_parser("verify", parents=[common], help="identity checks")
    p.add_argument("kind", choices=("pushforward", "reflexive", "ses", "e1", "separating-ray"))
    p.add_argument("input")
    p.add_argument("--model")
    p.add_argument("--order")
    p.add_argument("--ray")
    p.add_argument("--mode", choices=("addB", "addC"), default="addB")
    p.add_argument("--orbit", metavar="RAY")
    p.add_argument("--relative", help=argparse.SUPPRESS)
    p.add_argument("--p", type=int)
    p.add_argument("--bound", type=int, default=3)
    return parser


def _digest(paths) -> str:
    h = hashlib.sha256()
    for path in paths:
        h.update(Path(path).read_bytes())
    return h.hexdigest()


def run(argv=None) -> tuple[int, dict | None]:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    inputs = [args.input] + [x for x in (getattr(args, "relative", None), getattr(args, "model", None)) if x]
    try:
        ff = load_fan_file(args.input)
        outcome = COMMANDS[args.command](args, ff)
    except (UsageError, *INPUT_ERRORS) as exc:
        print(f"torofan {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    if args.expect:
        code = EXIT_OK if args.expect in outcome.tags else EXIT_PROPERTY
    elif args.command in PROPERTY_COMMANDS and not outcome.holds:
        code = EXIT_PROPERTY
    else:
        code = EXIT_OK
    report = {
        "command": list(argv if argv is not None else sys.argv[1:]),
        "tool_version": __version__,
        "input_digest": _digest(inputs),
        "verdict": outcome.verdict,
        "tags": sorted(outcome.tags),
        "certificates": {k: v for k, v in outcome.body.items() if k in ("certificate", "counterexample")},
        "tables": {k: v for k, v in outcome.body.items() if k not in ("certificate", "counterexample")},
        "exit_status": code,
        "timing_seconds": round(time.perf_counter() - start, 3),
    }
    if args.report:
        Path(args.report).write_text(dumps(report), encoding="utf-8")
    if args.json:
        print(dumps(report), end="")
    else:
        print(f"{args.command}: {outcome.verdict}")
    return code, report


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
