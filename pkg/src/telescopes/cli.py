"""Command-line front end.

    telescopes verify --spec alt_5_2.tspec --levels 4
    telescopes eval "T(1,b0)" 3
    telescopes gen2 --spec alt_5_2.tspec --check-levels 2..3
    telescopes nf "D(1,(x1 x2 x3))*T(1,b0)"
    telescopes head eq "T(1,b0)" "1"
    telescopes act "T(1,b0)" x1x1@2

Exit status: 0 when every report passes or was skipped by a cap, 1 when a
check fails, 2 on parse errors and missing files.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import verify as V
from .action import CantorPoint, act_cantor_prefix, act_limit, parse_cantor_point, parse_limit_point
from .instances import build_alt, load_spec
from .normalform import (format_normal_form, head_equal, head_normal_form, weak_normal_form,
                         weak_normal_form_sl)
from .telescope import ExpressionError, TreeTelescope, format_element, parse_element
from .verify import VerificationReport, reports_json

OK_VERDICTS = ("pass", "skipped-by-cap")
DEFAULT_DEGREE_CAP = 200


class UsageError(Exception):
    """Bad input: exit status 2."""


def _skipped(check: str, spec, levels: str, reason: str, **info) -> VerificationReport:
    rep = VerificationReport(check, spec.name, levels, "cap", verdict="skipped-by-cap")
    rep.quantities.update({"reason": reason, **info})
    return rep


def _level_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        a, b = int(lo), int(hi if sep else lo)
    except ValueError:
        raise UsageError(f"bad level range {text!r}; expected A..B") from None
    if not 1 <= a <= b:
        raise UsageError(f"bad level range {text!r}")
    return a, b


def _load(args):
    if args.spec is None:
        return build_alt(5, 2)
    path = Path(args.spec)
    if not path.is_file():
        raise UsageError(f"spec file not found: {path}")
    try:
        return load_spec(path)
    except (ValueError, OSError) as e:
        raise UsageError(f"{path}: {e}") from None


def _element(spec, text: str):
    try:
        return parse_element(spec, text)
    except ExpressionError as e:
        raise UsageError(f"cannot parse {text!r}: {e}") from None
    except ValueError as e:
        raise UsageError(f"cannot parse {text!r}: {e}") from None


def _is_perm_tree(spec) -> bool:
    return isinstance(spec, TreeTelescope) and not spec.is_matrix


# -- commands ----------------------------------------------------------------
def cmd_verify(args, spec) -> list[VerificationReport]:
    L = args.levels
    if L > spec.max_level:
        raise UsageError(f"--levels {L} exceeds max_level {spec.max_level} of {spec.name}")
    deadline = None if args.time_budget is None else time.monotonic() + args.time_budget
    cap = args.degree_cap
    jobs = [("commutator-axiom", f"2..{L}", None, lambda: V.check_commutator_axiom(spec, L, seed=args.seed)),
            ("flexibility", f"1..{L}", None, lambda: V.check_flexibility(spec, L, seed=args.seed))]
    for lv in range(2, L + 1):
        deg = spec.level_size(lv) if _is_perm_tree(spec) else None
        jobs.append(("generation-axiom", str(lv), deg,
                     lambda lv=lv: V.check_generation_axiom(spec, lv, seed=args.seed)))
    frame_deg = sum(spec.level_size(i) for i in range(1, L + 1)) if _is_perm_tree(spec) else None
    jobs.append(("frame-surjectivity", f"1..{L}", frame_deg,
                 lambda: V.check_frame_surjectivity(spec, L, seed=args.seed)))
    out = []
    for check, levels, deg, run in jobs:
        if deg is not None and deg > cap:
            out.append(_skipped(check, spec, levels, "degree-cap", degree=deg, cap=cap))
        elif deadline is not None and time.monotonic() > deadline:
            out.append(_skipped(check, spec, levels, "time-budget", budget_s=args.time_budget))
        else:
            out.append(run())
    return out


def cmd_eval(args, spec) -> list[VerificationReport]:
    g = _element(spec, args.expr)
    if not 1 <= args.level <= spec.max_level:
        raise UsageError(f"level {args.level} out of range 1..{spec.max_level}")
    value = spec.format_level_element(g.project(args.level), args.level)
    rep = VerificationReport("eval", spec.name, str(args.level), "projection")
    rep.quantities.update({"element": format_element(g), "value": value})
    return [rep]


def cmd_gen2(args, spec) -> list[VerificationReport]:
    if not isinstance(spec, TreeTelescope):
        raise UsageError("gen2 needs an alternating or elementary telescope")
    lo, hi = _level_range(args.check_levels)
    if hi > spec.max_level:
        raise UsageError(f"--check-levels {args.check_levels} exceeds max_level {spec.max_level}")
    if spec.params.get("kind") == "alt":
        a, b, cert = V.build_two_generators_alt(spec, seed=args.seed)
    elif spec.params.get("kind") == "el":
        a, b, cert = V.build_two_generators_sl(spec, seed=args.seed, budget=args.search_budget)
    else:
        raise UsageError("gen2 needs kind alt or el")
    build = VerificationReport("two-generator-construction", spec.name, str(cert.get("n", "-")),
                               "construction")
    if a is None:
        build.verdict = "skipped-by-cap"
        build.quantities.update(cert)
        return [build]
    flags = [v for k, v in cert.items() if isinstance(v, bool)]
    build.verdict = "pass" if all(flags) else "fail"
    build.quantities.update(cert)
    build.quantities.update({"a": format_element(a), "b": format_element(b)})
    out = [build]
    if _is_perm_tree(spec):
        deg = sum(spec.level_size(i) for i in range(lo, hi + 1))
        if deg > args.degree_cap:
            out.append(_skipped("two-generation", spec, f"{lo}..{hi}", "degree-cap",
                                degree=deg, cap=args.degree_cap))
            return out
    out.append(V.verify_two_generation(a, b, lo, hi, seed=args.seed))
    return out


def cmd_nf(args, spec) -> list[VerificationReport]:
    g = _element(spec, args.word)
    nf = weak_normal_form_sl(g) if spec.is_matrix else weak_normal_form(g)
    rep = VerificationReport("weak-normal-form", spec.name, "-", "rewriting")
    ok = nf.m <= nf.length
    rep.add("m-bound", "count", "-", "pass" if ok else "fail", m=nf.m, length=nf.length)
    rep.quantities.update({"normal_form": format_normal_form(nf), "m": nf.m, "length": nf.length})
    return [rep.finalize()]


def cmd_head(args, spec) -> list[VerificationReport]:
    if args.op == "eq":
        if len(args.elements) != 2:
            raise UsageError("head eq needs two elements")
        g, h = (_element(spec, t) for t in args.elements)
        rep = VerificationReport("head-equal", spec.name, "-", "normal-form")
        rep.quantities.update({"equal": head_equal(g, h)})
        return [rep]
    if len(args.elements) != 1:
        raise UsageError("head nf needs one element")
    g = _element(spec, args.elements[0])
    hnf = head_normal_form(g)
    rep = VerificationReport("head-normal-form", spec.name, str(hnf.n), "normal-form")
    rep.quantities.update({"head_normal_form": str(hnf), "factors": len(hnf.factors)})
    return [rep]


def cmd_act(args, spec) -> list[VerificationReport]:
    if not _is_perm_tree(spec):
        raise UsageError("act needs a permutation tree telescope")
    g = _element(spec, args.element)
    try:
        if args.point.startswith("p"):
            xi = parse_cantor_point(spec, args.point)
            n = args.length if args.length is not None else max(len(xi.prefix), 1)
            res = act_cantor_prefix(g, xi, n)
            rep = VerificationReport("act-cantor", spec.name, str(n), "prefix")
            rep.verdict = "pass" if res.complete else "fail"
            rep.quantities.update({"image": CantorPoint(res.letters, None).format(spec),
                                   "stable_length": res.stable_length})
            if not res.complete:
                rep.quantities["reason"] = "insufficient prefix"
            return [rep]
        x = parse_limit_point(spec, args.point)
    except ValueError as e:
        raise UsageError(f"cannot parse point {args.point!r}: {e}") from None
    y = act_limit(g, x, budget=args.level_budget)
    rep = VerificationReport("act-limit", spec.name, "-", "stabilized-projection")
    rep.quantities.update({"image": y.format(spec)})
    return [rep]


# -- output --------------------------------------------------------------------
def _text(reports: list[VerificationReport]) -> str:
    lines = []
    for r in reports:
        lines.append(f"{r.check} [{r.spec}] levels={r.levels} method={r.method}: {r.verdict}")
        for d in r.details:
            extra = " ".join(f"{k}={v}" for k, v in sorted(d.items())
                             if k not in ("id", "method", "levels", "verdict"))
            lines.append(f"  {d['id']}: {d['verdict']}" + (f" ({extra})" if extra else ""))
        for k, v in sorted(r.quantities.items()):
            lines.append(f"  {k} = {v}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="telescope spec file (default: the alternating telescope A(5,2))")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--degree-cap", type=int, default=DEFAULT_DEGREE_CAP,
                        help="largest permutation degree a group computation may use")
    common.add_argument("--time-budget", type=float, default=None,
                        help="seconds; checks started after the budget are skipped")
    common.add_argument("--search-budget", type=int, default=200,
                        help="random trials for searches")

    p = argparse.ArgumentParser(prog="telescopes", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("verify", parents=[common], help="axioms, flexibility, generation, frame")
    s.add_argument("--levels", type=int, default=4)
    s = sub.add_parser("eval", parents=[common], help="print the level-n projection of an element")
    s.add_argument("expr")
    s.add_argument("level", type=int)
    s = sub.add_parser("gen2", parents=[common], help="two generators of a level kernel")
    s.add_argument("--check-levels", default="2..3")
    s = sub.add_parser("nf", parents=[common], help="weak normal form of a word")
    s.add_argument("word")
    s = sub.add_parser("head", parents=[common], help="computations in the head")
    s.add_argument("op", choices=("eq", "nf"))
    s.add_argument("elements", nargs="+")
    s = sub.add_parser("act", parents=[common], help="action on a limit or Cantor point")
    s.add_argument("element")
    s.add_argument("point", help="w@i for the direct limit, p<prefix>[(o*)] for the Cantor set")
    s.add_argument("--length", type=int, default=None, help="letters of a Cantor image to print")
    s.add_argument("--level-budget", type=int, default=64)
    return p


COMMANDS = {"verify": cmd_verify, "eval": cmd_eval, "gen2": cmd_gen2, "nf": cmd_nf,
            "head": cmd_head, "act": cmd_act}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _load(args)
        reports = COMMANDS[args.command](args, spec)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(reports_json(reports) if args.format == "json" else _text(reports))
    return 0 if all(r.verdict in OK_VERDICTS for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
