"""Command-line front end: parse, check, prove, normalize, concretize,
export and fuzz.

Exit codes: 0 success / equivalent, 1 not equivalent (or failing fuzz
trials), 2 usage or parse errors, 3 prover step-budget exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .axioms import (
    BudgetExceededError,
    canonical_pterm,
    concretize,
    normalize_nd,
    prove_equal,
)
from .dist import den
from .equivalence import Verdict, check as relation_check
from .harness import GenConfig, run_property_suite, suite_names
from .parse import ParseError, parse_term, print_term
from .semantics import to_dot
from .terms import Dirac, NdTerm, PTerm

SCHEMA = "probranch/1"

RELATIONS = ("strong", "branching", "rooted-branching")


def _load_term(spec: str):
    if spec.startswith("@"):
        text = Path(spec[1:]).read_text(encoding="utf-8")
    else:
        text = spec
    return parse_term(text)


def _emit_verdict(verdict: Verdict, as_json: bool) -> None:
    if as_json:
        payload = {"schema": SCHEMA, **verdict.to_json()}
        print(json.dumps(payload))
    elif verdict.equivalent:
        print(f"equivalent ({verdict.relation})")
    else:
        print(f"not equivalent ({verdict.relation})")
        if verdict.witness:
            print(json.dumps(verdict.witness))


def _cmd_check(args) -> int:
    left = _load_term(args.left)
    right = _load_term(args.right)
    verdict = relation_check(args.rel, left, right)
    _emit_verdict(verdict, args.json)
    return 0 if verdict.equivalent else 1


def _cmd_prove(args) -> int:
    left = _load_term(args.left)
    right = _load_term(args.right)
    result = prove_equal(left, right, budget=args.budget)
    if isinstance(result, Verdict):
        _emit_verdict(result, args.json)
        return 1
    print(result.to_jsonl())
    return 0


def _cmd_normalize(args) -> int:
    term = _load_term(args.term)
    if args.form == "nd":
        if not isinstance(term, NdTerm):
            raise ParseError("expected a non-deterministic term", 1, 1, "")
        out, _ = normalize_nd(term)
    elif args.form == "p":
        if not isinstance(term, PTerm):
            raise ParseError("expected a probabilistic term", 1, 1, "")
        out, _ = canonical_pterm(term)
    else:  # concrete
        p = term if isinstance(term, PTerm) else Dirac(term)
        out, _ = concretize(p)
    print(print_term(out))
    return 0


def _cmd_concretize(args) -> int:
    term = _load_term(args.term)
    p = term if isinstance(term, PTerm) else Dirac(term)
    out, trace = concretize(p, budget=args.budget)
    print(print_term(out))
    if args.trace:
        jsonl = trace.to_jsonl()
        if jsonl:
            print(jsonl)
    return 0


def _cmd_lts(args) -> int:
    term = _load_term(args.term)
    if isinstance(term, PTerm):
        roots = sorted(den(term).support, key=print_term)
    else:
        roots = [term]
    print(to_dot(roots))
    return 0


def _cmd_fuzz(args) -> int:
    cfg = GenConfig(seed=args.seed, max_complexity=args.max_complexity)
    report = run_property_suite(args.suite, args.trials, cfg)
    print(json.dumps({"schema": SCHEMA, **report}))
    return 0 if not report["failures"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probranch",
        description="Exact-arithmetic toolkit for a process calculus with "
                    "non-deterministic and probabilistic choice: semantics, "
                    "bisimilarity checking, and equational proofs.")
    sub = parser.add_subparsers(dest="command", required=True)

    check_p = sub.add_parser("check", help="decide an equivalence")
    check_p.add_argument("--rel", choices=RELATIONS, required=True)
    check_p.add_argument("--left", required=True, metavar="TERM|@FILE")
    check_p.add_argument("--right", required=True, metavar="TERM|@FILE")
    check_p.add_argument("--json", action="store_true")
    check_p.set_defaults(func=_cmd_check)

    prove_p = sub.add_parser("prove", help="produce a replayable proof")
    prove_p.add_argument("--left", required=True, metavar="TERM|@FILE")
    prove_p.add_argument("--right", required=True, metavar="TERM|@FILE")
    prove_p.add_argument("--budget", type=int, default=100000)
    prove_p.add_argument("--json", action="store_true")
    prove_p.set_defaults(func=_cmd_prove)

    norm_p = sub.add_parser("normalize", help="print a canonical form")
    norm_p.add_argument("--form", choices=("nd", "p", "concrete"),
                        required=True)
    norm_p.add_argument("--term", required=True, metavar="TERM|@FILE")
    norm_p.set_defaults(func=_cmd_normalize)

    conc_p = sub.add_parser("concretize",
                            help="remove (partially) inert silent steps")
    conc_p.add_argument("--term", required=True, metavar="TERM|@FILE")
    conc_p.add_argument("--budget", type=int, default=100000)
    conc_p.add_argument("--trace", action="store_true",
                        help="also print the proof trace as JSON lines")
    conc_p.set_defaults(func=_cmd_concretize)

    lts_p = sub.add_parser("lts", help="export the transition graph")
    lts_p.add_argument("--term", required=True, metavar="TERM|@FILE")
    lts_p.add_argument("--dot", action="store_true", default=True)
    lts_p.set_defaults(func=_cmd_lts)

    fuzz_p = sub.add_parser("fuzz", help="run a property suite")
    fuzz_p.add_argument("--suite", required=True, choices=suite_names())
    fuzz_p.add_argument("--trials", type=int, default=100)
    fuzz_p.add_argument("--seed", type=int, default=0)
    fuzz_p.add_argument("--max-complexity", type=int, default=8)
    fuzz_p.set_defaults(func=_cmd_fuzz)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
