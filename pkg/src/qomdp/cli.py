"""Command-line front end: ``qomdp <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import demo
from .classical import ClassicalMoore, ClassicalPomdp, embed_as_quantum, embed_pomdp
from .exceptions import CapExceededError, ValidationError
from .modelio import ModelParseError, dumps_model, load_model, pretty_json, save_model, solution_to_dict
from .qmath import DENSITY_TOL
from .search import SearchConfig, search_nonoccurrence, search_reachability
from .solver import CROSS_SUM_CAP, Qomdp, value_at, value_iteration
from .trajectory import simulate_trajectory, write_csv, write_jsonl
from .transducers import (QuantumMealyMachine, QuantumMooreMachine, machines_equivalent,
                          mealy_to_moore, moore_to_mealy)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_EXHAUSTED = 2
EXIT_CAP = 3
EXIT_PARSE = 4

EPILOG = """\
exit codes:
  0  success (for search: a witness was found)
  1  validation failure (model invariants, unknown symbols, wrong model kind,
     conversion self-check failure)
  2  search exhausted its length bound without a witness
  3  resource cap hit (cross-sum cap, search node cap, backup budget)
  4  parse error (malformed JSON, missing or mistyped fields, bad arguments)
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def _global_flags(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="integer RNG seed")
    p.add_argument("--tol", type=float, default=default,
                   help=f"tolerance for CPTP checks and the conversion self-check (default {DENSITY_TOL:g})")
    p.add_argument("--out", default=default, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qomdp", description="Quantum transducers and QOMDPs.",
                     epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help, description=help, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _global_flags(p, suppress=True)
        return p

    p = add("validate", "check every invariant of a model file")
    p.add_argument("path")

    p = add("simulate", "sample a trajectory of a machine")
    p.add_argument("path")
    p.add_argument("--actions", required=True, help='space-separated input symbols, e.g. "a1 a2 a1"')
    p.add_argument("--steps", type=int, help="number of steps (the action string repeats cyclically)")
    p.add_argument("--format", choices=("csv", "jsonl"), help="default: jsonl if --out ends in .jsonl, else csv")

    p = add("convert", "convert between Moore and Mealy machines")
    p.add_argument("path")
    p.add_argument("--direction", required=True, choices=("moore-to-mealy", "mealy-to-moore"))

    p = add("solve", "epsilon-optimal value iteration for a qomdp or classical_pomdp file")
    p.add_argument("path")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--cap", type=int, default=CROSS_SUM_CAP, help="cross-sum size cap per backup")

    p = add("search", "bounded witness search")
    p.add_argument("path")
    p.add_argument("--problem", required=True, choices=("reach", "nonoccur"))
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--node-cap", type=int, default=10**7)

    p = add("bloch-demo", "trajectory of the qubit Bloch transducer as CSV")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--actions", help="explicit action string (default: alternate a1, a2)")
    return parser


def _open_out(args):
    if args.out in (None, "-"):
        return sys.stdout, False
    return open(args.out, "w", newline=""), True


def _as_machine(model):
    if isinstance(model, (QuantumMooreMachine, QuantumMealyMachine)):
        return model
    if isinstance(model, ClassicalMoore):
        return embed_as_quantum(model)
    raise ValidationError(f"expected a machine model, got {type(model).__name__}")


def _actions(text, steps):
    acts = text.split()
    if not acts:
        raise ValidationError("empty action string")
    if steps is None:
        return acts
    if steps < 1:
        raise ValidationError("steps must be at least 1")
    return [acts[t % len(acts)] for t in range(steps)]


def _emit_records(args, records, outputs, fmt):
    fh, close = _open_out(args)
    try:
        if fmt == "jsonl":
            write_jsonl(records, fh)
        else:
            write_csv(records, fh, outputs)
    finally:
        if close:
            fh.close()


def cmd_validate(args):
    model = load_model(args.path, tol=args.tol or DENSITY_TOL)
    print(f"ok: {args.path}: {model!r}")
    return EXIT_OK


def cmd_simulate(args):
    model = load_model(args.path, tol=args.tol or DENSITY_TOL)
    M = _as_machine(model)
    records = simulate_trajectory(M, _actions(args.actions, args.steps), seed=args.seed)
    fmt = args.format or ("jsonl" if (args.out or "").endswith(".jsonl") else "csv")
    _emit_records(args, records, M.outputs, fmt)
    return EXIT_OK


def cmd_convert(args):
    model = load_model(args.path, tol=args.tol or DENSITY_TOL)
    if args.direction == "moore-to-mealy":
        if not isinstance(model, QuantumMooreMachine):
            raise ValidationError(f"moore-to-mealy needs a quantum_moore file, got {type(model).__name__}")
        converted = moore_to_mealy(model)
    else:
        if not isinstance(model, QuantumMealyMachine):
            raise ValidationError(f"mealy-to-moore needs a quantum_mealy file, got {type(model).__name__}")
        converted = mealy_to_moore(model)
    check = machines_equivalent(model, converted, 3, tol=args.tol or 1e-9)
    if not check:
        raise ValidationError(f"conversion self-check failed: {check.counterexample}")
    if args.out in (None, "-"):
        print(dumps_model(converted))
    else:
        save_model(converted, args.out)
        print(f"wrote {args.out} ({converted!r}); self-check passed to length 3", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args):
    model = load_model(args.path, tol=args.tol or DENSITY_TOL)
    if isinstance(model, ClassicalPomdp):
        model = embed_pomdp(model)
    if not isinstance(model, Qomdp):
        raise ValidationError(f"solve needs a qomdp or classical_pomdp file, got {type(model).__name__}")
    if not 0 < args.epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    try:
        res = value_iteration(model, args.epsilon, max_iter=args.max_iter, cap=args.cap)
    except CapExceededError as exc:
        raise CapExceededError(f"{exc}; try a larger --epsilon or --cap, or a smaller model",
                               size=exc.size, cap=exc.cap) from None
    v0, _ = value_at(res.alpha_set, model.rho0)
    print(f"iterations: {res.iterations}")
    print(f"alpha operators: {len(res.alpha_set)}")
    print(f"value at rho0: {v0:.12g}")
    print(f"certified: sup |V - V*| <= {res.bound:.6g} <= {args.epsilon:g}")
    if args.out not in (None, "-"):
        sol = solution_to_dict(res.alpha_set, res.iterations, res.bound, model.gamma, args.epsilon)
        with open(args.out, "w") as fh:
            fh.write(pretty_json(sol) + "\n")
    return EXIT_OK


def cmd_search(args):
    model = load_model(args.path, tol=args.tol or DENSITY_TOL)
    M = _as_machine(model)
    cfg = SearchConfig(max_len=args.max_len, tau=args.tau, node_cap=args.node_cap)
    res = (search_reachability if args.problem == "reach" else search_nonoccurrence)(M, cfg)
    text = json.dumps(res.to_json(), indent=1)
    if args.out not in (None, "-"):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return {"witness": EXIT_OK, "exhausted": EXIT_EXHAUSTED, "node_cap": EXIT_CAP}[res.status]


def cmd_bloch_demo(args):
    if args.steps < 1:
        raise ValidationError("steps must be at least 1")
    M = demo.bloch_machine()
    acts = _actions(args.actions, args.steps) if args.actions else demo.alternating_actions(args.steps)
    records = simulate_trajectory(M, acts, seed=args.seed, include_initial=True)
    _emit_records(args, records, M.outputs, "csv")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate, "simulate": cmd_simulate, "convert": cmd_convert,
    "solve": cmd_solve, "search": cmd_search, "bloch-demo": cmd_bloch_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapExceededError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except RuntimeError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
