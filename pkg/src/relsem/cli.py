"""Command line front end.

Exit codes: 0 when everything checked out, 1 when a task was falsified or a
soundness violation was found, 2 on usage, input or infrastructure errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from relsem import formula as F
from relsem.lang import ParseError, parse_command, parse_formula, parse_program, typecheck
from relsem.lang import ast as A
from relsem.oracle import Bounds, Evaluator, EvaluationError, Theory
from relsem.oracle.soundness import StateSpaceTooLarge, check_soundness
from relsem.relcalc import Calculus, DerivationError, NodeSemantics, SemanticModel, build_semantic_model
from relsem.simplify import ALL_RULES, SimplifyConfig, simplify
from relsem.vcgen import (
    FALSIFIED,
    VALID,
    VerificationTask,
    check_with_oracle,
    gen_tasks,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Loaded:
    path: str
    program: A.Program
    calculus: Calculus


def _load(path: str) -> Loaded:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None
    try:
        program = parse_program(text)
    except ParseError as e:
        raise UsageError(f"{path}:{e}") from None
    problems = typecheck(program)
    if problems:
        raise UsageError("\n".join(d.format(path) for d in problems))
    return Loaded(path, program, Calculus(program))


def _simplify_config(text: Optional[str]) -> SimplifyConfig:
    if text is None or text == "all":
        return SimplifyConfig()
    if text == "none":
        return SimplifyConfig(rules=frozenset())
    try:
        return SimplifyConfig.parse(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _models(ld: Loaded, cfg: SimplifyConfig, method: Optional[str] = None) -> list[SemanticModel]:
    out = []
    for m in ld.program.methods:
        if method is None or m.name == method:
            out.append(build_semantic_model(m, ld.program, cfg, ld.calculus))
    if method is not None and not out:
        raise UsageError(f"{ld.path}: no method named '{method}'")
    return out


def _location(text: str) -> tuple[str, int]:
    path, sep, line = text.rpartition(":")
    if not sep or not line.isdigit():
        raise UsageError(f"expected FILE:LINE, got '{text}'")
    return path, int(line)


def _node_at(ld: Loaded, line: int, cfg: SimplifyConfig) -> tuple[SemanticModel, NodeSemantics]:
    for model in _models(ld, cfg):
        if model.method.span.covers_line(line):
            n = model.innermost_at(line)
            if n is not None:
                return model, n
    raise UsageError(f"{ld.path}:{line}: no command covers this line")


def _emit(args, data, text: str) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=2))
    else:
        print(text)


def _where(n: NodeSemantics) -> str:
    return f"{n.span.line}:{n.span.col} {n.kind}"


# ------------------------------------------------------------ commands


def cmd_translate(args) -> int:
    cfg = _simplify_config(args.simplify)
    if args.command_text is not None:
        if args.files:
            raise UsageError("give either files or --command, not both")
        return _translate_command(args, cfg)
    if not args.files:
        raise UsageError("nothing to translate: give files or --command")
    data, lines = [], []
    for path in args.files:
        ld = _load(path)
        for model in _models(ld, cfg, args.method):
            b = model.body
            data.append({"file": path, **_method_json(model)})
            lines.append(f"method {model.method.name} ({path})")
            lines.append(f"  frame: {{{', '.join(sorted(b.rel.frame))}}}")
            lines.append(f"  relation:    {F.render(b.rel_simplified.relation)}")
            lines.append(f"  termination: {F.render(b.term_simplified.condition)}")
            if args.raw:
                lines.append(f"  raw relation:    {F.render(b.rel.relation)}")
                lines.append(f"  raw termination: {F.render(b.term.condition)}")
            if args.all_nodes:
                for n in model.nodes[1:]:
                    lines.append(f"  {_where(n)}: {F.render(n.rel_simplified.relation)}")
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


def _translate_command(args, cfg: SimplifyConfig) -> int:
    try:
        c = parse_command(args.command_text)
    except ParseError as e:
        raise UsageError(f"--command: {e}") from None
    calc = Calculus()
    j, t = calc.relation(c), calc.termination(c)
    js, ts = j.map(lambda f: simplify(f, cfg)), t.map(lambda f: simplify(f, cfg))
    pair = lambda raw, simp: {"raw": F.render(raw), "simplified": F.render(simp)}  # noqa: E731
    data = {
        "command": args.command_text,
        "frame": sorted(j.frame),
        "relation": pair(j.relation, js.relation),
        "precondition": pair(j.precondition, js.precondition),
        "global_condition": pair(j.global_condition, js.global_condition),
        "termination": pair(t.condition, ts.condition),
    }
    lines = [
        f"command {args.command_text}",
        f"  frame: {{{', '.join(sorted(j.frame))}}}",
        f"  relation:     {F.render(js.relation)}",
        f"  precondition: {F.render(js.precondition)}",
        f"  termination:  {F.render(ts.condition)}",
    ]
    if args.raw:
        lines.append(f"  raw relation: {F.render(j.relation)}")
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


def _method_json(model: SemanticModel) -> dict:
    b = model.body
    return {
        "method": model.method.name,
        "frame": sorted(b.rel.frame),
        "relation": {"raw": F.render(b.rel.relation), "simplified": F.render(b.rel_simplified.relation)},
        "termination": {"raw": F.render(b.term.condition), "simplified": F.render(b.term_simplified.condition)},
        "model": model.to_json(),
    }


def cmd_semantics(args) -> int:
    path, line = _location(args.at)
    cfg = _simplify_config(args.simplify)
    ld = _load(path)
    model, n = _node_at(ld, line, cfg)
    rows = [
        ("transition relation", n.rel_simplified.relation, n.rel.relation),
        ("termination condition", n.term_simplified.condition, n.term.condition),
        ("precondition", n.rel_simplified.precondition, n.rel.precondition),
        ("pre-state knowledge", n.knowledge, n.knowledge_raw),
    ]
    lines = [f"{path}:{_where(n)} in method {model.method.name}"]
    lines.append(f"  effects: {{{', '.join(sorted(n.effects))}}}")
    for label, simp, raw in rows:
        lines.append(f"  {label}: {F.render(simp)}")
        if args.raw:
            lines.append(f"  {label} (raw): {F.render(raw)}")
    node_json = model.to_json()["nodes"][model.nodes.index(n)]
    _emit(args, {"file": path, "method": model.method.name, **node_json}, "\n".join(lines))
    return EXIT_OK


def cmd_assert_at(args) -> int:
    path, line = _location(args.at)
    cfg = _simplify_config(args.simplify)
    ld = _load(path)
    model, n = _node_at(ld, line, cfg)
    text = args.pre if args.pre is not None else args.post
    constants = [f.name for t in ld.program.theories for f in t.functions if not f.arg_sorts]
    try:
        cond = parse_formula(text, mode="pre", constants=constants)
    except ParseError as e:
        raise UsageError(f"condition: {e}") from None
    points = propagate(model, n, cond, before=args.pre is not None, calc=ld.calculus, cfg=cfg)
    lines = [f"{path}: {'pre' if args.pre is not None else 'post'}-condition {F.render(cond)} at {_where(n)}"]
    data = []
    for node, before, after in points:
        mark = "*" if node is n else " "
        lines.append(f"{mark} {_where(node)}")
        lines.append(f"    before: {F.render(before) if before is not None else '-'}")
        lines.append(f"    after:  {F.render(after) if after is not None else '-'}")
        data.append({
            "path": list(node.path),
            "line": node.span.line,
            "col": node.span.col,
            "kind": node.kind,
            "before": None if before is None else F.render(before),
            "after": None if after is None else F.render(after),
        })
    _emit(args, {"file": path, "method": model.method.name, "nodes": data}, "\n".join(lines))
    return EXIT_OK


def propagate(model: SemanticModel, n: NodeSemantics, cond: F.Formula, before: bool, calc: Calculus, cfg: SimplifyConfig):
    """Push a state condition at ``n`` through PRE/POST to the neighbouring
    nodes. Conditions flow through sequences, blocks and conditionals; they
    do not cross loop boundaries, where only the invariant is known."""
    from relsem.exprsem import translate_expr
    from relsem.simplify import simplify

    simp = lambda f: simplify(f, cfg)  # noqa: E731
    at: dict[tuple, list] = {}

    def put(node: NodeSemantics, pre: Optional[F.Formula], post: Optional[F.Formula]) -> None:
        at[node.path] = [None if pre is None else simp(pre), None if post is None else simp(post)]

    def down(node: NodeSemantics, pre: Optional[F.Formula], post: Optional[F.Formula]) -> None:
        put(node, pre, post)
        c = node.command
        kid = lambda i: model.node(node.path + (i,))  # noqa: E731
        if isinstance(c, A.VarBlock):
            down(kid(0), pre, post)
        elif isinstance(c, A.Seq):
            a, b = kid(0), kid(1)
            if pre is not None:
                mid = calc.post(a.rel, pre)
                down(a, pre, mid)
                down(b, mid, post if post is not None else calc.post(b.rel, mid))
            else:
                mid = calc.pre(b.rel, post)
                down(b, mid, post)
                down(a, calc.pre(a.rel, mid), mid)
        elif isinstance(c, (A.IfThen, A.IfThenElse)):
            fe = translate_expr(c.cond).result
            branches = [(kid(0), fe)]
            if isinstance(c, A.IfThenElse):
                branches.append((kid(1), F.Not(fe)))
            for b, guard in branches:
                if pre is not None:
                    p = F.conj(pre, guard)
                    down(b, p, calc.post(b.rel, p))
                else:
                    down(b, None, post)

    if before:
        down(n, cond, calc.post(n.rel, cond))
    else:
        down(n, calc.pre(n.rel, cond), cond)

    # upwards: through enclosing sequences and blocks
    child = n
    while child.path:
        parent = model.node(child.path[:-1])
        pre, post = at[child.path]
        c = parent.command
        if isinstance(c, A.VarBlock):
            at[parent.path] = [pre, post]
        elif isinstance(c, A.Seq):
            if child.path[-1] == 1:
                first = model.node(parent.path + (0,))
                if pre is not None:
                    down(first, calc.pre(first.rel, pre), pre)
                put(parent, at[first.path][0], post)
            else:
                second = model.node(parent.path + (1,))
                if post is not None:
                    down(second, post, calc.post(second.rel, post))
                put(parent, pre, at[second.path][1])
        else:
            break
        child = parent

    order = {node.path: i for i, node in enumerate(model.nodes)}
    return [(model.node(p), pre, post) for p, (pre, post) in sorted(at.items(), key=lambda kv: order[kv[0]])]


def _tasks(ld: Loaded, cfg: SimplifyConfig, method: Optional[str]) -> list[VerificationTask]:
    out = []
    for model in _models(ld, cfg, method):
        out.extend(gen_tasks(model.method, model, ld.program, cfg, ld.calculus))
    return out


def _mode(args):
    from relsem.smt import Mode

    return Mode.bounded_to(args.dom) if args.mode == "bounded" else Mode.unbounded()


def cmd_vcs(args) -> int:
    from relsem.smt import emit_smtlib, script_name

    cfg = _simplify_config(args.simplify)
    data, lines = [], []
    for path in args.files:
        ld = _load(path)
        tasks = _tasks(ld, cfg, args.method)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        for t in tasks:
            entry = {"file": path, **t.to_json()}
            if args.out:
                target = os.path.join(args.out, script_name(t))
                with open(target, "w") as fh:
                    fh.write(emit_smtlib(t, ld.program.theories, _mode(args)))
                entry["smt2"] = target
            data.append(entry)
            lines.append(f"{t.id}: {t.description}")
            for name, h in t.hypotheses:
                if h != F.TRUE:
                    lines.append(f"    {name}: {F.render(h)}")
            lines.append(f"    goal: {F.render(t.goal)}")
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _simplify_config(args.simplify)
    results: list[tuple[str, VerificationTask]] = []
    for path in args.files:
        ld = _load(path)
        tasks = _tasks(ld, cfg, args.method)
        if args.solver is not None:
            from relsem.smt import SolverError, check_tasks

            if args.out:
                os.makedirs(args.out, exist_ok=True)
            try:
                check_tasks(tasks, args.solver, args.timeout, ld.program.theories, _mode(args), args.out, args.jobs)
            except SolverError as e:
                raise UsageError(f"solver error: {e}") from None
        else:
            ev = Evaluator(Bounds.symmetric(args.dom), Theory.of_program(ld.program))
            for t in tasks:
                check_with_oracle(t, evaluator=ev)
        results += [(path, t) for t in tasks]
    width = max((len(t.id) for _, t in results), default=10)
    lines = [f"{'task':<{width}}  status"]
    for _, t in results:
        extra = f"  {t.model}" if t.model else ""
        lines.append(f"{t.id:<{width}}  {t.status}{extra}")
    counts: dict[str, int] = {}
    for _, t in results:
        counts[t.status] = counts.get(t.status, 0) + 1
    lines.append(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    _emit(args, [{"file": p, **t.to_json()} for p, t in results], "\n".join(lines))
    if any(t.status == FALSIFIED for _, t in results):
        return EXIT_FAILED
    return EXIT_OK if all(t.status == VALID for _, t in results) else EXIT_USAGE


def cmd_oracle(args) -> int:
    reports = []
    failed = False
    for path in args.files:
        ld = _load(path)
        try:
            r = check_soundness(ld.program, dom=args.dom, fuel=args.fuel, methods=[args.method] if args.method else None)
        except StateSpaceTooLarge as e:
            raise UsageError(str(e)) from None
        failed |= not r.ok
        reports.append((path, r))
    _emit(
        args,
        [{"file": p, **r.to_json()} for p, r in reports],
        "\n".join(f"{p}: {r.to_text()}" for p, r in reports),
    )
    return EXIT_FAILED if failed else EXIT_OK


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument(
        "--simplify",
        metavar="RULES",
        help=f"comma-separated simplifier rules, 'all' or 'none' (rules: {', '.join(ALL_RULES)})",
    )
    common.add_argument("--method", help="restrict to one method")

    bounded = argparse.ArgumentParser(add_help=False)
    bounded.add_argument("--dom", type=int, default=7, help="machine integers are [-DOM, DOM] (default 7)")

    p = argparse.ArgumentParser(prog="relsem", description="Relational semantics of annotated MiniWhile programs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("translate", parents=[common], help="print relation, termination condition and frame per method")
    s.add_argument("files", nargs="*")
    s.add_argument("-c", "--command", dest="command_text", metavar="TEXT", help="translate a single command instead of files")
    s.add_argument("--raw", action="store_true", help="also print the unsimplified formulas")
    s.add_argument("--all-nodes", action="store_true", help="also print the relation of every command")
    s.set_defaults(run=cmd_translate)

    s = sub.add_parser("semantics", parents=[common], help="semantic view of the command at FILE:LINE")
    s.add_argument("--at", required=True, metavar="FILE:LINE", help="innermost command covering this line")
    s.add_argument("--raw", action="store_true", help="also print the unsimplified formulas")
    s.set_defaults(run=cmd_semantics)

    s = sub.add_parser("assert-at", parents=[common], help="propagate a state condition from FILE:LINE")
    s.add_argument("at", metavar="FILE:LINE")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--pre", metavar="FORMULA", help="condition on the state before the command")
    g.add_argument("--post", metavar="FORMULA", help="condition on the state after the command")
    s.set_defaults(run=cmd_assert_at)

    s = sub.add_parser("vcs", parents=[common, bounded], help="list verification tasks, optionally writing .smt2 files")
    s.add_argument("files", nargs="+")
    s.add_argument("--out", metavar="DIR", help="write one SMT-LIB script per task here")
    s.add_argument("--mode", choices=("bounded", "unbounded"), default="bounded", help="bounded: machine integers are [-DOM, DOM]; unbounded: symbolic MIN_INT/MAX_INT (default bounded)")
    s.set_defaults(run=cmd_vcs)

    s = sub.add_parser("check", parents=[common, bounded], help="discharge verification tasks")
    s.add_argument("files", nargs="+")
    how = s.add_mutually_exclusive_group()
    how.add_argument("--oracle", action="store_true", help="finite-domain enumeration (default)")
    how.add_argument(
        "--solver",
        nargs="?",
        const="z3 -smt2 {file}",
        metavar="CMD",
        help="external SMT solver command; {file} is replaced by the script path (default: z3)",
    )
    s.add_argument("--mode", choices=("bounded", "unbounded"), default="bounded", help="bounded: machine integers are [-DOM, DOM]; unbounded: symbolic MIN_INT/MAX_INT (default bounded)")
    s.add_argument("--timeout", type=float, default=10.0, help="seconds per solver call")
    s.add_argument("--jobs", type=int, default=4, help="parallel solver processes (default 4)")
    s.add_argument("--out", metavar="DIR", help="keep the .smt2 scripts here")
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("oracle", parents=[common, bounded], help="check the calculus against execution")
    s.add_argument("files", nargs="+")
    s.add_argument("--fuel", type=int, default=10_000, help="execution steps before a run counts as diverging (default 10000)")
    s.set_defaults(run=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "dom", 1) < 1:
        parser.error("--dom must be at least 1")
    try:
        return args.run(args)
    except (UsageError, DerivationError, EvaluationError) as e:
        print(f"relsem: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
