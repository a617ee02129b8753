"""Deliberately broken variants of the calculus.

Each mutant names a corpus program on which the soundness oracle has to
notice the defect. Weakening a relation is still sound, so several of these
are caught by the precision checks rather than the relation check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from relsem import formula as F
from relsem.relcalc import Calculus, TermJudgment, derive_call_relation


class NoLoopExit(Calculus):
    """While rule without the negated loop condition."""

    def loop_exit(self, cond_at_post):
        return F.TRUE


class NoFrameExtension(Calculus):
    """Frame extension forgets the ``x$1 = x$0`` conjuncts."""

    def extend(self, j, frame):
        return replace(j, frame=frozenset(frame) | j.frame)


class NoElseFrame(Calculus):
    """One-armed conditional leaves the frame unconstrained when skipped."""

    def rel_ifthen(self, c):
        j = super().rel_ifthen(c)
        return replace(j, relation=F.Or((j.relation, F.Not(F.conj(*F.frame_eq(j.frame))))))


class OffByOneAssign(Calculus):
    def rel_assign(self, c):
        j = super().rel_assign(c)
        return replace(j, relation=F.Cmp("=", j.relation.left, F.BinOp("+", j.relation.right, F.IntLit(1))))


class UncheckedAssign(Calculus):
    """Assignment without its definedness precondition."""

    def rel_assign(self, c):
        return replace(super().rel_assign(c), precondition=F.TRUE)


class PreIgnoresCommand(Calculus):
    def pre(self, j, fq):
        return fq


class PostIgnoresCommand(Calculus):
    def post(self, j, fp):
        return fp


class LoopWithoutBodyCheck(Calculus):
    """Loop precondition only demands the invariant on entry."""

    def loop_precondition(self, c, body):
        return c.invariant


class AlwaysTerminates(Calculus):
    """Every loop is assumed to terminate, with no side condition."""

    def term_while(self, c):
        return TermJudgment(F.TRUE)


class CallIgnoresRequires(Calculus):
    def rel_call(self, c):
        j = derive_call_relation(self.method(c.method, c.span), c.target, c.args)
        return replace(j, precondition=F.TRUE)


@dataclass(frozen=True)
class Mutant:
    calculus: type
    program: str


MUTANTS = [
    Mutant(NoLoopExit, "countdown"),
    Mutant(NoFrameExtension, "max"),
    Mutant(NoElseFrame, "abs"),
    Mutant(OffByOneAssign, "increment"),
    Mutant(UncheckedAssign, "increment"),
    Mutant(PreIgnoresCommand, "increment"),
    Mutant(PostIgnoresCommand, "increment"),
    Mutant(LoopWithoutBodyCheck, "sum"),
    Mutant(AlwaysTerminates, "diverge"),
    Mutant(CallIgnoresRequires, "calls"),
]
