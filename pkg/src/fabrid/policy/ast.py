"""Sorted first-order policy formulas.

Sorts: M manufacturer, C software component, T tag, I tag issuer, N name,
V version, R router, P path. Function symbols map between sorts (see
``FUNCTIONS``); ``software`` and ``onPath`` are the only relation symbols
besides equality and the version order.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterator, Union


class Sort(enum.Enum):
    M = "M"
    C = "C"
    T = "T"
    I = "I"  # noqa: E741
    N = "N"
    V = "V"
    R = "R"
    P = "P"


# name -> (argument sort, result sort)
FUNCTIONS: dict[str, tuple[Sort, Sort]] = {
    "manufacturer": (Sort.R, Sort.M),
    "tag": (Sort.C, Sort.T),
    "issuer": (Sort.T, Sort.I),
    "name": (Sort.C, Sort.N),
    "version": (Sort.C, Sort.V),
}
FUNCTION_ALIASES = {"manu": "manufacturer"}

PREDICATES: dict[str, tuple[Sort, Sort]] = {
    "software": (Sort.R, Sort.C),
    "onPath": (Sort.P, Sort.R),
}

COMPARISONS = ("<", "<=", ">=", ">")


# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Const:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Lit:
    value: int | str
    sort: Sort


@dataclass(frozen=True)
class App:
    fn: str
    arg: Term

    @property
    def sort(self) -> Sort:
        return FUNCTIONS[self.fn][1]


Term = Union[Var, Const, Lit, App]


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall:
    var: Var
    body: Formula


@dataclass(frozen=True)
class Exists:
    var: Var
    body: Formula


Formula = Union[Eq, Cmp, Pred, Not, And, Or, Implies, Forall, Exists]
Atom = (Eq, Cmp, Pred)


def conj(*parts: Formula) -> Formula:
    """Left-nested conjunction of ``parts`` (at least one)."""
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts: Formula) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def disjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


# -- traversal ---------------------------------------------------------------


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        yield from subterms(t.arg)


def atom_terms(f: Formula) -> tuple[Term, ...]:
    if isinstance(f, (Eq, Cmp)):
        return (f.left, f.right)
    if isinstance(f, Pred):
        return f.args
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from walk(f.body)
    elif isinstance(f, (And, Or, Implies)):
        yield from walk(f.left)
        yield from walk(f.right)
    elif isinstance(f, (Forall, Exists)):
        yield from walk(f.body)


def all_terms(f: Formula) -> Iterator[Term]:
    for node in walk(f):
        for t in atom_terms(node):
            yield from subterms(t)


def constants(f: Formula) -> set[Const | Lit]:
    return {t for t in all_terms(f) if isinstance(t, (Const, Lit))}


def free_vars(f: Formula) -> set[Var]:
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - {f.var}
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or, Implies)):
        return free_vars(f.left) | free_vars(f.right)
    return {t for t in (s for a in atom_terms(f) for s in subterms(a)) if isinstance(t, Var)}


def substitute(f: Formula, old: Var, new: Var) -> Formula:
    """Rename free occurrences of ``old`` to ``new`` (no capture check; callers pick fresh names)."""

    def term(t: Term) -> Term:
        if t == old:
            return new
        if isinstance(t, App):
            return App(t.fn, term(t.arg))
        return t

    if isinstance(f, Eq):
        return Eq(term(f.left), term(f.right))
    if isinstance(f, Cmp):
        return Cmp(f.op, term(f.left), term(f.right))
    if isinstance(f, Pred):
        return Pred(f.name, tuple(term(a) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.body, old, new))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(substitute(f.left, old, new), substitute(f.right, old, new))
    if isinstance(f, (Forall, Exists)):
        if f.var == old:
            return f
        return type(f)(f.var, substitute(f.body, old, new))
    raise TypeError(f"not a formula: {f!r}")


# -- printing ----------------------------------------------------------------

_PREC = {Forall: 0, Exists: 0, Implies: 1, Or: 2, And: 3, Not: 4}
_ATOM_PREC = 5


def _prec(f: Formula) -> int:
    return _PREC.get(type(f), _ATOM_PREC)


def format_term(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, Lit):
        return str(t.value) if isinstance(t.value, int) else json.dumps(t.value)
    fn = "manu" if t.fn == "manufacturer" else t.fn
    return f"{fn}({format_term(t.arg)})"


def format_formula(f: Formula) -> str:
    """ASCII rendering that parses back to an identical AST."""

    def wrap(g: Formula, need: int) -> str:
        s = format_formula(g)
        return f"({s})" if _prec(g) < need else s

    if isinstance(f, Eq):
        return f"{format_term(f.left)} = {format_term(f.right)}"
    if isinstance(f, Cmp):
        return f"{format_term(f.left)} {f.op} {format_term(f.right)}"
    if isinstance(f, Pred):
        return f"{f.name}({', '.join(format_term(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"not {wrap(f.body, 4)}"
    if isinstance(f, And):
        return f"{wrap(f.left, 3)} and {wrap(f.right, 4)}"
    if isinstance(f, Or):
        return f"{wrap(f.left, 2)} or {wrap(f.right, 3)}"
    if isinstance(f, Implies):
        return f"{wrap(f.left, 2)} -> {wrap(f.right, 1)}"
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        return f"{q} {f.var.name}: {f.var.sort.value}. {format_formula(f.body)}"
    raise TypeError(f"not a formula: {f!r}")
