"""Satisfaction of policy formulas over finite router/path structures.

Quantifiers over C range over the software of the routers in the
structure; R and P range over its routers and paths; every other sort
ranges over the constants of the formula plus the values the structure
exhibits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .ast import (
    And,
    Cmp,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Lit,
    Not,
    Or,
    Pred,
    Sort,
    Term,
    Var,
    constants,
    substitute,
)
from .model import PathModel, RouterSetup, SoftwareComponent
from .parser import ROUTER_VAR, Policy, PolicyError
from .versions import Version


class UnboundConstant(PolicyError):
    pass


class _Undefined:
    """Value of ``issuer(t)`` for a tag no component carries; equal to nothing."""

    def __eq__(self, other: object) -> bool:
        return False

    def __hash__(self) -> int:
        return 0

    def __repr__(self) -> str:
        return "<undefined>"


UNDEFINED = _Undefined()


def literal_value(t: Lit) -> Any:
    return Version(t.value) if t.sort is Sort.V else t.value


@dataclass
class Structure:
    routers: tuple[RouterSetup, ...]
    paths: tuple[PathModel, ...] = ()

    def __post_init__(self) -> None:
        comps: dict[SoftwareComponent, None] = {}
        for r in self.routers:
            for c in sorted(r.software):
                comps[c] = None
        self.components = tuple(comps)
        self.issuer_of = {c.tag: c.issuer for c in self.components}

    def values(self, sort: Sort) -> list[Any]:
        if sort is Sort.R:
            return list(self.routers)
        if sort is Sort.P:
            return list(self.paths)
        if sort is Sort.C:
            return list(self.components)
        if sort is Sort.M:
            return [r.manufacturer for r in self.routers]
        if sort is Sort.T:
            return [c.tag for c in self.components]
        if sort is Sort.I:
            return [c.issuer for c in self.components]
        if sort is Sort.N:
            return [c.name for c in self.components]
        return [c.version_value for c in self.components]


class Evaluator:
    def __init__(self, formula: Formula, bindings: Mapping[str, Any]):
        self.formula = formula
        self.bindings = bindings
        self._const_values: dict[Sort, list[Any]] = {}
        for t in constants(formula):
            v = self.const_value(t)
            self._const_values.setdefault(t.sort, []).append(v)

    def const_value(self, t: Const | Lit) -> Any:
        if isinstance(t, Lit):
            return literal_value(t)
        if t.name not in self.bindings:
            raise UnboundConstant(f"constant {t.name!r} of sort {t.sort.value} has no binding")
        v = self.bindings[t.name]
        if t.sort is Sort.V and isinstance(v, str):
            v = Version(v)
        return v

    def domain(self, sort: Sort, s: Structure) -> list[Any]:
        vals = s.values(sort)
        if sort in (Sort.R, Sort.P, Sort.C):
            return vals
        out: dict[Any, None] = {}
        for v in self._const_values.get(sort, []):
            out[v] = None
        for v in vals:
            out[v] = None
        return list(out)

    def term(self, t: Term, s: Structure, env: dict[Var, Any]) -> Any:
        if isinstance(t, Var):
            return env[t]
        if isinstance(t, (Const, Lit)):
            return self.const_value(t)
        arg = self.term(t.arg, s, env)
        fn = t.fn
        if fn == "manufacturer":
            return arg.manufacturer
        if fn == "tag":
            return arg.tag
        if fn == "name":
            return arg.name
        if fn == "version":
            return arg.version_value
        if fn == "issuer":
            return s.issuer_of.get(arg, UNDEFINED)
        raise AssertionError(fn)

    def holds(self, f: Formula, s: Structure, env: dict[Var, Any]) -> bool:
        if isinstance(f, Eq):
            return self.term(f.left, s, env) == self.term(f.right, s, env)
        if isinstance(f, Cmp):
            a, b = self.term(f.left, s, env), self.term(f.right, s, env)
            if not (isinstance(a, Version) and isinstance(b, Version)):
                return False
            if f.op == "<":
                return a < b
            if f.op == "<=":
                return a <= b
            if f.op == ">=":
                return a >= b
            return a > b
        if isinstance(f, Pred):
            x, y = (self.term(a, s, env) for a in f.args)
            if f.name == "software":
                return y in x.software
            return y in x.routers
        if isinstance(f, Not):
            return not self.holds(f.body, s, env)
        if isinstance(f, And):
            return self.holds(f.left, s, env) and self.holds(f.right, s, env)
        if isinstance(f, Or):
            return self.holds(f.left, s, env) or self.holds(f.right, s, env)
        if isinstance(f, Implies):
            return (not self.holds(f.left, s, env)) or self.holds(f.right, s, env)
        if isinstance(f, (Forall, Exists)):
            inner = dict(env)
            want_all = isinstance(f, Forall)
            for v in self.domain(f.var.sort, s):
                inner[f.var] = v
                if self.holds(f.body, s, inner) != want_all:
                    return not want_all
            return want_all
        raise TypeError(f"not a formula: {f!r}")


def evaluate(
    formula: Formula,
    structure: Structure,
    env: Mapping[Var, Any],
    bindings: Mapping[str, Any],
) -> bool:
    return Evaluator(formula, bindings).holds(formula, structure, dict(env))


def eval_router_policy(pol: Policy, r: RouterSetup) -> bool:
    return evaluate(pol.formula, Structure((r,)), {ROUTER_VAR: r}, pol.bindings)


def path_violations(pol: Policy, p: PathModel) -> list[RouterSetup]:
    ev = Evaluator(pol.formula, pol.bindings)
    bad = []
    for r in sorted(p.routers, key=lambda x: x.router_id):
        if not ev.holds(pol.formula, Structure((r,)), {ROUTER_VAR: r}):
            bad.append(r)
    return bad


def eval_path_policy(pol: Policy, p: PathModel) -> bool:
    """Every router on ``p`` satisfies ``pol`` (vacuously true on an empty path)."""
    return not path_violations(pol, p)


PATH_VAR = Var("p", Sort.P)


def lift_to_path(pol: Policy) -> Formula:
    """forall r2: R. onPath(p, r2) -> pol(r2), with ``p`` free."""
    r2 = Var("r__on_path", Sort.R)
    return Forall(r2, Implies(Pred("onPath", (PATH_VAR, r2)), substitute(pol.formula, ROUTER_VAR, r2)))


def eval_lifted_path_policy(pol: Policy, p: PathModel) -> bool:
    """Evaluates the lifted formula directly over the whole path structure."""
    s = Structure(tuple(sorted(p.routers, key=lambda x: x.router_id)), (p,))
    return evaluate(lift_to_path(pol), s, {PATH_VAR: p}, pol.bindings)


def eval_all(pol: Policy, routers: Iterable[RouterSetup]) -> list[bool]:
    ev = Evaluator(pol.formula, pol.bindings)
    return [ev.holds(pol.formula, Structure((r,)), {ROUTER_VAR: r}) for r in routers]
