"""Concrete syntax for router policies.

A policy file is a header of constant declarations followed by one formula::

    # comments start with '#'
    const m1: M = 9
    const s_crit: N = "openssl"
    const v_min: V = "3.0.7"
    manu(r) = m1 and exists c: C. software(r, c) and name(c) = s_crit

Connectives, loosest first: quantifiers (body extends to the right),
``->`` (right-assoc), ``or``, ``and``, ``not``. Unicode forms (∀ ∃ → ∨ ∧ ¬ ≤ ≥)
are accepted. ``manu`` abbreviates ``manufacturer``. The free router
variable is ``r``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .ast import (
    COMPARISONS,
    FUNCTION_ALIASES,
    FUNCTIONS,
    PREDICATES,
    And,
    App,
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
    conjuncts,
    constants,
    disjuncts,
    format_formula,
    format_term,
    free_vars,
    walk,
)
from .versions import DEFAULT_SCHEME, Version, VersionParseError


class PolicyError(Exception):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        line = text.count("\n", 0, position) + 1
        col = position - (text.rfind("\n", 0, position) + 1) + 1
        self.line, self.col = line, col
        super().__init__(f"{message} at line {line}, column {col}")


class SortError(PolicyError):
    def __init__(self, term: str, expected: Sort | str, found: Sort | str | None):
        self.term, self.expected, self.found = term, expected, found
        exp = expected.value if isinstance(expected, Sort) else expected
        fnd = found.value if isinstance(found, Sort) else found
        super().__init__(f"sort error in {term}: expected {exp}, found {fnd}")


class UnguardedQuantifier(PolicyError):
    pass


class NotARouterPolicy(PolicyError):
    pass


ROUTER_VAR = Var("r", Sort.R)

# -- tokens ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|<=|>=|!=|→|≤|≥|¬|∧|∨|∀|∃|[()=<>:.,])
    """,
    re.VERBOSE,
)
_UNICODE = {"→": "->", "≤": "<=", "≥": ">=", "¬": "not", "∧": "and", "∨": "or",
            "∀": "forall", "∃": "exists"}
_KEYWORDS = {"forall", "exists", "and", "or", "not"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str, offset: int, full: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if not m:
            raise PolicySyntaxError(f"unexpected character {src[i]!r}", offset + i, full)
        kind = m.lastgroup
        text = m.group()
        if kind == "op" and text in _UNICODE:
            text = _UNICODE[text]
            kind = "kw" if text in _KEYWORDS else "op"
        elif kind == "ident" and text in _KEYWORDS:
            kind = "kw"
        if kind != "ws":
            toks.append(_Tok(kind, text, offset + i))
        i = m.end()
    toks.append(_Tok("eof", "", offset + len(src)))
    return toks


# -- raw syntax tree (identifiers unresolved) --------------------------------


@dataclass(frozen=True)
class _RId:
    name: str
    pos: int


@dataclass(frozen=True)
class _RLit:
    value: int | str
    pos: int


@dataclass(frozen=True)
class _RApp:
    fn: str
    arg: Any
    pos: int


class _Parser:
    def __init__(self, toks: list[_Tok], full: str):
        self.toks = toks
        self.i = 0
        self.full = full

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str) -> PolicySyntaxError:
        t = self.tok
        found = t.text or "end of input"
        return PolicySyntaxError(f"{msg}, found {found!r}", t.pos, self.full)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "kw") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}")

    def ident(self) -> _Tok:
        if self.tok.kind != "ident":
            raise self.error("expected an identifier")
        t = self.tok
        self.i += 1
        return t

    def parse(self) -> Any:
        f = self.formula()
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input")
        return f

    def formula(self) -> Any:
        left = self.disjunction()
        if self.accept("->"):
            return ("implies", left, self.formula())
        return left

    def disjunction(self) -> Any:
        left = self.conjunction()
        while self.accept("or"):
            left = ("or", left, self.conjunction())
        return left

    def conjunction(self) -> Any:
        left = self.unary()
        while self.accept("and"):
            left = ("and", left, self.unary())
        return left

    def unary(self) -> Any:
        if self.accept("not"):
            return ("not", self.unary())
        if self.tok.kind == "kw" and self.tok.text in ("forall", "exists"):
            q = self.tok.text
            self.i += 1
            var = self.ident()
            self.expect(":")
            sort_tok = self.ident()
            try:
                sort = Sort(sort_tok.text)
            except ValueError:
                raise PolicySyntaxError(
                    f"unknown sort {sort_tok.text!r}", sort_tok.pos, self.full
                ) from None
            self.expect(".")
            return (q, var.text, sort, var.pos, self.formula())
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        return self.atom()

    def atom(self) -> Any:
        t = self.tok
        if t.kind == "ident" and t.text in PREDICATES and self.toks[self.i + 1].text == "(":
            self.i += 2
            args = [self.term()]
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
            return ("pred", t.text, tuple(args), t.pos)
        left = self.term()
        op = self.tok
        if op.kind == "op" and op.text in ("=", "!=") + COMPARISONS:
            self.i += 1
            right = self.term()
            if op.text == "!=":
                return ("not", ("eq", left, right, op.pos))
            if op.text == "=":
                return ("eq", left, right, op.pos)
            return ("cmp", op.text, left, right, op.pos)
        raise self.error("expected '=', '<', '<=', '>=', '>' or a predicate")

    def term(self) -> Any:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return _RLit(int(t.text), t.pos)
        if t.kind == "string":
            self.i += 1
            return _RLit(json.loads(t.text), t.pos)
        name = self.ident()
        if self.accept("("):
            fn = FUNCTION_ALIASES.get(name.text, name.text)
            if fn not in FUNCTIONS:
                raise PolicySyntaxError(f"unknown function {name.text!r}", name.pos, self.full)
            arg = self.term()
            self.expect(")")
            return _RApp(fn, arg, name.pos)
        return _RId(name.text, name.pos)


# -- sort checking / resolution ---------------------------------------------


def _raw_str(t: Any) -> str:
    if isinstance(t, _RId):
        return t.name
    if isinstance(t, _RLit):
        return json.dumps(t.value) if isinstance(t.value, str) else str(t.value)
    return f"{t.fn}({_raw_str(t.arg)})"


class _Checker:
    def __init__(self, declared: dict[str, Sort], free: dict[str, Var]):
        self.consts: dict[str, Sort] = dict(declared)
        self.free = free

    def resolve(self, t: Any, scope: dict[str, Var], expected: Sort | None) -> Term:
        if isinstance(t, _RLit):
            if expected is None:
                if isinstance(t.value, int):
                    return Lit(t.value, Sort.M)
                raise SortError(_raw_str(t), "a determinable sort", None)
            if isinstance(t.value, int) and expected is not Sort.M:
                raise SortError(_raw_str(t), expected, Sort.M)
            if isinstance(t.value, str) and expected in (Sort.M, Sort.C, Sort.R, Sort.P):
                raise SortError(_raw_str(t), expected, "string literal")
            if expected is Sort.V:
                try:
                    Version(t.value)
                except VersionParseError as e:
                    raise SortError(_raw_str(t), Sort.V, str(e)) from None
            return Lit(t.value, expected)
        if isinstance(t, _RApp):
            arg_sort, res_sort = FUNCTIONS[t.fn]
            if expected is not None and expected is not res_sort:
                raise SortError(_raw_str(t), expected, res_sort)
            return App(t.fn, self.resolve(t.arg, scope, arg_sort))
        # identifier
        if t.name in scope:
            v = scope[t.name]
        elif t.name in self.free:
            v = self.free[t.name]
        else:
            sort = self.consts.get(t.name)
            if sort is None:
                if expected is None:
                    raise SortError(t.name, "a determinable sort", None)
                self.consts[t.name] = sort = expected
            if expected is not None and sort is not expected:
                raise SortError(t.name, expected, sort)
            return Const(t.name, sort)
        if expected is not None and v.sort is not expected:
            raise SortError(t.name, expected, v.sort)
        return v

    def synth(self, t: Any, scope: dict[str, Var]) -> Sort | None:
        if isinstance(t, _RApp):
            return FUNCTIONS[t.fn][1]
        if isinstance(t, _RLit):
            return Sort.M if isinstance(t.value, int) else None
        if t.name in scope:
            return scope[t.name].sort
        if t.name in self.free:
            return self.free[t.name].sort
        return self.consts.get(t.name)

    def check(self, node: Any, scope: dict[str, Var]) -> Formula:
        tag = node[0]
        if tag == "eq":
            _, l, r, _pos = node
            sort = self.synth(l, scope) or self.synth(r, scope)
            if sort is None:
                raise SortError(f"{_raw_str(l)} = {_raw_str(r)}", "a determinable sort", None)
            return Eq(self.resolve(l, scope, sort), self.resolve(r, scope, sort))
        if tag == "cmp":
            _, op, l, r, _pos = node
            return Cmp(op, self.resolve(l, scope, Sort.V), self.resolve(r, scope, Sort.V))
        if tag == "pred":
            _, name, args, _pos = node
            sorts = PREDICATES[name]
            if len(args) != len(sorts):
                raise SortError(name, f"{len(sorts)} arguments", f"{len(args)}")
            return Pred(name, tuple(self.resolve(a, scope, s) for a, s in zip(args, sorts)))
        if tag == "not":
            return Not(self.check(node[1], scope))
        if tag in ("and", "or", "implies"):
            cls = {"and": And, "or": Or, "implies": Implies}[tag]
            return cls(self.check(node[1], scope), self.check(node[2], scope))
        if tag in ("forall", "exists"):
            _, name, sort, _pos, body = node
            v = Var(name, sort)
            inner = dict(scope)
            inner[name] = v
            cls = Forall if tag == "forall" else Exists
            return cls(v, self.check(body, inner))
        raise AssertionError(tag)


# -- guards --------------------------------------------------------------------


def _is_guard(f: Formula, c: Var) -> bool:
    return isinstance(f, Pred) and f.name == "software" and f.args[1] == c


def _guarded(q: Forall | Exists) -> bool:
    c, body = q.var, q.body
    if isinstance(q, Exists):
        return any(_is_guard(x, c) for x in conjuncts(body))
    if isinstance(body, Implies):
        return any(_is_guard(x, c) for x in conjuncts(body.left))
    if isinstance(body, Not):
        return any(_is_guard(x, c) for x in conjuncts(body.body))
    return any(isinstance(d, Not) and _is_guard(d.body, c) for d in disjuncts(body))


def check_guards(f: Formula) -> None:
    for node in walk(f):
        if isinstance(node, (Forall, Exists)) and node.var.sort is Sort.C and not _guarded(node):
            q = "forall" if isinstance(node, Forall) else "exists"
            raise UnguardedQuantifier(
                f"quantifier '{q} {node.var.name}: C' must be guarded by software(r, {node.var.name})"
            )


# -- policies ----------------------------------------------------------------


@dataclass(frozen=True)
class Policy:
    """A router policy: formula with free variable ``r`` plus constant bindings."""

    formula: Formula
    consts: dict[str, Sort] = field(default_factory=dict, compare=False, hash=False)
    bindings: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @property
    def router_var(self) -> Var:
        return ROUTER_VAR

    def bind(self, **values: Any) -> Policy:
        b = dict(self.bindings)
        b.update(values)
        return Policy(self.formula, self.consts, b)

    def __str__(self) -> str:
        return format_formula(self.formula)


def _header_value(sort: Sort, raw: str, scheme: str | None, pos: int, full: str) -> Any:
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        raise PolicySyntaxError(f"bad constant value {raw!r}", pos, full) from None
    if sort is Sort.M:
        if not isinstance(val, int) or val <= 0:
            raise PolicySyntaxError("manufacturer constants are positive PEN integers", pos, full)
        return val
    if not isinstance(val, str):
        raise PolicySyntaxError(f"constants of sort {sort.value} take a string value", pos, full)
    if sort is Sort.V:
        try:
            return Version(val, scheme or DEFAULT_SCHEME)
        except VersionParseError as e:
            raise PolicySyntaxError(str(e), pos, full) from None
    if sort in (Sort.C, Sort.R, Sort.P):
        raise PolicySyntaxError(
            f"constants of sort {sort.value} cannot be bound in a policy header", pos, full
        )
    return val


_HEADER = re.compile(
    r"^const\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*([A-Z])\s*(?:=\s*(\S.*?))?"
    r"(?:\s+scheme\s+\"([^\"]+)\")?\s*$"
)


def split_header(text: str) -> tuple[dict[str, Sort], dict[str, Any], str, int]:
    consts: dict[str, Sort] = {}
    bindings: dict[str, Any] = {}
    offset = 0
    lines = text.splitlines(keepends=True)
    body_start = len(text)
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("const ") or stripped.startswith("const\t"):
            m = _HEADER.match(stripped)
            if not m:
                raise PolicySyntaxError("malformed constant declaration", offset, text)
            name, sort_s, raw, scheme = m.groups()
            try:
                sort = Sort(sort_s)
            except ValueError:
                raise PolicySyntaxError(f"unknown sort {sort_s!r}", offset, text) from None
            if name in consts:
                raise PolicySyntaxError(f"constant {name!r} declared twice", offset, text)
            consts[name] = sort
            if raw is not None:
                bindings[name] = _header_value(sort, raw, scheme, offset, text)
        elif stripped and not stripped.startswith("#"):
            body_start = offset
            break
        offset += len(line)
    return consts, bindings, text[body_start:], body_start


def _strip_comments(body: str) -> str:
    # keep offsets stable: blank out comments instead of removing them
    return re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), body)


def parse_formula(
    text: str,
    consts: dict[str, Sort] | None = None,
    free: dict[str, Var] | None = None,
    *,
    _full: str | None = None,
    _offset: int = 0,
) -> tuple[Formula, dict[str, Sort]]:
    """Parse and sort-check a formula; returns it with the (possibly inferred) constant sorts."""
    full = text if _full is None else _full
    raw = _Parser(_tokenize(_strip_comments(text), _offset, full), full).parse()
    checker = _Checker(consts or {}, free if free is not None else {"r": ROUTER_VAR})
    f = checker.check(raw, {})
    return f, checker.consts


def check_router_policy(f: Formula) -> None:
    extra = free_vars(f) - {ROUTER_VAR}
    if extra:
        names = ", ".join(sorted(v.name for v in extra))
        raise NotARouterPolicy(f"router policy has unexpected free variables: {names}")
    routers = sorted(c.name for c in constants(f) if isinstance(c, Const) and c.sort is Sort.R)
    if routers:
        raise NotARouterPolicy(f"router policy may only refer to r, found router constants: {', '.join(routers)}")
    for node in walk(f):
        if isinstance(node, Pred) and node.name == "onPath":
            raise NotARouterPolicy("onPath atoms are not allowed in a router policy")
        if isinstance(node, (Forall, Exists)) and node.var.sort is Sort.P:
            raise NotARouterPolicy("path-sort quantifiers are not allowed in a router policy")
    check_guards(f)


def parse_policy(text: str, bindings: dict[str, Any] | None = None) -> Policy:
    consts, header_bindings, body, start = split_header(text)
    if not body.strip():
        raise PolicySyntaxError("missing policy formula", len(text), text)
    f, consts = parse_formula(body, consts, _full=text, _offset=start)
    check_router_policy(f)
    b = dict(header_bindings)
    if bindings:
        b.update(bindings)
    return Policy(f, consts, b)


def format_policy(p: Policy) -> str:
    lines = []
    for name, sort in p.consts.items():
        if name in p.bindings:
            val = p.bindings[name]
            if isinstance(val, Version):
                rendered = json.dumps(val.text)
                if val.scheme != DEFAULT_SCHEME:
                    rendered += f' scheme "{val.scheme}"'
            else:
                rendered = json.dumps(val)
            lines.append(f"const {name}: {sort.value} = {rendered}")
        else:
            lines.append(f"const {name}: {sort.value}")
    lines.append(format_formula(p.formula))
    return "\n".join(lines) + "\n"


__all__ = [
    "Policy",
    "PolicyError",
    "PolicySyntaxError",
    "SortError",
    "UnguardedQuantifier",
    "NotARouterPolicy",
    "ROUTER_VAR",
    "parse_formula",
    "parse_policy",
    "format_policy",
    "check_router_policy",
    "check_guards",
    "format_term",
]
