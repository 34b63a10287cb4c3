"""Bounded containment of router policies.

``check_containment(path_pol, pref_pol, bounds)`` decides whether every
router setup inside the bounds that satisfies ``path_pol`` also satisfies
``pref_pol``. The bounds fix the maximum software-stack size ``k`` and a
finite universe per sort: the constants of both policies plus fresh
elements (one per sort, ``k`` fresh tags so that ``k`` components can carry
distinct tags, and one representative per gap of the version order).

Two procedures decide the same question:

* ``enumerate_containment`` walks every setup in the bounded space and
  evaluates both policies. It handles every formula but is exponential.
* ``homomorphism_containment`` handles the negation-free conjunctive
  fragment (``and``, ``exists``, equalities, ``software``). It builds the
  canonical setup of the path policy, checks for a homomorphism from the
  preference policy into it, and otherwise searches the bounded images of
  the canonical setup for one that refutes the preference policy.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Any, Iterator

from .ast import (
    And,
    App,
    Const,
    Eq,
    Exists,
    Formula,
    Lit,
    Pred,
    Sort,
    Term,
    Var,
    constants,
    walk,
)
from .model import MAX_SOFTWARE, RouterSetup, SoftwareComponent
from .parser import ROUTER_VAR, Policy, PolicyError
from .semantics import Evaluator, Structure
from .versions import Version, between, predecessor, successor

FRESH_NAME = "~fresh-name"
FRESH_ISSUER = "~fresh-issuer"
FRESH_TAG = "~fresh-tag-{}"
WITNESS_ID = "witness"


class Verdict(enum.Enum):
    CONTAINED = "Contained"
    NOT_CONTAINED = "NotContained"
    UNKNOWN = "Unknown"


class UnsupportedPolicy(PolicyError):
    pass


@dataclass(frozen=True)
class ContainmentBounds:
    k: int = 2
    node_limit: int = 500_000

    def __post_init__(self) -> None:
        if not 0 <= self.k <= MAX_SOFTWARE:
            raise ValueError(f"k must be within 0..{MAX_SOFTWARE}")


@dataclass
class ContainmentResult:
    verdict: Verdict
    witness: RouterSetup | None = None
    method: str = ""
    explored: int = 0

    def __str__(self) -> str:
        if self.verdict is Verdict.NOT_CONTAINED:
            return f"NotContained (witness: {self.witness})"
        if self.verdict is Verdict.UNKNOWN:
            return f"Unknown (budget exhausted after {self.explored} setups)"
        return "Contained"


# -- universes ----------------------------------------------------------------


def _constant_values(pol: Policy) -> dict[Sort, set[Any]]:
    ev = Evaluator(pol.formula, pol.bindings)
    out: dict[Sort, set[Any]] = {}
    for t in constants(pol.formula):
        if t.sort in (Sort.C, Sort.R, Sort.P):
            raise UnsupportedPolicy(
                f"constants of sort {t.sort.value} are not supported in containment checks"
            )
        out.setdefault(t.sort, set()).add(ev.const_value(t))
    return out


def _version_universe(consts: set[Version]) -> list[Version]:
    vs = sorted(consts)
    if not vs:
        return [Version("1.0.0")]
    out: list[Version] = []
    below = predecessor(vs[0])
    if below is not None and below < vs[0]:
        out.append(below)
    for lo, hi in zip(vs, vs[1:]):
        out.append(lo)
        mid = between(lo, hi)
        if mid is not None:
            out.append(mid)
    out.append(vs[-1])
    above = successor(vs[-1])
    if above is not None:
        out.append(above)
    return out


@dataclass(frozen=True)
class Universe:
    manufacturers: tuple[int, ...]
    tags: tuple[str, ...]  # constant tags only; fresh tags are FRESH_TAG.format(j)
    issuers: tuple[str, ...]
    names: tuple[str, ...]
    versions: tuple[Version, ...]
    k: int

    def fresh_tags(self) -> tuple[str, ...]:
        return tuple(FRESH_TAG.format(j) for j in range(self.k))

    def values(self, sort: Sort) -> tuple[Any, ...]:
        return {
            Sort.M: self.manufacturers,
            Sort.T: self.tags + self.fresh_tags(),
            Sort.I: self.issuers,
            Sort.N: self.names,
            Sort.V: self.versions,
        }[sort]


def bounded_universe(p: Policy, q: Policy, k: int) -> Universe:
    cv: dict[Sort, set[Any]] = {}
    for pol in (p, q):
        for s, vals in _constant_values(pol).items():
            cv.setdefault(s, set()).update(vals)
    ms = sorted(v for v in cv.get(Sort.M, set()) if isinstance(v, int) and v > 0)
    fresh_m = (max(ms) + 1) if ms else 1
    strs = lambda s: sorted(v for v in cv.get(s, set()) if isinstance(v, str))  # noqa: E731
    return Universe(
        manufacturers=tuple(ms) + (fresh_m,),
        tags=tuple(strs(Sort.T)),
        issuers=tuple(strs(Sort.I)) + (FRESH_ISSUER,),
        names=tuple(strs(Sort.N)) + (FRESH_NAME,),
        versions=tuple(_version_universe({v for v in cv.get(Sort.V, set())})),
        k=k,
    )


# -- brute-force enumeration ------------------------------------------------------

_FRESH = object()


def _component(tag: str, issuer: str, name: str, version: Version) -> SoftwareComponent:
    return SoftwareComponent(tag, issuer, name, version.text, version.scheme)


def bounded_setups(u: Universe) -> Iterator[RouterSetup]:
    """Every router setup in the bounded space (up to renaming of fresh tags)."""
    shapes = list(itertools.product(u.tags + (_FRESH,), u.issuers, u.names, u.versions))
    for size in range(u.k + 1):
        for combo in itertools.combinations_with_replacement(range(len(shapes)), size):
            const_tags = [shapes[i][0] for i in combo if shapes[i][0] is not _FRESH]
            if len(const_tags) != len(set(const_tags)):
                continue
            comps = []
            fresh = 0
            for i in combo:
                tag, issuer, name, version = shapes[i]
                if tag is _FRESH:
                    tag = FRESH_TAG.format(fresh)
                    fresh += 1
                comps.append(_component(tag, issuer, name, version))
            sw = frozenset(comps)
            for m in u.manufacturers:
                yield RouterSetup(WITNESS_ID, m, sw)


def enumerate_containment(p: Policy, q: Policy, bounds: ContainmentBounds) -> ContainmentResult:
    u = bounded_universe(p, q, bounds.k)
    ev_p = Evaluator(p.formula, p.bindings)
    ev_q = Evaluator(q.formula, q.bindings)
    n = 0
    for setup in bounded_setups(u):
        n += 1
        if n > bounds.node_limit:
            return ContainmentResult(Verdict.UNKNOWN, method="enumeration", explored=n - 1)
        s = Structure((setup,))
        env = {ROUTER_VAR: setup}
        if ev_p.holds(p.formula, s, env) and not ev_q.holds(q.formula, s, env):
            return ContainmentResult(Verdict.NOT_CONTAINED, setup, "enumeration", n)
    return ContainmentResult(Verdict.CONTAINED, method="enumeration", explored=n)


# -- conjunctive fragment -----------------------------------------------------------


class _NotConjunctive(Exception):
    pass


_ATTRS = ("tag", "issuer", "name", "version")


@dataclass
class _Null:
    """A labelled null of the canonical setup; equal only to itself."""

    label: str

    def __eq__(self, other: object) -> bool:
        return self is other

    def __hash__(self) -> int:
        return id(self)


class _UF:
    def __init__(self) -> None:
        self.parent: dict[Any, Any] = {}

    def find(self, x: Any) -> Any:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: Any, b: Any) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


@dataclass
class CanonicalQuery:
    """A conjunctive router policy after equality saturation.

    Cells: ``("manu",)``, ``(comp, attr)`` per component variable and
    attribute, and ``("var", v)`` per non-component variable. ``value``
    maps a cell class root to its constant value, if any.
    """

    components: list[Var]
    uf: _UF
    value: dict[Any, Any]
    satisfiable: bool
    mentions_manu: bool
    mentioned_attrs: set[str] = field(default_factory=set)

    def cls(self, cell: Any) -> Any:
        return self.uf.find(cell)


def _is_conjunctive(f: Formula) -> bool:
    for node in walk(f):
        if isinstance(node, (And, Eq)):
            continue
        if isinstance(node, Exists) and node.var.sort not in (Sort.R, Sort.P):
            continue
        if isinstance(node, Pred) and node.name == "software":
            continue
        return False
    return True


def canonical_query(pol: Policy) -> CanonicalQuery:
    f = pol.formula
    if not _is_conjunctive(f):
        raise _NotConjunctive()
    ev = Evaluator(f, pol.bindings)
    comp_vars: list[Var] = []
    other_vars: list[Var] = []
    atoms: list[Formula] = []
    for node in walk(f):
        if isinstance(node, Exists):
            if node.var in comp_vars or node.var in other_vars:
                raise _NotConjunctive()  # shadowing; keep the fragment simple
            (comp_vars if node.var.sort is Sort.C else other_vars).append(node.var)
        elif isinstance(node, (Eq, Pred)):
            atoms.append(node)

    uf = _UF()
    value: dict[Any, Any] = {}
    mentioned: set[str] = set()
    mentions_manu = False

    def cell(t: Term) -> Any:
        nonlocal mentions_manu
        if isinstance(t, Var):
            if t.sort is Sort.C:
                return ("comp", t)
            if t.sort is Sort.R:
                if t != ROUTER_VAR:
                    raise _NotConjunctive()
                return ("router",)
            return ("var", t)
        if isinstance(t, (Const, Lit)):
            if t.sort in (Sort.C, Sort.R, Sort.P):
                raise _NotConjunctive()
            return ("const", t.sort, ev.const_value(t))
        if t.fn == "manufacturer":
            if t.arg != ROUTER_VAR:
                raise _NotConjunctive()
            mentions_manu = True
            return ("manu",)
        if t.fn == "issuer":
            inner = t.arg
            if not (isinstance(inner, App) and inner.fn == "tag" and isinstance(inner.arg, Var)):
                raise _NotConjunctive()
            mentioned.add("issuer")
            return (inner.arg, "issuer")
        if not isinstance(t.arg, Var):
            raise _NotConjunctive()
        mentioned.add(t.fn)
        return (t.arg, t.fn)

    comp_eqs: list[tuple[Var, Var]] = []
    for a in atoms:
        if isinstance(a, Pred):
            r, c = a.args
            if r != ROUTER_VAR or not isinstance(c, Var):
                raise _NotConjunctive()
            continue
        l, r = cell(a.left), cell(a.right)
        if l[0] == "comp" or r[0] == "comp":
            if not (l[0] == "comp" and r[0] == "comp"):
                raise _NotConjunctive()
            comp_eqs.append((l[1], r[1]))
            continue
        if l[0] == "router" or r[0] == "router":
            continue  # r = r
        uf.union(l, r)

    # component identity: explicit equalities plus equal tags; saturate
    comp_uf = _UF()
    for a, b in comp_eqs:
        comp_uf.union(a, b)
    changed = True
    while changed:
        changed = False
        for a, b in itertools.combinations(comp_vars, 2):
            ra, rb = comp_uf.find(a), comp_uf.find(b)
            if ra == rb:
                for attr in _ATTRS:
                    changed |= uf.union((a, attr), (b, attr))
            elif uf.find((a, "tag")) == uf.find((b, "tag")):
                comp_uf.union(a, b)
                changed = True

    # constant values per class
    satisfiable = True
    for key in list(uf.parent):
        if key[0] == "const":
            root = uf.find(key)
            v = key[2]
            if root in value and value[root] != v:
                satisfiable = False
            value.setdefault(root, v)

    # every non-component variable must be tied to an attribute or a constant
    anchored_roots = {uf.find(k) for k in uf.parent if k[0] in ("const", "manu") or k[0] in comp_vars}
    for v in other_vars:
        if uf.find(("var", v)) not in anchored_roots:
            raise _NotConjunctive()

    reps = []
    seen = set()
    for c in comp_vars:
        root = comp_uf.find(c)
        if root not in seen:
            seen.add(root)
            reps.append(root)
    # canonicalize cells of merged components onto the representative
    for c in comp_vars:
        root = comp_uf.find(c)
        for attr in _ATTRS:
            uf.union((root, attr), (c, attr))
    return CanonicalQuery(reps, uf, value, satisfiable, mentions_manu, mentioned)


@dataclass
class _Target:
    """A (possibly symbolic) router setup: manufacturer and component attribute rows."""

    manu: Any
    comps: list[dict[str, Any]]


def _cq_maps_into(q: CanonicalQuery, t: _Target) -> bool:
    """Is there a homomorphism from the query into the target setup?"""
    if not q.satisfiable:
        return False
    binding: dict[Any, Any] = {}

    def assign(cell: Any, val: Any, undo: list[Any]) -> bool:
        root = q.cls(cell)
        if root in q.value and q.value[root] != val:
            return False
        if root in binding:
            return binding[root] == val
        binding[root] = val
        undo.append(root)
        return True

    start: list[Any] = []
    if not assign(("manu",), t.manu, start):
        return False

    def search(i: int) -> bool:
        if i == len(q.components):
            return True
        c = q.components[i]
        for row in t.comps:
            undo: list[Any] = []
            if all(assign((c, a), row[a], undo) for a in _ATTRS) and search(i + 1):
                return True
            for root in undo:
                del binding[root]
        return False

    return search(0)


def _canonical_target(p: CanonicalQuery) -> _Target:
    nulls: dict[Any, Any] = {}

    def val(cell: Any) -> Any:
        root = p.cls(cell)
        if root in p.value:
            return p.value[root]
        return nulls.setdefault(root, _Null(str(cell)))

    return _Target(val(("manu",)), [{a: val((c, a)) for a in _ATTRS} for c in p.components])


def _sort_of_attr(attr: str) -> Sort:
    return {"tag": Sort.T, "issuer": Sort.I, "name": Sort.N, "version": Sort.V}[attr]


def _images(p: CanonicalQuery, u: Universe) -> Iterator[RouterSetup]:
    """Bounded router setups that are homomorphic images of the canonical setup of ``p``."""
    cells: list[tuple[Any, Sort]] = [(("manu",), Sort.M)]
    for c in p.components:
        for a in _ATTRS:
            cells.append(((c, a), _sort_of_attr(a)))
    null_roots: list[Any] = []
    root_sort: dict[Any, Sort] = {}
    for cell, sort in cells:
        root = p.cls(cell)
        if root in p.value or root in root_sort:
            continue
        root_sort[root] = sort
        null_roots.append(root)
    # constants must be admissible values of their sort in the universe
    for cell, sort in cells:
        root = p.cls(cell)
        if root in p.value:
            v = p.value[root]
            if sort is Sort.M and not (isinstance(v, int) and v > 0):
                return
    choices = [u.values(root_sort[r]) for r in null_roots]
    for combo in itertools.product(*choices):
        assign = dict(zip(null_roots, combo))

        def val(cell: Any) -> Any:
            root = p.cls(cell)
            return p.value[root] if root in p.value else assign[root]

        by_tag: dict[str, tuple] = {}
        ok = True
        for c in p.components:
            row = tuple(val((c, a)) for a in _ATTRS)
            prev = by_tag.get(row[0])
            if prev is not None and prev != row:
                ok = False
                break
            by_tag[row[0]] = row
        if not ok or len(by_tag) > u.k:
            continue
        try:
            comps = frozenset(
                _component(tag, issuer, name, version if isinstance(version, Version) else Version(str(version)))
                for tag, issuer, name, version in by_tag.values()
            )
            yield RouterSetup(WITNESS_ID, val(("manu",)), comps)
        except ValueError:
            continue


def _target_of(setup: RouterSetup) -> _Target:
    return _Target(
        setup.manufacturer,
        [
            {"tag": c.tag, "issuer": c.issuer, "name": c.name, "version": c.version_value}
            for c in sorted(setup.software)
        ],
    )


def homomorphism_containment(p: Policy, q: Policy, bounds: ContainmentBounds) -> ContainmentResult:
    """Decide containment for conjunctive policies; raises UnsupportedPolicy otherwise."""
    try:
        cp = canonical_query(p)
        cq = canonical_query(q)
    except _NotConjunctive:
        raise UnsupportedPolicy("policies are outside the conjunctive fragment") from None
    if not cp.satisfiable:
        return ContainmentResult(Verdict.CONTAINED, method="homomorphism")
    if _cq_maps_into(cq, _canonical_target(cp)):
        return ContainmentResult(Verdict.CONTAINED, method="homomorphism")
    u = bounded_universe(p, q, bounds.k)
    n = 0
    for image in _images(cp, u):
        n += 1
        if not _cq_maps_into(cq, _target_of(image)):
            return ContainmentResult(Verdict.NOT_CONTAINED, image, "homomorphism", n)
    return ContainmentResult(Verdict.CONTAINED, method="homomorphism", explored=n)


def is_conjunctive(pol: Policy) -> bool:
    try:
        canonical_query(pol)
    except (_NotConjunctive, UnsupportedPolicy):
        return False
    return True


def check_containment(
    path_pol: Policy, pref_pol: Policy, bounds: ContainmentBounds | None = None
) -> ContainmentResult:
    bounds = bounds or ContainmentBounds()
    _constant_values(path_pol)
    _constant_values(pref_pol)
    if is_conjunctive(path_pol) and is_conjunctive(pref_pol):
        return homomorphism_containment(path_pol, pref_pol, bounds)
    return enumerate_containment(path_pol, pref_pol, bounds)
