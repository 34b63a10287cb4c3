"""Random policies in the conjunctive fragment (``and``, ``exists``, equalities, ``software``)."""
from __future__ import annotations

import random
from dataclasses import dataclass

from fabrid.policy import Policy, parse_policy

MANUS = (9, 11)
NAMES = ("openssl", "fw")
ISSUERS = ("https://swid.example", "https://other.example")
VERSIONS = ("1.0.0", "2.1.0")
TAGS = ("tag-a",)


@dataclass
class Pool:
    """Which constants one generated pair may use; small pools keep k=3 enumeration cheap."""

    manus: tuple[int, ...]
    names: tuple[str, ...]
    issuers: tuple[str, ...]
    versions: tuple[str, ...]
    tags: tuple[str, ...]


def random_pool(rng: random.Random) -> Pool:
    return Pool(
        manus=tuple(rng.sample(MANUS, rng.randint(1, 2))),
        names=tuple(rng.sample(NAMES, rng.randint(1, 2))),
        issuers=tuple(rng.sample(ISSUERS, 1)),
        versions=tuple(rng.sample(VERSIONS, rng.randint(1, 2))),
        tags=TAGS if rng.random() < 0.2 else (),
    )


def _quote(v: object) -> str:
    return str(v) if isinstance(v, int) else f'"{v}"'


def random_policy_text(rng: random.Random, pool: Pool, max_components: int = 2) -> str:
    consts: dict[str, tuple[str, object]] = {}

    def const(sort: str, value: object) -> str:
        for name, (s, v) in consts.items():
            if s == sort and v == value:
                return name
        name = f"k{len(consts)}"
        consts[name] = (sort, value)
        return name

    conj: list[str] = []
    if rng.random() < 0.6:
        conj.append(f"manu(r) = {const('M', rng.choice(pool.manus))}")
    comps = [f"c{i}" for i in range(rng.randint(0 if conj else 1, max_components))]
    per_comp: list[list[str]] = []
    for c in comps:
        atoms = [f"software(r, {c})"]
        for a in rng.sample(["name", "issuer", "version", "tag"], rng.randint(0, 3)):
            if a == "name":
                atoms.append(f"name({c}) = {const('N', rng.choice(pool.names))}")
            elif a == "issuer":
                atoms.append(f"issuer(tag({c})) = {const('I', rng.choice(pool.issuers))}")
            elif a == "version":
                atoms.append(f"version({c}) = {const('V', rng.choice(pool.versions))}")
            elif pool.tags:
                atoms.append(f"tag({c}) = {const('T', rng.choice(pool.tags))}")
        per_comp.append(atoms)
    if len(comps) == 2 and rng.random() < 0.25:
        attr = rng.choice(["name", "version"])
        per_comp[1].append(f"{attr}({comps[0]}) = {attr}({comps[1]})")
    # each quantifier's body must open with its software guard
    nested = ""
    for c, atoms in reversed(list(zip(comps, per_comp))):
        inner = " and ".join(atoms + ([f"({nested})"] if nested else []))
        nested = f"exists {c}: C. {inner}"
    parts = conj + ([f"({nested})"] if nested and conj else [nested] if nested else [])
    text = " and ".join(parts)
    header = "".join(f"const {n}: {s} = {_quote(v)}\n" for n, (s, v) in consts.items())
    return header + text


def random_pair(rng: random.Random) -> tuple[Policy, Policy, str, str]:
    pool = random_pool(rng)
    a = random_policy_text(rng, pool)
    b = a if rng.random() < 0.05 else random_policy_text(rng, pool)
    return parse_policy(a), parse_policy(b), a, b
