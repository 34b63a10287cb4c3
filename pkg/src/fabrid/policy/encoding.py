"""Router-setup records: manufacturer as an IANA enterprise number, software
as SWID ``SoftwareIdentity``-style records."""
from __future__ import annotations

import json
from typing import Any, Iterable, Iterator

from .model import RouterSetup, SoftwareComponent
from .versions import DEFAULT_SCHEME, DEFAULT_VERSION, VersionParseError


class DecodeError(ValueError):
    pass


def encode_component(c: SoftwareComponent) -> dict[str, str]:
    return {
        "tagId": c.tag,
        "tagIssuer": c.issuer,
        "name": c.name,
        "version": c.version,
        "versionScheme": c.scheme,
    }


def decode_component(rec: dict[str, Any]) -> SoftwareComponent:
    if not rec.get("tagId"):
        raise DecodeError("software record is missing tagId")
    try:
        return SoftwareComponent(
            tag=str(rec["tagId"]),
            issuer=str(rec.get("tagIssuer", "")),
            name=str(rec.get("name", "")),
            version=str(rec.get("version") or DEFAULT_VERSION),
            scheme=str(rec.get("versionScheme") or DEFAULT_SCHEME),
        )
    except VersionParseError as e:
        raise DecodeError(f"software record {rec['tagId']!r}: {e}") from None


def encode_router_setup(r: RouterSetup) -> dict[str, Any]:
    return {
        "routerId": r.router_id,
        "manufacturer": {"pen": r.manufacturer},
        "software": [encode_component(c) for c in sorted(r.software)],
    }


def decode_router_setup(rec: dict[str, Any]) -> RouterSetup:
    try:
        pen = rec["manufacturer"]["pen"]
    except (KeyError, TypeError):
        raise DecodeError("router record is missing manufacturer.pen") from None
    if not isinstance(pen, int) or pen <= 0:
        raise DecodeError(f"manufacturer PEN must be a positive integer, got {pen!r}")
    comps = [decode_component(c) for c in rec.get("software", [])]
    try:
        return RouterSetup(str(rec.get("routerId", "")), pen, frozenset(comps))
    except ValueError as e:
        raise DecodeError(str(e)) from None


def dump_corpus(routers: Iterable[RouterSetup]) -> str:
    """One JSON record per line."""
    return "".join(json.dumps(encode_router_setup(r), sort_keys=True) + "\n" for r in routers)


def load_corpus(text: str) -> Iterator[RouterSetup]:
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DecodeError(f"line {lineno}: {e}") from None
        yield decode_router_setup(rec)
