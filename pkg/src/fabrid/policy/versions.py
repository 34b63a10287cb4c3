"""Version values and their total order.

The default scheme is three-part numeric (``1.2.3``). Any other scheme name
is accepted and compared component-wise on the dot-separated parts, numeric
parts before text parts.
"""
from __future__ import annotations

import enum
import functools
import re
from dataclasses import dataclass

DEFAULT_SCHEME = "multipartnumeric"
DEFAULT_VERSION = "1.0.0"

_THREE_PART = re.compile(r"^(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)$")


class VersionParseError(ValueError):
    pass


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def version_key(text: str, scheme: str = DEFAULT_SCHEME) -> tuple:
    if scheme == DEFAULT_SCHEME:
        m = _THREE_PART.match(text)
        if not m:
            raise VersionParseError(f"{text!r} is not a three-part numeric version")
        return tuple((0, int(g)) for g in m.groups())
    if not text or any(not part for part in text.split(".")):
        raise VersionParseError(f"{text!r} has an empty component")
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in text.split("."))


def compare_versions(a: str, b: str, scheme: str = DEFAULT_SCHEME) -> Ordering:
    ka, kb = version_key(a, scheme), version_key(b, scheme)
    if ka < kb:
        return Ordering.LESS
    if ka > kb:
        return Ordering.GREATER
    return Ordering.EQUAL


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    """A version value; equality and order follow the parsed key, not the text."""

    text: str
    scheme: str = DEFAULT_SCHEME

    def __post_init__(self) -> None:
        object.__setattr__(self, "_key", version_key(self.text, self.scheme))

    @property
    def key(self) -> tuple:
        return self._key  # type: ignore[attr-defined]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.key == other.key

    def __lt__(self, other: Version) -> bool:
        return self.key < other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __str__(self) -> str:
        return self.text


def successor(v: Version) -> Version | None:
    """Some version strictly greater than ``v`` (the smallest one for the default scheme)."""
    if v.scheme == DEFAULT_SCHEME:
        a, b, c = (x for _, x in v.key)
        return Version(f"{a}.{b}.{c + 1}")
    return Version(v.text + ".0", v.scheme)


def predecessor(v: Version) -> Version | None:
    """The largest default-scheme version below ``v``, or None if there is none."""
    if v.scheme != DEFAULT_SCHEME:
        low = Version("0", "generic")
        return low if low < v else None
    a, b, c = (x for _, x in v.key)
    if c > 0:
        return Version(f"{a}.{b}.{c - 1}")
    # x.y.0 has no immediate predecessor among three-part versions with bounded parts;
    # any smaller version will do as a representative of the gap below.
    if b > 0:
        return Version(f"{a}.{b - 1}.0")
    if a > 0:
        return Version(f"{a - 1}.0.0")
    return None


def between(lo: Version, hi: Version) -> Version | None:
    """Some version strictly inside (lo, hi), or None if the open interval is empty."""
    cand = successor(lo)
    if cand is not None and lo < cand < hi:
        return cand
    cand = predecessor(hi)
    if cand is not None and lo < cand < hi:
        return cand
    return None
