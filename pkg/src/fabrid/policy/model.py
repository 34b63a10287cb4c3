from __future__ import annotations

from dataclasses import dataclass, field

from .versions import DEFAULT_SCHEME, DEFAULT_VERSION, Version

MAX_SOFTWARE = 8


@dataclass(frozen=True, order=True)
class SoftwareComponent:
    tag: str
    issuer: str
    name: str
    version: str = DEFAULT_VERSION
    scheme: str = DEFAULT_SCHEME

    def __post_init__(self) -> None:
        if not self.tag:
            raise ValueError("software component needs a tag")
        Version(self.version, self.scheme)  # validates

    @property
    def version_value(self) -> Version:
        return Version(self.version, self.scheme)


@dataclass(frozen=True)
class RouterSetup:
    router_id: str
    manufacturer: int
    software: frozenset[SoftwareComponent] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "software", frozenset(self.software))
        if self.manufacturer <= 0 or self.manufacturer >= 1 << 32:
            raise ValueError(f"manufacturer must be a positive 32-bit PEN, got {self.manufacturer}")
        if len(self.software) > MAX_SOFTWARE:
            raise ValueError(f"software stack exceeds {MAX_SOFTWARE} components")
        tags = [c.tag for c in self.software]
        if len(set(tags)) != len(tags):
            raise ValueError("software tags must be unique within a router setup")

    def describe(self) -> str:
        parts = [f"router {self.router_id}: manufacturer={self.manufacturer}"]
        for c in sorted(self.software):
            parts.append(
                f"  - tag={c.tag} issuer={c.issuer} name={c.name} version={c.version}"
            )
        if not self.software:
            parts.append("  (no software components)")
        return "\n".join(parts)


@dataclass(frozen=True)
class PathModel:
    """An intra-AS path, as a set of router setups (order and repetition ignored)."""

    path_id: str
    routers: frozenset[RouterSetup] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "routers", frozenset(self.routers))
