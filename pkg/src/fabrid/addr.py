from __future__ import annotations

import ipaddress
from dataclasses import dataclass

MAX_ISD = (1 << 16) - 1
MAX_AS = (1 << 48) - 1


@dataclass(frozen=True, order=True)
class AsId:
    """ISD-AS identifier. Text form is ``isd-as`` with the AS either decimal
    or three colon-separated 16-bit hex groups (``1-ff00:0:110``)."""

    isd: int
    as_num: int

    def __post_init__(self) -> None:
        if not 0 <= self.isd <= MAX_ISD:
            raise ValueError(f"ISD out of range: {self.isd}")
        if not 0 <= self.as_num <= MAX_AS:
            raise ValueError(f"AS number out of range: {self.as_num}")

    def encode(self) -> bytes:
        return self.isd.to_bytes(2, "big") + self.as_num.to_bytes(6, "big")

    @classmethod
    def decode(cls, raw: bytes) -> AsId:
        if len(raw) != 8:
            raise ValueError("AsId encoding is 8 bytes")
        return cls(int.from_bytes(raw[:2], "big"), int.from_bytes(raw[2:], "big"))

    @classmethod
    def parse(cls, text: str) -> AsId:
        try:
            isd_s, as_s = str(text).strip().split("-", 1)
            if ":" in as_s:
                groups = as_s.split(":")
                if len(groups) != 3:
                    raise ValueError
                as_num = 0
                for g in groups:
                    v = int(g, 16)
                    if not 0 <= v <= 0xFFFF:
                        raise ValueError
                    as_num = (as_num << 16) | v
            else:
                as_num = int(as_s)
            return cls(int(isd_s), as_num)
        except ValueError:
            raise ValueError(f"bad ISD-AS identifier: {text!r}") from None

    def __str__(self) -> str:
        n = self.as_num
        if n < (1 << 32):
            return f"{self.isd}-{n}"
        return f"{self.isd}-{n >> 32:x}:{(n >> 16) & 0xFFFF:x}:{n & 0xFFFF:x}"


@dataclass(frozen=True, order=True)
class HostAddr:
    """IPv4 host address, stored as its integer value."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < (1 << 32):
            raise ValueError("IPv4 address out of range")

    def encode(self) -> bytes:
        return self.value.to_bytes(4, "big")

    @classmethod
    def decode(cls, raw: bytes) -> HostAddr:
        if len(raw) != 4:
            raise ValueError("HostAddr encoding is 4 bytes")
        return cls(int.from_bytes(raw, "big"))

    @classmethod
    def parse(cls, text: str) -> HostAddr:
        return cls(int(ipaddress.IPv4Address(str(text).strip())))

    def __str__(self) -> str:
        return str(ipaddress.IPv4Address(self.value))
