from __future__ import annotations

from dataclasses import dataclass, field

from .addr import AsId
from .crypto import PubKey, SigKeyPair, verify

GLOBAL_AUTHORITY = "global"

Signer = AsId | str


@dataclass
class TrustStore:
    """Pre-provisioned verifying keys: one per AS plus the global registry authority."""

    keys: dict[Signer, PubKey] = field(default_factory=dict)

    def add(self, pk: PubKey) -> None:
        self.keys[pk.owner] = pk

    def add_pair(self, kp: SigKeyPair) -> None:
        self.add(kp.public)

    def get(self, signer: Signer) -> PubKey | None:
        return self.keys.get(signer)

    def verify(self, signer: Signer, msg: bytes, sig: bytes) -> bool:
        pk = self.keys.get(signer)
        return pk is not None and verify(pk, msg, sig)

    def __contains__(self, signer: object) -> bool:
        return signer in self.keys
