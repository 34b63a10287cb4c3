from .dupsup import DupVerdict, DuplicateFilter, duplicate_check
from .endpoint import (
    Accept,
    Confirmation,
    DestContext,
    IndexCountMismatch,
    InvalidConfirmation,
    InvalidControlMessage,
    MissingKey,
    PathInvalid,
    PathValid,
    SourceContext,
    UnknownTimestamp,
    build_packet,
    decrypt_index,
    dest_process,
    dvf_for,
    encrypt_index,
    source_validate,
    verify_control_message,
)
from .packet import HopField, Packet, PacketDecodeError, decode_packet, header_len
from .router import (
    ControlMessage,
    ControlReply,
    Drop,
    DropReason,
    ForwardingTable,
    Forward,
    RouterContext,
    RouterFaults,
    router_process,
)

__all__ = [
    "DupVerdict", "DuplicateFilter", "duplicate_check",
    "Accept", "Confirmation", "DestContext", "IndexCountMismatch", "InvalidConfirmation",
    "InvalidControlMessage", "MissingKey", "PathInvalid", "PathValid", "SourceContext",
    "UnknownTimestamp", "build_packet", "decrypt_index", "dest_process", "dvf_for",
    "encrypt_index", "source_validate", "verify_control_message",
    "HopField", "Packet", "PacketDecodeError", "decode_packet", "header_len",
    "ControlMessage", "ControlReply", "Drop", "DropReason", "ForwardingTable", "Forward",
    "RouterContext", "RouterFaults", "router_process",
]
