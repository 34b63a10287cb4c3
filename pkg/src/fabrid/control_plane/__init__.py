from .maps import (
    IfIpPair,
    IpRange,
    MapDecodeError,
    MapError,
    MapSizes,
    PolicyMaps,
    TooManyIndices,
    decode_maps,
    encode_maps,
    map_sizes,
    section_sizes,
    synthetic_maps,
)
from .paths import (
    ContainmentCache,
    EndToEndPath,
    Hop,
    HopStatus,
    HopVerdict,
    JoinMismatch,
    PathSegment,
    RankedPath,
    SegmentKind,
    assign_indices,
    combine_segments,
    enumerate_paths,
    filter_paths,
)
from .pcb import (
    DETACHED_MARKER_LEN,
    PCB,
    AsContext,
    AsEntry,
    DigestMismatch,
    Expired,
    IndexConflict,
    PcbDecodeError,
    PcbError,
    SignatureInvalid,
    UnsupportedAnnouncement,
    UpstreamSignatureInvalid,
    decode_pcb,
    detach_all,
    detach_extension,
    extend_pcb,
    originate_pcb,
    reattach_extension,
    verify_pcb,
)
from .service import BeaconStore, ControlService, IntraRoutePolicy, NotLocal

__all__ = [
    "IfIpPair", "IpRange", "MapDecodeError", "MapError", "MapSizes", "PolicyMaps",
    "TooManyIndices", "decode_maps", "encode_maps", "map_sizes",
    "section_sizes",
    "synthetic_maps",
    "ContainmentCache", "EndToEndPath", "Hop", "HopStatus", "HopVerdict", "JoinMismatch",
    "PathSegment", "RankedPath", "SegmentKind", "assign_indices", "combine_segments",
    "enumerate_paths", "filter_paths",
    "DETACHED_MARKER_LEN", "PCB", "AsContext", "AsEntry", "DigestMismatch", "Expired",
    "IndexConflict", "PcbDecodeError", "PcbError", "SignatureInvalid",
    "UnsupportedAnnouncement", "UpstreamSignatureInvalid", "decode_pcb", "detach_all",
    "detach_extension", "extend_pcb", "originate_pcb", "reattach_extension", "verify_pcb",
    "BeaconStore", "ControlService", "IntraRoutePolicy", "NotLocal",
]
