"""Kademlia-style storage overlay with write-authenticated records."""
from .kernels import BACKEND, IdTable
from .messages import Kind, Message
from .node import DhtNode
from .overlay import (
    DhtClient,
    DhtConfig,
    DhtLookupError,
    LookupResult,
    MaintenanceReport,
    NoReplicaResponded,
    Overlay,
    WriteResult,
)
from .routing import RoutingTable
from .storage import Behavior, RecordStore, Refused, StoredRecord, Tombstone
from .transport import InstantTransport, Transport

__all__ = [
    "BACKEND",
    "Behavior",
    "DhtClient",
    "DhtConfig",
    "DhtLookupError",
    "DhtNode",
    "IdTable",
    "InstantTransport",
    "Kind",
    "LookupResult",
    "MaintenanceReport",
    "Message",
    "NoReplicaResponded",
    "Overlay",
    "RecordStore",
    "Refused",
    "RoutingTable",
    "StoredRecord",
    "Tombstone",
    "Transport",
    "WriteResult",
]
