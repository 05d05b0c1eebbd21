"""Named parameter groups with origin and trainability flags.

Every parameter belongs to exactly one group. Origin records whether the
group came with the pretrained image model or was added at video
inflation; the freeze policy keys off both the origin and the group name.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..numerics import Tensor

PRETRAINED = "pretrained"
NEW = "new"

# self-attention query projections stay tunable alongside the new layers
_QUERY_GROUP_SUFFIX = ".sattn.q"


@dataclass
class ParamEntry:
    name: str
    tensor: Tensor
    group: str
    origin: str
    trainable: bool = True


class ParamRegistry:
    def __init__(self):
        self.entries: dict[str, ParamEntry] = {}

    def add(self, name: str, tensor: Tensor, group: str, origin: str) -> Tensor:
        if name in self.entries:
            raise ValidationError(f"registry: duplicate parameter name {name!r}")
        if origin not in (PRETRAINED, NEW):
            raise ValidationError(f"registry: unknown origin {origin!r}")
        tensor.requires_grad = True
        self.entries[name] = ParamEntry(name, tensor, group, origin)
        return tensor

    def absorb(self, other: "ParamRegistry") -> None:
        """Re-register another registry's entries (same tensors, fresh flags)."""
        for e in other.entries.values():
            self.add(e.name, e.tensor, e.group, e.origin)

    def __len__(self):
        return len(self.entries)

    def names(self):
        return list(self.entries)

    def tensors(self, trainable_only: bool = False) -> dict[str, Tensor]:
        return {e.name: e.tensor for e in self.entries.values()
                if e.trainable or not trainable_only}

    def groups(self, origin: str | None = None) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for e in self.entries.values():
            if origin is None or e.origin == origin:
                out.setdefault(e.group, []).append(e.name)
        return out

    def param_count(self, trainable_only: bool = False) -> int:
        return sum(e.tensor.size for e in self.entries.values()
                   if e.trainable or not trainable_only)

    def trainable_fraction(self) -> float:
        total = self.param_count()
        return self.param_count(trainable_only=True) / total if total else 0.0

    def checksum(self, trainable: bool | None = None) -> str:
        """SHA-256 over the float32 bytes of the selected parameters."""
        h = hashlib.sha256()
        for name in sorted(self.entries):
            e = self.entries[name]
            if trainable is not None and e.trainable != trainable:
                continue
            h.update(name.encode())
            h.update(np.ascontiguousarray(e.tensor.data, dtype=np.float32).tobytes())
        return h.hexdigest()


def apply_freeze_policy(registry: ParamRegistry) -> ParamRegistry:
    """Mark trainable parameters after video inflation.

    Tunable: every newly added group plus the query projections of the
    (first-frame) self-attention blocks. Everything else, including
    cross-attention and all pretrained convs/norms/embeddings, freezes.
    Idempotent.
    """
    for e in registry.entries.values():
        e.trainable = (e.origin == NEW) or e.group.endswith(_QUERY_GROUP_SUFFIX)
        e.tensor.requires_grad = e.trainable
    return registry
