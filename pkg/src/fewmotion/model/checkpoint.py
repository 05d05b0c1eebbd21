"""Binary checkpoint format.

Layout: magic bytes "LAMPMINI", little-endian u32 format version,
u32 JSON header length, the UTF-8 JSON header, then raw float32
little-endian parameter blobs in header-declared order.

The header carries the model spec, per-parameter name/shape/group/origin/
trainable flags, and a schedule summary, so a checkpoint alone rebuilds a
runnable model.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ValidationError
from ..diffusion.schedule import NoiseSchedule, make_schedule
from .spec import ModelSpec, VideoModeFlags
from .unet import UNet, build_image_unet, inflate_to_video
from .registry import apply_freeze_policy

MAGIC = b"LAMPMINI"
FORMAT_VERSION = 1


def save_checkpoint(path, model: UNet, sched: NoiseSchedule | None = None,
                    meta: dict | None = None) -> None:
    entries = list(model.registry.entries.values())
    header = {
        "kind": "video" if model.is_video else "image",
        "model_spec": model.spec.to_dict(),
        "schedule": sched.summary() if sched is not None else None,
        "meta": meta or {},
        "params": [
            {"name": e.name, "shape": list(e.tensor.data.shape),
             "group": e.group, "origin": e.origin, "trainable": e.trainable}
            for e in entries
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for e in entries:
            f.write(np.ascontiguousarray(e.tensor.data, dtype="<f4").tobytes())


def load_checkpoint(path, dtype=np.float32):
    """Rebuild (model, schedule, header) from a checkpoint file."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValidationError(f"checkpoint: bad magic {magic!r} in {path}")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValidationError(f"checkpoint: unsupported format version {version}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        spec = ModelSpec.from_dict(header["model_spec"])
        model = build_image_unet(spec, dtype=dtype, seed=0)
        if header["kind"] == "video":
            model = inflate_to_video(model, seed=0)
        declared = {p["name"]: p for p in header["params"]}
        have = set(model.registry.entries)
        if set(declared) != have:
            missing = sorted(set(declared) ^ have)[:5]
            raise ValidationError(f"checkpoint: parameter names mismatch near {missing}")
        for p in header["params"]:
            shape = tuple(p["shape"])
            n = int(np.prod(shape)) if shape else 1
            raw = f.read(n * 4)
            if len(raw) != n * 4:
                raise ValidationError(f"checkpoint: truncated blob for {p['name']}")
            arr = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(dtype)
            entry = model.registry.entries[p["name"]]
            if entry.tensor.data.shape != shape:
                raise ValidationError(
                    f"checkpoint: shape mismatch for {p['name']}: "
                    f"{entry.tensor.data.shape} vs {shape}")
            entry.tensor.data = arr
            entry.trainable = bool(p["trainable"])
            entry.tensor.requires_grad = entry.trainable
    if header["kind"] == "video" and header["meta"].get("freeze_policy_applied"):
        apply_freeze_policy(model.registry)
    sched = None
    if header.get("schedule"):
        s = header["schedule"]
        sched = make_schedule(s["T"], s["beta_start"], s["beta_end"], s["ddim_count"])
    return model, sched, header
