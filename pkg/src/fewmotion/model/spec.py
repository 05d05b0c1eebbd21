"""Architecture hyperparameters for the image UNet and its video inflation."""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

from ..errors import ValidationError


@dataclass
class ModelSpec:
    in_channels: int = 3
    base_width: int = 24
    channel_mults: tuple = (1, 2, 4)
    num_res_blocks: int = 1
    attn_levels: tuple = (2,)       # level indices with attention; default lowest
    vocab_size: int = 19
    text_width: int = 48
    num_heads: int = 4
    max_tokens: int = 6
    norm_groups: int = 8

    @property
    def widths(self) -> list[int]:
        return [self.base_width * m for m in self.channel_mults]

    @property
    def time_width(self) -> int:
        return self.base_width * 4

    @property
    def levels(self) -> int:
        return len(self.channel_mults)

    def validate(self) -> None:
        for fname, v in asdict(self).items():
            if isinstance(v, int) and v <= 0:
                raise ValidationError(f"ModelSpec: {fname} must be positive, got {v}")
        if any(m <= 0 for m in self.channel_mults):
            raise ValidationError("ModelSpec: channel_mults must be positive")
        for lvl in self.attn_levels:
            if not (0 <= lvl < self.levels):
                raise ValidationError(
                    f"ModelSpec: attention level {lvl} outside [0, {self.levels})")
        for w in self.widths:
            if w % self.norm_groups != 0:
                raise ValidationError(
                    f"ModelSpec: width {w} not divisible by norm_groups {self.norm_groups}")
            if w % self.num_heads != 0:
                raise ValidationError(
                    f"ModelSpec: width {w} not divisible by num_heads {self.num_heads}")
        if self.base_width % 2 != 0:
            raise ValidationError("ModelSpec: base_width must be even (sinusoidal embedding)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_mults"] = list(self.channel_mults)
        d["attn_levels"] = list(self.attn_levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["channel_mults"] = tuple(d["channel_mults"])
        d["attn_levels"] = tuple(d["attn_levels"])
        spec = cls(**d)
        spec.validate()
        return spec


@dataclass
class VideoModeFlags:
    """Runtime switches for the inflated model's temporal machinery."""
    first_frame_attn: bool = True
    temporal_conv: bool = True
    temporal_attn: bool = True
    kernel_mode: str = "shifted"    # shifted | centered | strict_two

    @classmethod
    def per_frame(cls) -> "VideoModeFlags":
        """Everything temporal off: the inflated model acts frame-by-frame."""
        return cls(first_frame_attn=False, temporal_conv=False, temporal_attn=False)
