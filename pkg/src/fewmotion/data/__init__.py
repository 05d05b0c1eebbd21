from .vocab import (VOCAB, VOCAB_SIZE, MAX_TOKENS, SHAPES, COLORS, BACKGROUNDS,
                    MOTIONS, tokenize, untokenize, unconditional, token_id)
from .render import render_frame, shape_alpha, alpha_stats, PALETTE
from .motion import (MotionKind, MOTION_KINDS, MotionSetManifest, ClipEntry,
                     gen_motion_set, gen_still_set, gen_first_frames,
                     render_clip, content_split, trajectory)
from .io import (load_clip, save_clip, load_image, save_image, to_uint8,
                 from_uint8, frame_name)

__all__ = [
    "VOCAB", "VOCAB_SIZE", "MAX_TOKENS", "SHAPES", "COLORS", "BACKGROUNDS",
    "MOTIONS", "tokenize", "untokenize", "unconditional", "token_id",
    "render_frame", "shape_alpha", "alpha_stats", "PALETTE",
    "MotionKind", "MOTION_KINDS", "MotionSetManifest", "ClipEntry",
    "gen_motion_set", "gen_still_set", "gen_first_frames", "render_clip",
    "content_split", "trajectory",
    "load_clip", "save_clip", "load_image", "save_image", "to_uint8",
    "from_uint8", "frame_name",
]
