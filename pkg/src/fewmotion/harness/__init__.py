from .metrics import (EvalReport, frame_consistency, diversity, motion_accuracy,
                      evaluate, psnr, frame_embedding, extract_foreground,
                      track_foreground)
from .media import export_media, save_gif, save_strip
from .ablate import ABLATION_MODES, run_ablation, mode_settings
from .gradsuite import composite_reports, full_suite
from .runrecord import write_record, versions
from .cli import main

__all__ = [
    "EvalReport", "frame_consistency", "diversity", "motion_accuracy",
    "evaluate", "psnr", "frame_embedding", "extract_foreground",
    "track_foreground", "export_media", "save_gif", "save_strip",
    "ABLATION_MODES", "run_ablation", "mode_settings",
    "composite_reports", "full_suite", "write_record", "versions", "main",
]
