"""Evaluation metrics.

Frame consistency and diversity use a fixed pooled-pixel embedding (a
6x6 average-pooled RGB frame, mean-centered and flattened) instead of a
learned encoder, keeping the artifact self-contained. Motion accuracy
scores centroid/size trajectories extracted by color-distance
segmentation against each motion kind's signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

EMBED_POOL = 6
FG_COLOR_DIST = 0.3          # in [-1, 1] RGB space, vs median border color
MOVE_EPS = 0.25              # px per transition for slide kinds
SIZE_EPS = 0.0               # size monotonicity threshold for grow/shrink
BLINK_EPS = 0.01             # brightness alternation deadband
MISSING_FG_LIMIT = 0.25      # fraction of frames allowed to lack a foreground


@dataclass
class EvalReport:
    consistency: float
    diversity: float
    motion_accuracy: float
    per_video: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "consistency": self.consistency,
            "diversity": self.diversity,
            "motion_accuracy": self.motion_accuracy,
            "per_video": self.per_video,
            "config": self.config,
        }


def frame_embedding(frame: np.ndarray) -> np.ndarray:
    """Flattened 6x6 average-pooled RGB frame, mean-centered."""
    c, h, w = frame.shape
    if h < EMBED_POOL or w < EMBED_POOL:
        raise ValidationError(f"frame too small to embed: {frame.shape}")
    ph, pw = h // EMBED_POOL, w // EMBED_POOL
    pooled = frame[:, :ph * EMBED_POOL, :pw * EMBED_POOL]
    pooled = pooled.reshape(c, EMBED_POOL, ph, EMBED_POOL, pw).mean(axis=(2, 4))
    v = pooled.reshape(-1).astype(np.float64)
    return v - v.mean()


def frame_consistency(video: np.ndarray) -> float:
    """Mean cosine similarity of frame embeddings over all unordered pairs."""
    video = np.asarray(video)
    if video.shape[0] < 2:
        raise ValidationError("frame_consistency: need at least 2 frames")
    embs = [frame_embedding(f) for f in video]
    sims = []
    skipped = 0
    for i in range(len(embs)):
        for j in range(i + 1, len(embs)):
            na, nb = np.linalg.norm(embs[i]), np.linalg.norm(embs[j])
            if na == 0.0 or nb == 0.0:
                skipped += 1
                continue
            sims.append(float(embs[i] @ embs[j] / (na * nb)))
    if not sims:
        raise ValidationError(
            f"frame_consistency: all {skipped} pairs had zero-norm embeddings")
    return float(np.mean(sims))


def diversity(videos: list) -> float:
    """Mean pairwise cosine distance of per-video embeddings.

    Higher means more diverse. (The source convention for this metric is
    ambiguous about its direction; we report raw cosine distance and say
    so explicitly wherever it surfaces.)
    """
    if len(videos) < 2:
        raise ValidationError("diversity: need at least 2 videos")
    embs = []
    for v in videos:
        v = np.asarray(v)
        embs.append(np.mean([frame_embedding(f) for f in v], axis=0))
    dists = []
    skipped = 0
    for i in range(len(embs)):
        for j in range(i + 1, len(embs)):
            na, nb = np.linalg.norm(embs[i]), np.linalg.norm(embs[j])
            if na == 0.0 or nb == 0.0:
                skipped += 1
                continue
            dists.append(1.0 - float(embs[i] @ embs[j] / (na * nb)))
    if not dists:
        raise ValidationError(
            f"diversity: all {skipped} pairs had zero-norm embeddings")
    return float(np.mean(dists))


def extract_foreground(frame: np.ndarray) -> tuple[np.ndarray, float]:
    """Foreground mask by color distance against the median border color."""
    frame = np.asarray(frame)
    border = np.concatenate([
        frame[:, 0, :], frame[:, -1, :], frame[:, :, 0], frame[:, :, -1]], axis=1)
    bg = np.median(border, axis=1)
    dist = np.sqrt(((frame - bg[:, None, None]) ** 2).sum(axis=0))
    mask = dist > FG_COLOR_DIST
    return mask, float(mask.sum())


def track_foreground(video: np.ndarray):
    """Per-frame (cx, cy, size, brightness, present) from segmentation."""
    rows = []
    for frame in np.asarray(video):
        mask, area = extract_foreground(frame)
        if area < 1.0:
            rows.append((np.nan, np.nan, 0.0, np.nan, False))
            continue
        ys, xs = np.nonzero(mask)
        bright = float(frame[:, mask].mean())
        rows.append((float(xs.mean() + 0.5), float(ys.mean() + 0.5),
                     float(np.sqrt(area)), bright, True))
    return rows


def motion_accuracy(video: np.ndarray, kind: str) -> tuple[float, dict]:
    """Fraction of frame transitions consistent with the kind's signature.

    Returns (score, diagnostics). Videos whose foreground is missing in
    more than a quarter of the frames score 0 with a flag rather than
    raising.
    """
    video = np.asarray(video)
    if video.shape[0] < 2:
        raise ValidationError("motion_accuracy: need at least 2 frames")
    track = track_foreground(video)
    present = [r[4] for r in track]
    missing = 1.0 - float(np.mean(present))
    diag = {"missing_fraction": missing, "track": [r[:4] for r in track]}
    if missing > MISSING_FG_LIMIT:
        diag["no_foreground"] = True
        return 0.0, diag

    xs = np.array([r[0] for r in track])
    ys = np.array([r[1] for r in track])
    sz = np.array([r[2] for r in track])
    br = np.array([r[3] for r in track])
    ok = np.array(present)
    pair = ok[:-1] & ok[1:]
    n = int(pair.sum())
    if n == 0:
        diag["no_foreground"] = True
        return 0.0, diag

    dx, dy, ds, db = (np.diff(a) for a in (xs, ys, sz, br))
    if kind == "slide_right":
        hits = (dx > MOVE_EPS) & pair
        score = hits.sum() / n
    elif kind == "slide_down":
        hits = (dy > MOVE_EPS) & pair
        score = hits.sum() / n
    elif kind == "grow":
        score = ((ds > SIZE_EPS) & pair).sum() / n
    elif kind == "shrink":
        score = ((ds < -SIZE_EPS) & pair).sum() / n
    elif kind == "bounce":
        # best single down-then-up split of the vertical trajectory
        best = 0
        for split in range(1, len(dy)):
            good = (((dy[:split] > MOVE_EPS) & pair[:split]).sum()
                    + ((dy[split:] < -MOVE_EPS) & pair[split:]).sum())
            best = max(best, good)
        score = best / n
    elif kind == "blink":
        # brightness deltas must alternate sign between adjacent transitions
        flips = 0
        count = 0
        for j in range(len(db) - 1):
            if pair[j] and pair[j + 1]:
                count += 1
                if db[j] * db[j + 1] < -BLINK_EPS ** 2:
                    flips += 1
        score = flips / count if count else 0.0
    else:
        raise ValidationError(f"motion_accuracy: unknown kind {kind!r}")
    return float(score), diag


def evaluate(videos: list, kind: str, config: dict | None = None) -> EvalReport:
    """Full report over a batch of generated videos."""
    if not videos:
        raise ValidationError("evaluate: no videos")
    per = []
    for v in videos:
        acc, diag = motion_accuracy(v, kind)
        per.append({
            "consistency": frame_consistency(v),
            "motion_accuracy": acc,
            "missing_fraction": diag["missing_fraction"],
        })
    div = diversity(videos) if len(videos) > 1 else 0.0
    report = EvalReport(
        consistency=float(np.mean([p["consistency"] for p in per])),
        diversity=div,
        motion_accuracy=float(np.mean([p["motion_accuracy"] for p in per])),
        per_video=per,
        config=dict(config or {}),
    )
    for k in ("consistency", "diversity", "motion_accuracy"):
        if not np.isfinite(getattr(report, k)):
            raise ValidationError(f"evaluate: non-finite {k}")
    return report


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 2.0) -> float:
    """Peak signal-to-noise ratio in dB for [-1, 1] media."""
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
