"""Post-processing that pulls later frames toward the first frame's look.

Both passes leave frame 1 untouched. AdaIN re-matches per-channel mean
and standard deviation; histogram matching is classic per-channel CDF
matching over 256 uniform bins spanning [-1, 1].
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

ADAIN_EPS = 1e-6
HIST_BINS = 256


def adain_latent(frames: np.ndarray) -> np.ndarray:
    """Rescale each frame's channels to frame 1's mean/std."""
    frames = np.asarray(frames)
    if frames.ndim != 4:
        raise ValidationError(f"adain_latent: expected (l, c, h, w), got {frames.shape}")
    out = frames.copy()
    ref_mu = frames[0].mean(axis=(1, 2), keepdims=True)
    ref_sd = frames[0].std(axis=(1, 2), keepdims=True)
    for i in range(1, frames.shape[0]):
        mu = frames[i].mean(axis=(1, 2), keepdims=True)
        sd = frames[i].std(axis=(1, 2), keepdims=True)
        out[i] = (frames[i] - mu) / (sd + ADAIN_EPS) * ref_sd + ref_mu
    return out


def _bin_index(x: np.ndarray) -> np.ndarray:
    idx = np.floor((x + 1.0) * 0.5 * HIST_BINS).astype(np.int64)
    return np.clip(idx, 0, HIST_BINS - 1)


def _cdf(idx: np.ndarray) -> np.ndarray:
    counts = np.bincount(idx.reshape(-1), minlength=HIST_BINS)
    return np.cumsum(counts) / idx.size


def histogram_match(frames: np.ndarray) -> np.ndarray:
    """CDF-match each later frame's channels to frame 1's histogram.

    The per-channel mapping is monotone non-decreasing and quantizes to
    bin centers, so matching a frame to itself moves no value by more
    than one bin width.
    """
    frames = np.asarray(frames)
    if frames.ndim != 4:
        raise ValidationError(f"histogram_match: expected (l, c, h, w), got {frames.shape}")
    centers = (np.arange(HIST_BINS, dtype=np.float64) + 0.5) / HIST_BINS * 2.0 - 1.0
    out = frames.copy()
    for c in range(frames.shape[1]):
        ref_cdf = _cdf(_bin_index(frames[0, c]))
        for i in range(1, frames.shape[0]):
            idx = _bin_index(frames[i, c])
            src_cdf = _cdf(idx)
            mapping = np.searchsorted(ref_cdf, src_cdf, side="left")
            mapping = np.minimum(mapping, HIST_BINS - 1)
            out[i, c] = centers[mapping[idx]].astype(frames.dtype)
    return out
