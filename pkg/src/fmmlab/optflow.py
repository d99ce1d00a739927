"""Dense optical flow between adjacent frames and per-frame motion scores.

A classical variational (Horn-Schunck) estimator: fixed-point iteration of
the coupled update with a smoothness weight, 3-point central spatial
gradients on the mean of the two frames, and the standard 1/12-1/6 weighted
neighborhood average. Deterministic and dependency-free; the temporal mask
only needs a motion *ranking*, not state-of-the-art flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

# ITU-R BT.601 luma weights for RGB -> grayscale
_LUMA = np.array([0.299, 0.587, 0.114])

_AVG_KERNEL = np.array(
    [
        [1 / 12, 1 / 6, 1 / 12],
        [1 / 6, 0.0, 1 / 6],
        [1 / 12, 1 / 6, 1 / 12],
    ]
)


@dataclass(frozen=True)
class FlowParams:
    """Smoothness weight and iteration count of the fixed-point solver."""

    alpha: float = 10.0
    iters: int = 100


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement (u horizontal, v vertical), pixels/frame."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.shape != v.shape or u.ndim != 2:
            raise ValueError(f"u/v must be matching 2-D fields, got {u.shape} and {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("flow field contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class FlowScores:
    """One normalized mean-flow-magnitude score per frame."""

    scores: tuple[float, ...]

    def __post_init__(self):
        scores = tuple(float(s) for s in self.scores)
        if any(not math.isfinite(s) or s < 0 for s in scores):
            raise ValueError("flow scores must be finite and non-negative")
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.scores)


def estimate_flow(a: np.ndarray, b: np.ndarray, params: FlowParams = FlowParams()) -> FlowField:
    """Horn-Schunck flow from frame `a` to frame `b` (H x W grayscale in [0,1])."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"frames must share an HxW shape, got {a.shape} and {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("frames contain non-finite values")

    # The data/smoothness balance for alpha ~ 10 assumes conventional 8-bit
    # intensity scale; inputs are [0,1], so rescale (flow units are unaffected).
    avg = 0.5 * (a + b) * 255.0
    ey, ex = np.gradient(avg)  # 3-point central interior, one-sided at borders
    et = (b - a) * 255.0

    u = np.zeros_like(a)
    v = np.zeros_like(a)
    denom = params.alpha**2 + ex**2 + ey**2
    for _ in range(params.iters):
        u_bar = convolve(u, _AVG_KERNEL, mode="reflect")
        v_bar = convolve(v, _AVG_KERNEL, mode="reflect")
        correction = (ex * u_bar + ey * v_bar + et) / denom
        u = u_bar - ex * correction
        v = v_bar - ey * correction
    return FlowField(u, v)


def flow_magnitude(f: FlowField) -> float:
    """Mean over pixels of sqrt(u^2 + v^2)."""
    return float(np.sqrt(f.u**2 + f.v**2).mean())


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """(C, H, W) -> (H, W) via BT.601 luma (identity on single-channel)."""
    if frame.shape[0] == 1:
        return frame[0]
    return np.tensordot(_LUMA, frame, axes=([0], [0]))


def per_frame_flow_scores(x, params: FlowParams = FlowParams()) -> FlowScores:
    """Max-normalized per-frame motion scores from adjacent-frame flows.

    Each of the T-1 transitions yields one mean magnitude; frame i scores the
    average of the magnitudes of its incoming and outgoing transitions (the
    first and last frame see only one transition). Scores are divided by the
    maximum unless all are zero, so any moving video has a top score of 1.0.
    """
    frames = getattr(x, "frames", x)
    t = frames.shape[0]
    if t < 2:
        raise ValueError(f"need at least 2 frames, got {t}")
    gray = [to_grayscale(frames[i]) for i in range(t)]
    mags = [
        flow_magnitude(estimate_flow(gray[i], gray[i + 1], params)) for i in range(t - 1)
    ]
    scores = [0.0] * t
    scores[0] = mags[0]
    scores[-1] = mags[-1]
    for i in range(1, t - 1):
        scores[i] = 0.5 * (mags[i - 1] + mags[i])
    top = max(scores)
    if top > 0.0:
        scores = [s / top for s in scores]
    return FlowScores(tuple(scores))


def flow_to_color(f: FlowField) -> np.ndarray:
    """Direction-as-hue, magnitude-as-brightness RGB rendering, (H, W, 3) in [0,1]."""
    mag = np.sqrt(f.u**2 + f.v**2)
    top = mag.max()
    value = mag / top if top > 0 else np.zeros_like(mag)
    hue = (np.arctan2(f.v, f.u) / (2.0 * np.pi)) % 1.0

    # vectorized HSV->RGB with saturation fixed at 1
    h6 = hue * 6.0
    sector = np.floor(h6).astype(int) % 6
    frac = h6 - np.floor(h6)
    p = np.zeros_like(value)
    q = value * (1.0 - frac)
    t = value * frac
    rgb = np.zeros(mag.shape + (3,))
    lut = [
        (value, t, p),
        (q, value, p),
        (p, value, t),
        (p, q, value),
        (t, p, value),
        (value, p, q),
    ]
    for s, (r, g, b) in enumerate(lut):
        pick = sector == s
        rgb[pick, 0] = r[pick]
        rgb[pick, 1] = g[pick]
        rgb[pick, 2] = b[pick]
    return rgb
