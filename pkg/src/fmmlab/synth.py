"""Synthetic video datasets for the desk-scale benchmark.

`moving_square` clips show a bright square translating one pixel per frame
in one of four directions over a static textured background; the square's
intensity ramps up along its motion axis, so the direction survives the
encoder's spatial/temporal average pooling. Motion is confined to a
contiguous frame window (outside it the square is absent unless
`persist=True`, in which case it is present but motionless), which gives
flow-based frame selection a real signal. Captions name the direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .surrogate import TokenSeq
from .videotensor import Video

TOY_TOKENS = [
    "<bos>", "<eos>",
    "a", "square", "moves",
    "right", "left", "up", "down",
    "still", "which", "way", "stays",
    "6", "9", "fuzz",
]

_WORD_ID = {w: i for i, w in enumerate(TOY_TOKENS)}

DIRECTIONS = ("right", "left", "up", "down")

# canonical question prompt used for training and attacks
TOY_PROMPT = TokenSeq((_WORD_ID["which"], _WORD_ID["way"]))


def tokens_of(text: str) -> TokenSeq:
    """Whitespace-tokenized TokenSeq over the toy table."""
    return TokenSeq(tuple(_WORD_ID[w] for w in text.split()))


@dataclass(frozen=True)
class VideoDims:
    t: int = 8
    c: int = 1
    h: int = 16
    w: int = 16

    def validate(self) -> "VideoDims":
        if self.t < 2 or self.c not in (1, 3) or self.h < 8 or self.w < 8:
            raise ValueError(f"invalid video dims: {self}")
        return self


BACKGROUND_AMPLITUDE = 0.04


def _background(dims: VideoDims, rng) -> np.ndarray:
    tex = gaussian_filter(rng.uniform(size=(dims.h, dims.w)), 1.0)
    lo, hi = tex.min(), tex.max()
    tex = BACKGROUND_AMPLITUDE * (tex - lo) / max(hi - lo, 1e-9)
    return tex


# mean brightness per direction; average pooling preserves first-order patch
# statistics, so this is the signal a GAP encoder can read reliably
_BRIGHTNESS = {"right": 0.825, "left": 0.645, "down": 0.465, "up": 0.285}


def _square_patch(side: int, direction: str) -> np.ndarray:
    """Square with striped texture; brightness level encodes the direction.

    The encoder pools away absolute position and frame order, so direction
    must live in per-frame local statistics: each direction gets a distinct
    brightness band, and the stripes (perpendicular to the motion axis,
    sawtooth rising toward the motion direction) give the flow estimator
    strong oriented texture to track.
    """
    if direction not in _BRIGHTNESS:
        raise ValueError(f"unknown direction {direction!r}")
    saw = (_BRIGHTNESS[direction] - 0.175) + 0.35 * ((np.arange(side) % 3) / 2.0)
    if direction == "left":
        saw = saw[::-1]
    if direction in ("right", "left"):
        patch = np.tile(saw, (side, 1))
    else:
        if direction == "up":
            saw = saw[::-1]
        patch = np.tile(saw[:, None], (1, side))
    return patch


def _paste(frame: np.ndarray, patch: np.ndarray, top: int, left: int) -> None:
    side = patch.shape[0]
    frame[top : top + side, left : left + side] = patch


def make_moving_square(dims: VideoDims, direction: str, rng,
                       window: tuple[int, int] | None = None,
                       persist: bool = False, side: int | None = None) -> Video:
    """One clip; `window` = (first_moving_transition, n_moving_transitions)."""
    dims.validate()
    # the patch must dominate the frame: pooling dilutes its statistics by
    # its window-coverage fraction
    side = side if side is not None else max(5, (5 * min(dims.h, dims.w)) // 8)
    n_trans = dims.t - 1
    if window is None:
        wlen = max(2, n_trans // 2)
        w0 = int(rng.integers(0, n_trans - wlen + 1))
        window = (w0, wlen)
    w0, wlen = window
    if not (0 <= w0 and w0 + wlen <= n_trans and wlen >= 1):
        raise ValueError(f"motion window {window} out of range for T={dims.t}")

    step = {"right": (0, 1), "left": (0, -1), "down": (1, 0), "up": (-1, 0)}[direction]
    # trajectory: position advances one pixel per moving transition
    max_top = dims.h - side
    max_left = dims.w - side
    travel = wlen
    top = int(rng.integers(max(0, -step[0] * travel), max_top - max(0, step[0] * travel) + 1))
    left = int(rng.integers(max(0, -step[1] * travel), max_left - max(0, step[1] * travel) + 1))

    patch = _square_patch(side, direction)
    bg = _background(dims, rng)
    gray = np.empty((dims.t, dims.h, dims.w))
    pos = (top, left)
    moved = 0
    for f in range(dims.t):
        frame = bg.copy()
        visible = persist or (w0 <= f <= w0 + wlen)
        if visible:
            _paste(frame, patch, pos[0], pos[1])
        gray[f] = frame
        if f < n_trans and w0 <= f < w0 + wlen:
            pos = (pos[0] + step[0], pos[1] + step[1])
            moved += 1
    frames = np.repeat(gray[:, None, :, :], dims.c, axis=1)
    return Video(np.clip(frames, 0.0, 1.0))


def make_static(dims: VideoDims, rng, with_square: bool = False) -> Video:
    """Motionless clip: textured background, optionally a parked square."""
    dims.validate()
    bg = _background(dims, rng)
    if with_square:
        side = max(4, min(dims.h, dims.w) // 3)
        patch = _square_patch(side, "right")
        top = int(rng.integers(0, dims.h - side + 1))
        left = int(rng.integers(0, dims.w - side + 1))
        _paste(bg, patch, top, left)
    gray = np.repeat(bg[None, :, :], dims.t, axis=0)
    frames = np.repeat(gray[:, None, :, :], dims.c, axis=1)
    return Video(np.clip(frames, 0.0, 1.0))


def gen_synthetic_dataset(kind: str, n: int, dims: VideoDims, seed: int,
                          persist: bool = False) -> list[tuple[Video, TokenSeq]]:
    """Deterministic (Video, caption) pairs: moving_square, static, or mixed."""
    dims.validate()
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    pairs: list[tuple[Video, TokenSeq]] = []
    for i in range(n):
        if kind == "moving_square" or (kind == "mixed" and i % 2 == 0):
            direction = DIRECTIONS[i % 4]  # balanced classes
            video = make_moving_square(dims, direction, rng, persist=persist)
            caption = tokens_of(direction)
        elif kind == "static" or kind == "mixed":
            video = make_static(dims, rng, with_square=bool(rng.integers(0, 2)))
            caption = tokens_of("still")
        else:
            raise ValueError(f"unknown dataset kind {kind!r}")
        pairs.append((video, caption))
    return pairs
