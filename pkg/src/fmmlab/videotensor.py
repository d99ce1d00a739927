"""Video/perturbation tensor core: l2,1 machinery, baselines, file I/O.

Videos are (T, C, H, W) float64 arrays in [0, 1]. All pixel budgets
(delta_max, step sizes, delta_bar) are expressed in 8-bit units and divided
by 255 internally, matching the reporting convention of the attack tables.

Two on-disk formats are supported:

* ``.vtensor`` -- magic ``FMMV``, u16 LE version (=1), four u32 LE dims
  (T, C, H, W), then T*C*H*W IEEE-754 f32 LE values, frame-major, row-major
  within a frame. The payload is f32, so a round trip is bit-exact for any
  f32-representable tensor (in particular anything previously loaded from
  disk); freshly built f64 tensors are rounded to f32 once.
* directories of binary pixmaps -- P6 (C=3) or P5 (C=1), maxval 255, frames
  ordered lexicographically by filename. Round-trip error <= 1/255 per pixel.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

VTENSOR_MAGIC = b"FMMV"
VTENSOR_VERSION = 1

# Frames whose Euclidean norm falls below this are treated as zero by the
# l2,1 subgradient (avoids division blow-up at the non-smooth point).
EPS_NORM = 1e-12

_PIXMAP_SUFFIXES = (".ppm", ".pgm", ".pnm")


class VideoFormatError(ValueError):
    """Malformed or unsupported video file content."""


def _check_frames(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 4:
        raise ValueError(f"expected (T, C, H, W) tensor, got shape {frames.shape}")
    t, c, h, w = frames.shape
    if t < 2:
        raise ValueError(f"fewer than 2 frames (T={t})")
    if c not in (1, 3):
        raise ValueError(f"channel count must be 1 or 3, got {c}")
    if h < 8 or w < 8:
        raise ValueError(f"frames must be at least 8x8, got {h}x{w}")
    if not np.all(np.isfinite(frames)):
        raise ValueError("video contains non-finite values")
    if frames.min() < 0.0 or frames.max() > 1.0:
        raise ValueError("video values must lie in [0, 1]")
    return frames


@dataclass(frozen=True)
class Video:
    """Clean or adversarial video clip, (T, C, H, W) reals in [0, 1]."""

    frames: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frames", _check_frames(self.frames))

    @property
    def t_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape


@dataclass(frozen=True)
class Perturbation:
    """Additive perturbation paired with a video, budget in 8-bit units."""

    delta: np.ndarray
    delta_max: float

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=np.float64)
        if delta.ndim != 4:
            raise ValueError(f"expected (T, C, H, W) tensor, got shape {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise ValueError("perturbation contains non-finite values")
        if self.delta_max <= 0:
            raise ValueError("delta_max must be positive")
        bound = self.delta_max / 255.0
        # tiny slack for float round-off in callers that project exactly to the box
        if np.abs(delta).max() > bound + 1e-12:
            raise ValueError(
                f"perturbation exceeds budget: max |delta| = {np.abs(delta).max():.6g} "
                f"> {bound:.6g}"
            )
        object.__setattr__(self, "delta", delta)


@dataclass(frozen=True)
class BaselineKind:
    """Spatial baseline: frames replaced/perturbed without optimization."""

    kind: str
    magnitude: float = 8.0

    _KINDS = ("random", "black", "white")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}, expected one of {self._KINDS}")


# ---------------------------------------------------------------------------
# l2,1 norm machinery


def l21_norm(p: Perturbation) -> float:
    """Sum over frames of the per-frame Euclidean norm of delta."""
    flat = p.delta.reshape(p.delta.shape[0], -1)
    return float(np.sqrt((flat * flat).sum(axis=1)).sum())


def l21_subgradient(p: Perturbation) -> np.ndarray:
    """Per-frame delta_i / ||delta_i||_2, zero where the frame norm <= EPS_NORM."""
    flat = p.delta.reshape(p.delta.shape[0], -1)
    norms = np.sqrt((flat * flat).sum(axis=1))
    out = np.zeros_like(p.delta)
    for i, n in enumerate(norms):
        if n > EPS_NORM:
            out[i] = p.delta[i] / n
    return out


# ---------------------------------------------------------------------------
# Perturbation application and measurement


def _mask_bools(mask, t: int) -> np.ndarray:
    """Accept a TemporalMask or any boolean sequence of length T."""
    selected = getattr(mask, "selected", mask)
    arr = np.asarray(selected, dtype=bool)
    if arr.shape != (t,):
        raise ValueError(f"mask length {arr.shape} does not match T={t}")
    return arr


def apply_perturbation(x: Video, p: Perturbation, m) -> Video:
    """clamp(x + m*delta, 0, 1); unmasked frames stay bit-identical to x."""
    if p.delta.shape != x.frames.shape:
        raise ValueError(f"shape mismatch: video {x.frames.shape} vs delta {p.delta.shape}")
    sel = _mask_bools(m, x.t_frames)
    out = x.frames.copy()
    out[sel] = np.clip(x.frames[sel] + p.delta[sel], 0.0, 1.0)
    return Video(out)


def mean_abs_perturbation(x: Video, x_adv: Video, m) -> float:
    """Mean |x_adv - x| * 255 over pixels of masked frames (0 if mask empty)."""
    if x_adv.frames.shape != x.frames.shape:
        raise ValueError(f"shape mismatch: {x.frames.shape} vs {x_adv.frames.shape}")
    sel = _mask_bools(m, x.t_frames)
    if not sel.any():
        return 0.0
    diff = np.abs(x_adv.frames[sel] - x.frames[sel])
    return float(diff.mean() * 255.0)


def make_baseline(kind: BaselineKind, x: Video, seed: int) -> Video:
    """Spatial baseline videos: black (all 0), white (all 1), or +-mag random.

    The random baseline flips each pixel by +-magnitude/255 (equiprobable
    signs, seeded), then clamps; its mean modified-pixel value therefore
    matches the stated magnitude away from the clamp boundaries.
    """
    if kind.kind == "black":
        return Video(np.zeros_like(x.frames))
    if kind.kind == "white":
        return Video(np.ones_like(x.frames))
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=x.frames.shape).astype(np.float64) * 2.0 - 1.0
    u = signs * (kind.magnitude / 255.0)
    return Video(np.clip(x.frames + u, 0.0, 1.0))


# ---------------------------------------------------------------------------
# File I/O


def _read_pnm_tokens(data: bytes, n_tokens: int) -> tuple[list[bytes], int]:
    """Read whitespace-separated header tokens, skipping '#' comments.

    Returns the tokens and the offset of the first payload byte (one
    whitespace char after the last token, per the PNM convention).
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n_tokens:
        if i >= len(data):
            raise VideoFormatError("truncated pixmap header")
        ch = data[i : i + 1]
        if ch.isspace():
            i += 1
        elif ch == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i + 1


def _load_pixmap(path: str) -> np.ndarray:
    """Load one binary P5/P6 pixmap as (C, H, W) float64 in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P5", b"P6"):
        raise VideoFormatError(f"{path}: not a binary P5/P6 pixmap")
    channels = 3 if data[:2] == b"P6" else 1
    tokens, offset = _read_pnm_tokens(data, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise VideoFormatError(f"{path}: malformed header") from exc
    if maxval != 255:
        raise VideoFormatError(f"{path}: maxval must be 255, got {maxval}")
    expected = width * height * channels
    payload = data[offset : offset + expected]
    if len(payload) != expected:
        raise VideoFormatError(f"{path}: truncated pixel data")
    arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    arr = arr.reshape(height, width, channels)
    return np.moveaxis(arr, 2, 0)


def _save_pixmap(frame: np.ndarray, path: str) -> None:
    c, h, w = frame.shape
    magic = b"P6" if c == 3 else b"P5"
    pixels = np.moveaxis(frame, 0, 2)
    data = np.clip(np.round(pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())


def _load_vtensor(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 22 or data[:4] != VTENSOR_MAGIC:
        raise VideoFormatError(f"{path}: missing FMMV magic")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VTENSOR_VERSION:
        raise VideoFormatError(f"{path}: unsupported vtensor version {version}")
    t, c, h, w = struct.unpack_from("<IIII", data, 6)
    count = t * c * h * w
    payload = data[22:]
    if len(payload) != count * 4:
        raise VideoFormatError(
            f"{path}: payload holds {len(payload) // 4} values, header promises {count}"
        )
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return arr.reshape(t, c, h, w)


def _save_vtensor(frames: np.ndarray, path: str) -> None:
    t, c, h, w = frames.shape
    with open(path, "wb") as fh:
        fh.write(VTENSOR_MAGIC)
        fh.write(struct.pack("<H", VTENSOR_VERSION))
        fh.write(struct.pack("<IIII", t, c, h, w))
        fh.write(frames.astype("<f4").tobytes())


def load_video(path: str) -> Video:
    """Load a video from a `.vtensor` file or a directory of pixmap frames."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such video path: {path}")
    if os.path.isdir(path):
        names = sorted(
            n for n in os.listdir(path) if n.lower().endswith(_PIXMAP_SUFFIXES)
        )
        if len(names) < 2:
            raise VideoFormatError(f"{path}: fewer than 2 frames")
        frames = [_load_pixmap(os.path.join(path, n)) for n in names]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise VideoFormatError(f"{path}: inconsistent frame dimensions {sorted(shapes)}")
        return Video(np.stack(frames))
    return Video(_load_vtensor(path))


def save_video(v: Video, path: str) -> None:
    """Save to `.vtensor` (path suffix) or as a pixmap frame directory."""
    if path.endswith(".vtensor"):
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        _save_vtensor(v.frames, path)
        return
    os.makedirs(path, exist_ok=True)
    suffix = ".ppm" if v.frames.shape[1] == 3 else ".pgm"
    for i, frame in enumerate(v.frames):
        _save_pixmap(frame, os.path.join(path, f"frame_{i:05d}{suffix}"))
