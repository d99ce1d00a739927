"""Differentiable white-box video-captioning surrogate.

A two-stage captioner: a frame encoder (single valid-padding convolution,
ReLU, spatial global average pool, temporal mean over frames) feeding a
projected video feature into a tanh recurrent cell that consumes the prompt
embeddings, then the feature, then greedily decodes tokens. Reverse-mode
gradients w.r.t. input pixels are written by hand in float64 and verified
against central finite differences (`gradcheck`).

The decoder hidden state exposed to feature-space losses is the mean of the
recurrent hidden vectors over emitted positions, with the emitted token
sequence held fixed during differentiation (the discrete greedy choice is
frozen; gradients flow through the recurrence only).

Token ids 0 and 1 are reserved for BOS and EOS. Weights serialize to a
binary format: magic ``FMMM``, u16 LE version (=1), six u32 LE dims
(k, C, d, d_model, V, L), then f32 LE parameter blocks in field order
(conv kernel, conv bias, projector, token embeddings, recurrent input
weight, recurrent hidden weight, recurrent bias, output head). Token tables
are UTF-8 text, one token string per line, line number = token id.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BOS = 0
EOS = 1

MODEL_MAGIC = b"FMMM"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ModelDims:
    k: int = 3
    c: int = 1
    d: int = 8
    d_model: int = 16
    vocab: int = 16
    max_len: int = 8

    def validate(self) -> "ModelDims":
        if self.k < 1 or self.c not in (1, 3) or self.d < 1 or self.d_model < 1:
            raise ValueError(f"invalid encoder dims: {self}")
        if self.vocab < 4:
            raise ValueError(f"vocabulary must hold BOS, EOS and >= 2 content tokens, got V={self.vocab}")
        if self.max_len < 1:
            raise ValueError("max output length must be >= 1")
        return self


@dataclass(frozen=True)
class TokenSeq:
    """Token id sequence; ends at the first EOS or at the decoder length cap."""

    tokens: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def content(self) -> tuple[int, ...]:
        """Tokens with BOS/EOS stripped."""
        return tuple(t for t in self.tokens if t not in (BOS, EOS))

    def render(self, table: list[str]) -> str:
        return " ".join(table[t] for t in self.content())


@dataclass(frozen=True)
class SurrogateModel:
    dims: ModelDims
    conv_w: np.ndarray  # (d, C, k, k)
    conv_b: np.ndarray  # (d,)
    proj: np.ndarray  # (d, d_model)
    emb: np.ndarray  # (V, d_model)
    w_in: np.ndarray  # (d_model, d_model)
    w_h: np.ndarray  # (d_model, d_model)
    b_rec: np.ndarray  # (d_model,)
    w_out: np.ndarray  # (d_model, V)
    seed: int = 0

    def param_blocks(self) -> tuple[np.ndarray, ...]:
        return (self.conv_w, self.conv_b, self.proj, self.emb,
                self.w_in, self.w_h, self.b_rec, self.w_out)


def init_model(seed: int, dims: ModelDims) -> SurrogateModel:
    """Seeded uniform(-0.5/sqrt(fan_in), +0.5/sqrt(fan_in)) initialization."""
    dims.validate()
    rng = np.random.default_rng(seed)

    def block(shape, fan_in):
        bound = 0.5 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    fan_conv = dims.c * dims.k * dims.k
    return SurrogateModel(
        dims=dims,
        conv_w=block((dims.d, dims.c, dims.k, dims.k), fan_conv),
        conv_b=block((dims.d,), fan_conv),
        proj=block((dims.d, dims.d_model), dims.d),
        emb=block((dims.vocab, dims.d_model), dims.d_model),
        w_in=block((dims.d_model, dims.d_model), dims.d_model),
        w_h=block((dims.d_model, dims.d_model), dims.d_model),
        b_rec=block((dims.d_model,), dims.d_model),
        w_out=block((dims.d_model, dims.vocab), dims.d_model),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Encoder


def _frames_of(x) -> np.ndarray:
    return np.asarray(getattr(x, "frames", x), dtype=np.float64)


def _im2col(frames: np.ndarray, k: int):
    """(T,C,H,W) -> (T*H'*W', C*k*k) patch matrix (copies once, feeds BLAS)."""
    t, c, h, w = frames.shape
    win = sliding_window_view(frames, (k, k), axis=(2, 3))  # (T,C,H',W',k,k)
    hp, wp = h - k + 1, w - k + 1
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(t * hp * wp, c * k * k)
    return np.ascontiguousarray(cols), (t, hp, wp)


def _encode_forward(model: SurrogateModel, frames: np.ndarray):
    """frames (T,C,H,W) -> (q (d,), cache). Valid conv, ReLU, GAP, temporal mean."""
    k = model.dims.k
    t, c, h, w = frames.shape
    if c != model.dims.c:
        raise ValueError(f"channel mismatch: video C={c}, model C={model.dims.c}")
    if h < k or w < k:
        raise ValueError(f"frame {h}x{w} smaller than kernel {k}x{k}")
    cols, (t, hp, wp) = _im2col(frames, k)
    pre = cols @ model.conv_w.reshape(model.dims.d, -1).T + model.conv_b  # (N, d)
    relu = np.maximum(pre, 0.0)
    q = relu.reshape(t, hp * wp, model.dims.d).mean(axis=1).mean(axis=0)
    pre4 = pre.reshape(t, hp, wp, model.dims.d).transpose(0, 3, 1, 2)
    return q, (frames.shape, pre4)


def _conv_pixel_grad(conv_w: np.ndarray, d_relu: np.ndarray, frame_shape) -> np.ndarray:
    """Transpose of the valid convolution: (T,d,H',W') grads -> pixel grads."""
    k = conv_w.shape[2]
    hp, wp = d_relu.shape[2], d_relu.shape[3]
    dpix = np.zeros(frame_shape)
    for i in range(k):
        for j in range(k):
            dpix[:, :, i : i + hp, j : j + wp] += np.einsum(
                "tohw,oc->tchw", d_relu, conv_w[:, :, i, j]
            )
    return dpix


def _encode_backward(model: SurrogateModel, cache, dq: np.ndarray) -> np.ndarray:
    frame_shape, pre = cache
    t = frame_shape[0]
    hp, wp = pre.shape[2], pre.shape[3]
    d_relu = (pre > 0.0) * (dq[None, :, None, None] / (t * hp * wp))
    return _conv_pixel_grad(model.conv_w, d_relu, frame_shape)


def encode_video(model: SurrogateModel, x) -> np.ndarray:
    """Video feature: per-frame conv+ReLU+spatial pool, then temporal mean."""
    q, _ = _encode_forward(model, _frames_of(x))
    return q


# ---------------------------------------------------------------------------
# Decoder


def _cell(model: SurrogateModel, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    return np.tanh(x @ model.w_in + h @ model.w_h + model.b_rec)


def _run_decoder(model: SurrogateModel, prompt_tokens, q: np.ndarray, forced=None):
    """Prompt -> projected feature -> greedy (or forced) decode.

    Returns (tokens, hidden_mean, cache); the cache carries what the
    d(hidden_mean)/dq backward pass needs.
    """
    prompt_tokens = tuple(int(t) for t in prompt_tokens)
    if not prompt_tokens:
        raise ValueError("prompt must be nonempty")
    h = np.zeros(model.dims.d_model)
    for tok in prompt_tokens:
        h = _cell(model, model.emb[tok], h)
    h_before_feature = h
    feat_in = q @ model.proj
    h = _cell(model, feat_in, h)
    h_feature = h

    steps = []  # (h_prev, h_new) per decode step; inputs are constant embeddings
    tokens: list[int] = []
    prev = BOS
    for i in range(model.dims.max_len):
        h_new = _cell(model, model.emb[prev], h)
        steps.append((h, h_new))
        logits = h_new @ model.w_out
        tok = int(forced[i]) if forced is not None else int(np.argmax(logits))
        tokens.append(tok)
        h = h_new
        if tok == EOS:
            break
        prev = tok
    hidden = np.mean([s[1] for s in steps], axis=0)
    cache = (h_before_feature, h_feature, steps)
    return tuple(tokens), hidden, cache


def _decoder_backward_to_q(model: SurrogateModel, cache, d_hidden: np.ndarray) -> np.ndarray:
    """d(hidden_mean)/dq with the emitted token sequence frozen."""
    _, h_feature, steps = cache
    n = len(steps)
    dh_carry = np.zeros(model.dims.d_model)
    for h_prev, h_new in reversed(steps):
        dh = d_hidden / n + dh_carry
        dpre = dh * (1.0 - h_new * h_new)
        dh_carry = dpre @ model.w_h.T
    # feature step: h_feature = tanh(feat_in @ w_in + h_before @ w_h + b)
    dpre = dh_carry * (1.0 - h_feature * h_feature)
    d_feat_in = dpre @ model.w_in.T
    return d_feat_in @ model.proj.T


def generate(model: SurrogateModel, prompt: TokenSeq, q: np.ndarray):
    """Greedy decode conditioned on prompt tokens and a video feature.

    Returns (TokenSeq, hidden state); deterministic, length <= max_len,
    stops after the first EOS.
    """
    tokens, hidden, _ = _run_decoder(model, prompt.tokens, np.asarray(q, dtype=np.float64))
    return TokenSeq(tokens), hidden


# ---------------------------------------------------------------------------
# Pixel-space loss gradients


@dataclass(frozen=True)
class PixelLossSpec:
    """Weighted feature-space MSE losses against fixed references.

    loss(x) = weight_video * MSE(ref_feature, q(x))
            + weight_llm   * MSE(ref_hidden, hidden(x))

    Negative weights turn minimization into distance maximization.
    """

    weight_video: float
    weight_llm: float
    ref_feature: np.ndarray
    ref_hidden: np.ndarray


@dataclass(frozen=True)
class PixelLossValue:
    value: float
    loss_video: float
    loss_llm: float
    tokens: TokenSeq
    feature: np.ndarray
    hidden: np.ndarray


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float((diff * diff).mean())


def pixel_loss(model: SurrogateModel, frames: np.ndarray, prompt_tokens, spec: PixelLossSpec,
               forced=None) -> PixelLossValue:
    """Forward-only evaluation of the spec'd loss (used by finite differences)."""
    q, _ = _encode_forward(model, frames)
    tokens, hidden, _ = _run_decoder(model, prompt_tokens, q, forced=forced)
    lv = _mse(spec.ref_feature, q)
    lh = _mse(spec.ref_hidden, hidden)
    value = spec.weight_video * lv + spec.weight_llm * lh
    return PixelLossValue(value, lv, lh, TokenSeq(tokens), q, hidden)


def pixel_loss_and_grad(model: SurrogateModel, frames: np.ndarray, prompt_tokens,
                        spec: PixelLossSpec):
    """Exact reverse-mode gradient of the spec'd loss w.r.t. every pixel.

    The adversarial token sequence is re-decoded greedily at `frames` and
    then frozen for differentiation. Returns (PixelLossValue, grad).
    """
    q, enc_cache = _encode_forward(model, frames)
    tokens, hidden, dec_cache = _run_decoder(model, prompt_tokens, q)
    lv = _mse(spec.ref_feature, q)
    lh = _mse(spec.ref_hidden, hidden)
    value = spec.weight_video * lv + spec.weight_llm * lh

    dq = spec.weight_video * 2.0 * (q - spec.ref_feature) / q.size
    d_hidden = spec.weight_llm * 2.0 * (hidden - spec.ref_hidden) / hidden.size
    dq = dq + _decoder_backward_to_q(model, dec_cache, d_hidden)
    grad = _encode_backward(model, enc_cache, dq)
    return PixelLossValue(value, lv, lh, TokenSeq(tokens), q, hidden), grad


def grad_wrt_pixels(model: SurrogateModel, x, prompt: TokenSeq, loss_spec: PixelLossSpec) -> np.ndarray:
    """Gradient of the loss functional w.r.t. the video's pixels."""
    _, grad = pixel_loss_and_grad(model, _frames_of(x), prompt.tokens, loss_spec)
    return grad


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    passed: bool
    n_checked: int


def default_gradcheck_spec(model: SurrogateModel, x, prompt: TokenSeq, seed: int = 0,
                           weight_video: float = 1.0, weight_llm: float = 1.0) -> PixelLossSpec:
    """References taken from a seeded jitter of x, so the loss is off-minimum."""
    frames = _frames_of(x)
    rng = np.random.default_rng(seed)
    ref_frames = np.clip(frames + rng.uniform(-0.1, 0.1, size=frames.shape), 0.0, 1.0)
    q_ref, _ = _encode_forward(model, ref_frames)
    _, h_ref, _ = _run_decoder(model, prompt.tokens, q_ref)
    return PixelLossSpec(weight_video, weight_llm, q_ref, h_ref)


def gradcheck(model: SurrogateModel, x, prompt: TokenSeq, tol: float,
              loss_spec: PixelLossSpec | None = None, n_samples: int = 64,
              h: float = 1e-4, seed: int = 0) -> GradCheckReport:
    """Compare the analytic pixel gradient against central finite differences.

    The token sequence decoded at the center point is frozen for both sides,
    matching the differentiation contract. Passes iff max_rel_err < tol.
    """
    frames = _frames_of(x).copy()
    if loss_spec is None:
        loss_spec = default_gradcheck_spec(model, frames, prompt, seed=seed)
    center, grad = pixel_loss_and_grad(model, frames, prompt.tokens, loss_spec)
    forced = center.tokens.tokens

    rng = np.random.default_rng(seed)
    flat_idx = rng.choice(frames.size, size=min(n_samples, frames.size), replace=False)
    max_rel = 0.0
    flat = frames.reshape(-1)
    for idx in flat_idx:
        orig = flat[idx]
        flat[idx] = orig + h
        fp = pixel_loss(model, frames, prompt.tokens, loss_spec, forced=forced).value
        flat[idx] = orig - h
        fm = pixel_loss(model, frames, prompt.tokens, loss_spec, forced=forced).value
        flat[idx] = orig
        fd = (fp - fm) / (2.0 * h)
        an = grad.reshape(-1)[idx]
        denom = max(abs(fd), abs(an))
        rel = 0.0 if denom < 1e-12 else abs(fd - an) / denom
        max_rel = max(max_rel, rel)
    return GradCheckReport(max_rel_err=max_rel, passed=max_rel < tol, n_checked=len(flat_idx))


# ---------------------------------------------------------------------------
# Text embeddings (semantic-similarity stand-in)


def text_embedding(model: SurrogateModel, t: TokenSeq) -> np.ndarray:
    """Unit-normalized mean of the token embedding rows (specials stripped).

    Bag-of-tokens by construction: permutations embed identically. An empty
    sequence returns the zero vector and emits a warning.
    """
    content = t.content()
    if not content:
        warnings.warn("text_embedding of empty token sequence; returning zero vector")
        return np.zeros(model.dims.d_model)
    vec = model.emb[list(content)].mean(axis=0)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return np.zeros(model.dims.d_model)
    return vec / norm


# ---------------------------------------------------------------------------
# Toy trainer (teacher-forced cross-entropy, plain full-batch gradient descent)


def _prepare_caption(caption: TokenSeq) -> tuple[tuple[int, ...], tuple[int, ...]]:
    content = caption.content()
    if not content:
        raise ValueError("caption with no content tokens")
    inputs = (BOS,) + content
    targets = content + (EOS,)
    return inputs, targets


def _im2col_batch(frames5: np.ndarray, k: int):
    b, t, c, h, w = frames5.shape
    win = sliding_window_view(frames5, (k, k), axis=(3, 4))  # (B,T,C,H',W',k,k)
    hp, wp = h - k + 1, w - k + 1
    cols = win.transpose(0, 1, 3, 4, 2, 5, 6).reshape(b * t * hp * wp, c * k * k)
    return np.ascontiguousarray(cols), (b, t, hp, wp)


def _encode_forward_batch(model: SurrogateModel, cols: np.ndarray, grid):
    """cols = precomputed im2col patches, grid = (B, T, H', W')."""
    b, t, hp, wp = grid
    d = model.dims.d
    pre = cols @ model.conv_w.reshape(d, -1).T + model.conv_b  # (B*T*H'*W', d)
    relu = np.maximum(pre, 0.0)
    q = relu.reshape(b, t * hp * wp, d).mean(axis=1)  # (B, d)
    return q, pre


def _caption_loss_and_param_grads(model: SurrogateModel, cols, grid, inputs, targets,
                                  prompt_tokens, want_grads=True):
    """Batched teacher-forced CE over one equal-length caption bucket.

    `cols`/`grid` come from `_im2col_batch`. Returns (summed loss over
    samples, dict of parameter gradients summed over samples); divide by the
    dataset size outside.
    """
    b = grid[0]
    n_steps = inputs.shape[1]
    q, pre = _encode_forward_batch(model, cols, grid)

    h = np.zeros((b, model.dims.d_model))
    prompt_states = []
    for tok in prompt_tokens:
        h_new = np.tanh(model.emb[tok] @ model.w_in + h @ model.w_h + model.b_rec)
        prompt_states.append((h, h_new))
        h = h_new
    feat_in = q @ model.proj
    h_before_feature = h
    h = np.tanh(feat_in @ model.w_in + h @ model.w_h + model.b_rec)
    h_feature = h

    states = []
    logits_all = []
    for step in range(n_steps):
        x = model.emb[inputs[:, step]]  # (B, d_model)
        h_new = np.tanh(x @ model.w_in + h @ model.w_h + model.b_rec)
        states.append((h, h_new))
        logits_all.append(h_new @ model.w_out)
        h = h_new

    # cross-entropy, mean over steps, summed over batch
    loss = 0.0
    probs_all = []
    for step in range(n_steps):
        logits = logits_all[step]
        shifted = logits - logits.max(axis=1, keepdims=True)
        expv = np.exp(shifted)
        probs = expv / expv.sum(axis=1, keepdims=True)
        probs_all.append(probs)
        loss += -np.log(probs[np.arange(b), targets[:, step]] + 1e-300).sum() / n_steps
    if not want_grads:
        return loss, None

    grads = {name: np.zeros_like(arr) for name, arr in (
        ("conv_w", model.conv_w), ("conv_b", model.conv_b), ("proj", model.proj),
        ("emb", model.emb), ("w_in", model.w_in), ("w_h", model.w_h),
        ("b_rec", model.b_rec), ("w_out", model.w_out))}

    dh_carry = np.zeros((b, model.dims.d_model))
    for step in reversed(range(n_steps)):
        probs = probs_all[step].copy()
        probs[np.arange(b), targets[:, step]] -= 1.0
        dlogits = probs / n_steps  # (B, V)
        h_prev, h_new = states[step]
        grads["w_out"] += h_new.T @ dlogits
        dh = dlogits @ model.w_out.T + dh_carry
        dpre = dh * (1.0 - h_new * h_new)
        x = model.emb[inputs[:, step]]
        grads["w_in"] += x.T @ dpre
        grads["w_h"] += h_prev.T @ dpre
        grads["b_rec"] += dpre.sum(axis=0)
        dx = dpre @ model.w_in.T
        np.add.at(grads["emb"], inputs[:, step], dx)
        dh_carry = dpre @ model.w_h.T

    # feature step
    dpre = dh_carry * (1.0 - h_feature * h_feature)
    grads["w_in"] += feat_in.T @ dpre
    grads["w_h"] += h_before_feature.T @ dpre
    grads["b_rec"] += dpre.sum(axis=0)
    d_feat_in = dpre @ model.w_in.T
    grads["proj"] += q.T @ d_feat_in
    dq = d_feat_in @ model.proj.T  # (B, d)
    dh_carry = dpre @ model.w_h.T

    # prompt steps
    for tok, (h_prev, h_new) in zip(reversed(prompt_tokens), reversed(prompt_states)):
        dpre = dh_carry * (1.0 - h_new * h_new)
        grads["w_in"] += np.outer(model.emb[tok], dpre.sum(axis=0))
        grads["w_h"] += h_prev.T @ dpre
        grads["b_rec"] += dpre.sum(axis=0)
        grads["emb"][tok] += (dpre @ model.w_in.T).sum(axis=0)
        dh_carry = dpre @ model.w_h.T

    # encoder
    _, t_frames, hp, wp = grid
    per_cell = t_frames * hp * wp
    d_relu = (pre > 0.0) * np.repeat(dq / per_cell, per_cell, axis=0)
    grads["conv_w"] += (d_relu.T @ cols).reshape(model.conv_w.shape)
    grads["conv_b"] += d_relu.sum(axis=0)
    return loss, grads


def _buckets(dataset, k: int):
    """Group (video, caption) pairs by caption length and video shape.

    Each bucket carries its precomputed im2col patch matrix; inputs never
    change during training, so this is built once per call site.
    """
    groups: dict[tuple, list[int]] = {}
    prepared = []
    for idx, (video, caption) in enumerate(dataset):
        frames = _frames_of(video)
        inputs, targets = _prepare_caption(caption)
        prepared.append((frames, inputs, targets))
        groups.setdefault((len(targets), frames.shape), []).append(idx)
    out = []
    for key in sorted(groups, key=str):
        idxs = groups[key]
        frames5 = np.stack([prepared[i][0] for i in idxs])
        cols, grid = _im2col_batch(frames5, k)
        inputs = np.array([prepared[i][1] for i in idxs], dtype=int)
        targets = np.array([prepared[i][2] for i in idxs], dtype=int)
        out.append((cols, grid, inputs, targets))
    return out


def caption_loss(model: SurrogateModel, dataset, prompt: TokenSeq | None = None) -> float:
    """Mean teacher-forced cross-entropy of the dataset under the model."""
    if not dataset:
        raise ValueError("empty dataset")
    prompt_tokens = prompt.tokens if prompt is not None else (BOS,)
    total = 0.0
    for cols, grid, inputs, targets in _buckets(dataset, model.dims.k):
        loss, _ = _caption_loss_and_param_grads(model, cols, grid, inputs, targets,
                                                prompt_tokens, want_grads=False)
        total += loss
    return total / len(dataset)


def train_toy(model: SurrogateModel, dataset, epochs: int, lr: float, seed: int = 0,
              prompt: TokenSeq | None = None) -> SurrogateModel:
    """Plain full-batch gradient descent on teacher-forced cross-entropy.

    Full-batch descent is deterministic, so training epoch-by-epoch composes
    exactly with a single longer run; `seed` is accepted for interface
    stability but does not influence the descent.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    prompt_tokens = prompt.tokens if prompt is not None else (BOS,)
    names = ("conv_w", "conv_b", "proj", "emb", "w_in", "w_h", "b_rec", "w_out")
    params = {name: arr.copy() for name, arr in zip(names, model.param_blocks())}
    current = replace(model, **params)
    n = len(dataset)
    buckets = _buckets(dataset, model.dims.k)
    for _ in range(epochs):
        total = {name: np.zeros_like(arr) for name, arr in params.items()}
        for cols, grid, inputs, targets in buckets:
            _, grads = _caption_loss_and_param_grads(current, cols, grid, inputs,
                                                     targets, prompt_tokens)
            for name in total:
                total[name] += grads[name]
        params = {name: getattr(current, name) - (lr / n) * total[name] for name in total}
        current = replace(current, **params)
    return current


# ---------------------------------------------------------------------------
# Weights and token-table I/O


def save_model(model: SurrogateModel, path: str) -> None:
    d = model.dims
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<H", MODEL_VERSION))
        fh.write(struct.pack("<IIIIII", d.k, d.c, d.d, d.d_model, d.vocab, d.max_len))
        for block in model.param_blocks():
            fh.write(block.astype("<f4").tobytes())


def load_model(path: str) -> SurrogateModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise ValueError(f"{path}: missing FMMM magic")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    k, c, d, d_model, vocab, max_len = struct.unpack_from("<IIIIII", data, 6)
    dims = ModelDims(k, c, d, d_model, vocab, max_len).validate()
    shapes = [
        (d, c, k, k), (d,), (d, d_model), (vocab, d_model),
        (d_model, d_model), (d_model, d_model), (d_model,), (d_model, vocab),
    ]
    offset = 30
    blocks = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        if arr.size != count:
            raise ValueError(f"{path}: truncated parameter payload")
        blocks.append(arr.astype(np.float64).reshape(shape))
        offset += count * 4
    return SurrogateModel(dims, *blocks)


def save_token_table(table: list[str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(table) + "\n")


def load_token_table(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()
