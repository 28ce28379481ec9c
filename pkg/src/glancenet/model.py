"""Two-channel hourglass: encoder, decoder with skip connections,
prediction head, and the optional gradient-reversal domain head.

The encoder is a dilated stem conv followed by n downsampling stages,
each a stride-2 conv into a constant-width residual block, then a
linear dense layer producing the embedding. The decoder mirrors it with
a dense expansion and n conv + pixel-shuffle upsampling stages, closing
with a 5x5 conv under tanh. Skip connections concatenate encoder
feature maps into the decoder at matching resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError
from .optim import he_normal
from .tensor import Tensor

LEAKY_SLOPE = 0.2
N_CLASSES = 6


@dataclass(frozen=True)
class ArchitectureScale:
    """Size knobs for the hourglass.

    The stem conv width is twice ``base_channels``; stage widths double
    per stage starting from ``base_channels``. The full-scale preset
    reproduces the published layer table (96px input, 5 stages,
    128-channel stem into 64..1024 stages, 512-d embedding).
    """

    input_size: int = 96
    input_channels: int = 2
    n_blocks: int = 5
    base_channels: int = 64
    embedding_dim: int = 512
    n_classes: int = N_CLASSES
    head_hidden: int = 256
    dec_out_kernel: int = 5

    def __post_init__(self):
        if self.input_size % (2 ** self.n_blocks) != 0:
            raise ConfigError(
                f"input_size {self.input_size} not divisible by 2^{self.n_blocks}")

    @property
    def stem_channels(self) -> int:
        return 2 * self.base_channels

    @property
    def stage_widths(self) -> list[int]:
        return [self.base_channels * (2 ** i) for i in range(self.n_blocks)]

    @property
    def bottom_size(self) -> int:
        return self.input_size // (2 ** self.n_blocks)

    @property
    def decoder_widths(self) -> list[int]:
        w = self.stage_widths
        return w[:-1][::-1] + [w[0]]


FULL_SCALE = ArchitectureScale()
DESK_SCALE = ArchitectureScale(input_size=32, n_blocks=3, base_channels=8,
                               embedding_dim=128, head_hidden=64)


@dataclass
class ForwardOutputs:
    embedding: Tensor
    reconstruction: Tensor | None
    class_probs: Tensor | None
    domain_probs: Tensor | None = None


@dataclass
class ModelFlags:
    personalized: bool = False      # prediction head takes 2*embedding_dim
    use_skips: bool = True
    with_decoder: bool = True
    with_domain_head: bool = False
    dropout_rate: float = 0.7
    domain_hidden: int = 64
    n_domains: int = 2


class GlanceModel:
    """Hourglass weights plus the forward topologies over them.

    All multi-stream forwards read the same parameter tensors, so one
    optimizer step updates every stream.
    """

    def __init__(self, scale: ArchitectureScale, rng=None,
                 flags: ModelFlags | None = None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(0)
        self.scale = scale
        self.flags = flags or ModelFlags()
        self.dtype = dtype
        self.params: dict[str, Tensor] = {}
        self._build(rng)

    # -- construction -------------------------------------------------

    def _conv(self, rng, name, kh, kw, cin, cout):
        w = he_normal(rng, (kh, kw, cin, cout), fan_in=kh * kw * cin,
                      dtype=self.dtype)
        self.params[f"{name}/w"] = Tensor(w, requires_grad=True)
        self.params[f"{name}/b"] = Tensor(
            np.zeros(cout, dtype=self.dtype), requires_grad=True)

    def _dense(self, rng, name, din, dout):
        w = he_normal(rng, (din, dout), fan_in=din, dtype=self.dtype)
        self.params[f"{name}/w"] = Tensor(w, requires_grad=True)
        self.params[f"{name}/b"] = Tensor(
            np.zeros(dout, dtype=self.dtype), requires_grad=True)

    def _build(self, rng):
        s = self.scale
        f = self.flags
        widths = s.stage_widths
        self._conv(rng, "enc/stem", 3, 3, s.input_channels, s.stem_channels)
        cin = s.stem_channels
        for i, w in enumerate(widths):
            self._conv(rng, f"enc/down{i}", 3, 3, cin, w)
            self._conv(rng, f"enc/rb{i}a", 3, 3, w, w)
            self._conv(rng, f"enc/rb{i}b", 3, 3, w, w)
            cin = w
        flat = s.bottom_size * s.bottom_size * widths[-1]
        self._dense(rng, "enc/fc", flat, s.embedding_dim)

        if f.with_decoder:
            dws = s.decoder_widths
            self._dense(rng, "dec/fc", s.embedding_dim, flat)
            cin = widths[-1]
            for j, dw in enumerate(dws):
                self._conv(rng, f"dec/conv{j}", 3, 3, cin, 4 * dw)
                cin = dw
                if f.use_skips:
                    cin += self._skip_channels(j)
            k = s.dec_out_kernel
            self._conv(rng, "dec/out", k, k, cin, s.input_channels)

        head_in = 2 * s.embedding_dim if f.personalized else s.embedding_dim
        self._dense(rng, "head/fc0", head_in, s.head_hidden)
        self._dense(rng, "head/fc1", s.head_hidden, s.n_classes)

        if f.with_domain_head:
            self._dense(rng, "dom/fc0", s.embedding_dim, f.domain_hidden)
            self._dense(rng, "dom/fc1", f.domain_hidden, f.n_domains)

    def _skip_channels(self, j: int) -> int:
        # after upsampling stage j the map matches encoder stage
        # n_blocks-2-j, except the last stage which matches the stem
        s = self.scale
        if j < s.n_blocks - 1:
            return s.stage_widths[s.n_blocks - 2 - j]
        return s.stem_channels

    # -- conv helpers --------------------------------------------------

    def _apply_conv(self, name, x, stride=1, dilation=1, act="lrelu"):
        y = T.conv2d(x, self.params[f"{name}/w"], stride=stride,
                     dilation=dilation)
        b = self.params[f"{name}/b"]
        y = _bias4d(y, b)
        if act == "lrelu":
            y = T.leaky_relu(y, LEAKY_SLOPE)
        elif act == "tanh":
            y = T.tanh(y)
        return y

    def _apply_dense(self, name, x, act=None):
        y = T.dense(x, self.params[f"{name}/w"], self.params[f"{name}/b"])
        if act == "lrelu":
            y = T.leaky_relu(y, LEAKY_SLOPE)
        return y

    # -- forward topologies -------------------------------------------

    def encode(self, x: Tensor):
        """Returns (embedding, per-level feature maps for the skips)."""
        s = self.scale
        if x.data.ndim != 4 or x.data.shape[1] != s.input_size \
                or x.data.shape[2] != s.input_size \
                or x.data.shape[3] != s.input_channels:
            raise DimensionError(
                f"encode: expected [batch,{s.input_size},{s.input_size},"
                f"{s.input_channels}], got {x.data.shape}")
        levels = []
        h = self._apply_conv("enc/stem", x, stride=1, dilation=2)
        levels.append(h)
        for i in range(s.n_blocks):
            h = self._apply_conv(f"enc/down{i}", h, stride=2)
            r = self._apply_conv(f"enc/rb{i}a", h)
            r = T.conv2d(r, self.params[f"enc/rb{i}b/w"])
            r = _bias4d(r, self.params[f"enc/rb{i}b/b"])
            h = T.leaky_relu(T.add(h, r), LEAKY_SLOPE)
            levels.append(h)
        flat = T.reshape(h, (h.data.shape[0], -1))
        emb = self._apply_dense("enc/fc", flat)  # linear activation
        return emb, levels

    def decode(self, emb: Tensor, levels) -> Tensor:
        s = self.scale
        f = self.flags
        if not f.with_decoder:
            raise ConfigError("model was built without a decoder")
        bsz = emb.data.shape[0]
        h = self._apply_dense("dec/fc", emb, act="lrelu")
        h = T.reshape(h, (bsz, s.bottom_size, s.bottom_size,
                          s.stage_widths[-1]))
        for j in range(s.n_blocks):
            h = self._apply_conv(f"dec/conv{j}", h)
            h = T.pixel_shuffle(h)
            if f.use_skips:
                skip = levels[s.n_blocks - 1 - j]
                if skip.data.shape[1:3] != h.data.shape[1:3]:
                    raise DimensionError(
                        f"decode: skip resolution {skip.data.shape[1:3]} vs "
                        f"decoder map {h.data.shape[1:3]}")
                h = T.concat([h, skip], axis=-1)
        return self._apply_conv("dec/out", h, act="tanh")

    def predict(self, features: Tensor, training: bool, rng) -> Tensor:
        expected = 2 * self.scale.embedding_dim if self.flags.personalized \
            else self.scale.embedding_dim
        if features.data.shape[1] != expected:
            raise DimensionError(
                f"predict: expected feature width {expected}, "
                f"got {features.data.shape[1]}")
        h = self._apply_dense("head/fc0", features, act="lrelu")
        h = T.dropout(h, self.flags.dropout_rate, training, rng)
        logits = self._apply_dense("head/fc1", h)
        return T.softmax(logits)

    def forward(self, x: Tensor, training: bool = False, rng=None,
                lambda_rev: float = 1.0, with_domain: bool = False,
                with_prediction: bool = True) -> ForwardOutputs:
        """Standard single-stream topology."""
        rng = rng or np.random.default_rng(0)
        emb, levels = self.encode(x)
        recon = self.decode(emb, levels) if self.flags.with_decoder else None
        probs = self.predict(emb, training, rng) if with_prediction else None
        dom = None
        if with_domain:
            if not self.flags.with_domain_head:
                raise ConfigError("model was built without a domain head")
            g = T.grad_reversal(emb, lambda_rev)
            h = self._apply_dense("dom/fc0", g, act="lrelu")
            dom = T.softmax(self._apply_dense("dom/fc1", h))
        return ForwardOutputs(emb, recon, probs, dom)

    def forward_personalized(self, current: Tensor, baseline: Tensor,
                             training: bool = False, rng=None):
        """Two weight-sharing streams; the head sees residual (+) current.

        Returns (current outputs, baseline outputs, residual tensor).
        """
        if current.data.shape != baseline.data.shape:
            raise DimensionError(
                f"forward_personalized: {current.data.shape} vs "
                f"{baseline.data.shape}")
        rng = rng or np.random.default_rng(0)
        emb_c, lv_c = self.encode(current)
        emb_b, lv_b = self.encode(baseline)
        residual = T.sub(emb_c, emb_b)
        head_in = T.concat([residual, emb_c], axis=-1)
        probs = self.predict(head_in, training, rng)
        rec_c = self.decode(emb_c, lv_c) if self.flags.with_decoder else None
        rec_b = self.decode(emb_b, lv_b) if self.flags.with_decoder else None
        cur = ForwardOutputs(emb_c, rec_c, probs)
        base = ForwardOutputs(emb_b, rec_b, None)
        return cur, base, residual

    # -- bookkeeping ---------------------------------------------------

    def count_parameters(self, subset: str = "E+P+D") -> int:
        prefixes = {"E+P": ("enc/", "head/"),
                    "E+P+D": ("enc/", "head/", "dec/"),
                    "all": ("",)}
        if subset not in prefixes:
            raise ConfigError(f"unknown parameter subset '{subset}'")
        return sum(p.data.size for name, p in self.params.items()
                   if name.startswith(prefixes[subset]))

    def copy_weights(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_weights(self, weights: dict[str, np.ndarray]):
        for name, p in self.params.items():
            if name not in weights:
                raise ConfigError(f"missing weight '{name}'")
            if weights[name].shape != p.data.shape:
                raise DimensionError(
                    f"weight '{name}': {weights[name].shape} vs {p.data.shape}")
            p.data = weights[name].astype(self.dtype).copy()


def _bias4d(y: Tensor, b: Tensor) -> Tensor:
    """Add a per-channel bias to a [b,H,W,C] map."""
    out = T._make(y.data + b.data, (y, b), None)

    def backward():
        T._accum(y, out.grad)
        T._accum(b, out.grad.sum(axis=(0, 1, 2)))

    out._backward = backward
    return out
