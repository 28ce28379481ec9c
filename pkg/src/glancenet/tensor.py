"""Dense tensors with reverse-mode automatic differentiation.

Values are numpy arrays (float32 by default, float64 for gradient
checking). Each operation records its inputs and a backward closure on
the produced tensor; ``backward()`` on a scalar replays the tape in
reverse creation order and accumulates gradients into ``.grad`` slots.

No general broadcasting: operations require exactly matching shapes
except where an op defines its own internal broadcast (dense bias add).
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ContractError, DimensionError

DEFAULT_DTYPE = np.float32

_node_ids = itertools.count()


class Tensor:
    """N-dimensional array with an optional gradient slot.

    ``requires_grad`` marks leaves (parameters); tensors produced from
    at least one grad-requiring input also carry gradients so the chain
    rule can flow through them.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_nid")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else None)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self._nid = next(_node_ids)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def assert_finite(self, what="tensor"):
        if not np.all(np.isfinite(self.data)):
            raise ContractError(f"non-finite values in {what}")

    def backward(self, params=None):
        """Reverse-mode pass from this scalar.

        When ``params`` is given, any listed parameter left unreachable
        from this loss receives a zero gradient.
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {self.data.shape}"
            )
        order = _topo(self)
        self.grad = np.ones_like(self.data)
        for node in order:
            if node._backward is not None:
                node._backward()
        if params is not None:
            for p in params:
                if p.grad is None:
                    p.grad = np.zeros_like(p.data)

    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("elementwise tensor*tensor is not provided; "
                                "use the dedicated ops")
        return scale(self, float(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name})"


def _topo(root):
    """Reachable nodes in reverse creation order (a valid reverse
    topological order because inputs are always created before outputs)."""
    seen = set()
    nodes = []
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    nodes.sort(key=lambda n: n._nid, reverse=True)
    return nodes


def _make(data, parents, backward):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    out._nid = next(_node_ids)
    return out


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


def zero_grads(params):
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# elementwise / structural ops


def add(x: Tensor, y: Tensor) -> Tensor:
    if x.data.shape != y.data.shape:
        raise DimensionError(f"add: {x.data.shape} vs {y.data.shape}")
    out = _make(x.data + y.data, (x, y), None)

    def backward():
        _accum(x, out.grad)
        _accum(y, out.grad)

    out._backward = backward
    return out


def sub(x: Tensor, y: Tensor) -> Tensor:
    if x.data.shape != y.data.shape:
        raise DimensionError(f"sub: {x.data.shape} vs {y.data.shape}")
    out = _make(x.data - y.data, (x, y), None)

    def backward():
        _accum(x, out.grad)
        _accum(y, -out.grad)

    out._backward = backward
    return out


def add_scalar(x: Tensor, c: float) -> Tensor:
    out = _make(x.data + c, (x,), None)
    out._backward = lambda: _accum(x, out.grad)
    return out


def scale(x: Tensor, c: float) -> Tensor:
    out = _make(x.data * c, (x,), None)
    out._backward = lambda: _accum(x, out.grad * c)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    out = _make(x.data.reshape(shape), (x,), None)
    out._backward = lambda: _accum(x, out.grad.reshape(x.data.shape))
    return out


def concat(tensors, axis=-1) -> Tensor:
    datas = [t.data for t in tensors]
    out = _make(np.concatenate(datas, axis=axis), tuple(tensors), None)
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def backward():
        for t, g in zip(tensors, np.split(out.grad, splits, axis=axis)):
            _accum(t, g)

    out._backward = backward
    return out


def tensor_sum(x: Tensor) -> Tensor:
    out = _make(x.data.sum(keepdims=False).reshape(()), (x,), None)
    out._backward = lambda: _accum(x, np.broadcast_to(out.grad, x.data.shape))
    return out


def tensor_mean(x: Tensor) -> Tensor:
    n = x.data.size
    out = _make(x.data.mean().reshape(()), (x,), None)
    out._backward = lambda: _accum(
        x, np.broadcast_to(out.grad / n, x.data.shape))
    return out


# ---------------------------------------------------------------------------
# neural-network ops


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w + b for x:[batch,in], w:[in,out], b:[out]."""
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise DimensionError(
            f"dense expects 2-d operands, got {x.data.shape} and {w.data.shape}")
    if x.data.shape[1] != w.data.shape[0]:
        raise DimensionError(
            f"dense: inner dimensions disagree, x {x.data.shape} vs w {w.data.shape}")
    if b.data.shape != (w.data.shape[1],):
        raise DimensionError(
            f"dense: bias {b.data.shape} does not match output width {w.data.shape[1]}")
    out = _make(x.data @ w.data + b.data, (x, w, b), None)

    def backward():
        g = out.grad
        _accum(x, g @ w.data.T)
        _accum(w, x.data.T @ g)
        _accum(b, g.sum(axis=0))

    out._backward = backward
    return out


def _same_pad(size, stride, eff_k):
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + eff_k - size, 0)
    return out, total // 2, total - total // 2


def conv2d(x: Tensor, k: Tensor, stride: int = 1, dilation: int = 1) -> Tensor:
    """Cross-correlation with "same" padding: x:[b,H,W,Cin], k:[kh,kw,Cin,Cout].

    Output spatial dims are ceil(H/stride) x ceil(W/stride).
    """
    if stride < 1 or dilation < 1:
        raise ContractError("conv2d: stride and dilation must be >= 1")
    if x.data.ndim != 4 or k.data.ndim != 4:
        raise DimensionError(
            f"conv2d expects 4-d operands, got {x.data.shape} and {k.data.shape}")
    kh, kw, cin, cout = k.data.shape
    if x.data.shape[3] != cin:
        raise DimensionError(
            f"conv2d: input channels {x.data.shape[3]} do not match kernel {cin} "
            f"(x {x.data.shape}, k {k.data.shape})")
    bsz, h, w, _ = x.data.shape
    ekh = kh + (kh - 1) * (dilation - 1)
    ekw = kw + (kw - 1) * (dilation - 1)
    hout, pt, pb = _same_pad(h, stride, ekh)
    wout, pl, pr = _same_pad(w, stride, ekw)
    xpad = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xpad, (ekh, ekw), axis=(1, 2))
    # [b, hout, wout, cin, kh, kw] after stride/dilation subsampling
    win = win[:, ::stride, ::stride, :, ::dilation, ::dilation]
    cols = np.ascontiguousarray(win).reshape(bsz * hout * wout, cin * kh * kw)
    kmat = np.ascontiguousarray(k.data.transpose(2, 0, 1, 3)).reshape(
        cin * kh * kw, cout)
    out_data = (cols @ kmat).reshape(bsz, hout, wout, cout)
    out = _make(out_data, (x, k), None)

    def backward():
        g = out.grad
        gmat = g.reshape(bsz * hout * wout, cout)
        if k.requires_grad:
            dk = (cols.T @ gmat).reshape(cin, kh, kw, cout).transpose(1, 2, 0, 3)
            _accum(k, dk)
        if x.requires_grad:
            dxpad = np.zeros_like(xpad)
            for i in range(kh):
                for j in range(kw):
                    # contribution of kernel tap (i, j) to each input site
                    gtap = g @ k.data[i, j].T  # [b, hout, wout, cin]
                    ii = i * dilation
                    jj = j * dilation
                    dxpad[:, ii:ii + hout * stride:stride,
                          jj:jj + wout * stride:stride, :] += gtap
            dx = dxpad[:, pt:pt + h, pl:pl + w, :]
            _accum(x, dx)

    out._backward = backward
    return out


def pixel_shuffle(x: Tensor) -> Tensor:
    """Depth-to-space by factor 2: [b,H,W,4C] -> [b,2H,2W,C].

    Channels [a,b,c,d] at one pixel become the 2x2 block [[a,b],[c,d]].
    """
    if x.data.ndim != 4:
        raise DimensionError(f"pixel_shuffle expects 4-d input, got {x.data.shape}")
    bsz, h, w, ch = x.data.shape
    if ch % 4 != 0:
        raise DimensionError(
            f"pixel_shuffle: channel count {ch} not divisible by 4")
    c = ch // 4
    y = (x.data.reshape(bsz, h, w, 2, 2, c)
         .transpose(0, 1, 3, 2, 4, 5)
         .reshape(bsz, 2 * h, 2 * w, c))
    out = _make(np.ascontiguousarray(y), (x,), None)

    def backward():
        g = (out.grad.reshape(bsz, h, 2, w, 2, c)
             .transpose(0, 1, 3, 2, 4, 5)
             .reshape(bsz, h, w, ch))
        _accum(x, np.ascontiguousarray(g))

    out._backward = backward
    return out


def space_to_depth(arr: np.ndarray) -> np.ndarray:
    """Inverse rearrangement of :func:`pixel_shuffle` on raw arrays."""
    bsz, h2, w2, c = arr.shape
    h, w = h2 // 2, w2 // 2
    return (arr.reshape(bsz, h, 2, w, 2, c)
            .transpose(0, 1, 3, 2, 4, 5)
            .reshape(bsz, h, w, 4 * c))


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    pos = x.data > 0
    out = _make(np.where(pos, x.data, slope * x.data), (x,), None)
    out._backward = lambda: _accum(
        x, np.where(pos, out.grad, slope * out.grad))
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = _make(y, (x,), None)
    out._backward = lambda: _accum(x, (1.0 - y * y) * out.grad)
    return out


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = _make(y, (x,), None)

    def backward():
        g = out.grad
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accum(x, y * (g - dot))

    out._backward = backward
    return out


def dropout(x: Tensor, rate: float, training: bool, rng) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity in eval."""
    if not 0.0 <= rate < 1.0:
        from .errors import ConfigError
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        out = _make(x.data.copy(), (x,), None)
        out._backward = lambda: _accum(x, out.grad)
        return out
    keep = (rng.random(x.data.shape) >= rate)
    factor = (keep / (1.0 - rate)).astype(x.data.dtype)
    out = _make(x.data * factor, (x,), None)
    out._backward = lambda: _accum(x, out.grad * factor)
    return out


def grad_reversal(x: Tensor, lambda_rev: float = 1.0) -> Tensor:
    """Identity forward; backward multiplies the gradient by -lambda_rev."""
    out = _make(x.data.copy(), (x,), None)
    out._backward = lambda: _accum(x, -lambda_rev * out.grad)
    return out


# ---------------------------------------------------------------------------
# loss primitives

PROB_FLOOR = 1e-12


def cross_entropy(probs: Tensor, onehot: np.ndarray) -> Tensor:
    """Batch-averaged categorical cross entropy against one-hot targets.

    Probabilities are floored at 1e-12 before the log; floored entries
    get zero gradient (clamp subgradient).
    """
    onehot = np.asarray(onehot, dtype=probs.data.dtype)
    if probs.data.shape != onehot.shape:
        raise DimensionError(
            f"cross_entropy: probs {probs.data.shape} vs labels {onehot.shape}")
    bsz = probs.data.shape[0]
    clipped = np.maximum(probs.data, PROB_FLOOR)
    val = -(onehot * np.log(clipped)).sum() / bsz
    out = _make(np.asarray(val, dtype=probs.data.dtype).reshape(()), (probs,), None)

    def backward():
        active = probs.data >= PROB_FLOOR
        g = -(onehot / clipped) * active / bsz
        _accum(probs, g * out.grad)

    out._backward = backward
    return out


def mean_abs_error(a: Tensor, b: Tensor) -> Tensor:
    """Mean of |a - b| over every element."""
    if a.data.shape != b.data.shape:
        raise DimensionError(
            f"mean_abs_error: {a.data.shape} vs {b.data.shape}")
    d = a.data - b.data
    n = d.size
    out = _make(np.asarray(np.abs(d).mean(), dtype=a.data.dtype).reshape(()),
                (a, b), None)

    def backward():
        g = np.sign(d) * (out.grad / n)
        _accum(a, g)
        _accum(b, -g)

    out._backward = backward
    return out


def mean_sq_error(a: Tensor, b: Tensor) -> Tensor:
    """Mean of (a - b)^2 over every element."""
    if a.data.shape != b.data.shape:
        raise DimensionError(
            f"mean_sq_error: {a.data.shape} vs {b.data.shape}")
    d = a.data - b.data
    n = d.size
    out = _make(np.asarray((d * d).mean(), dtype=a.data.dtype).reshape(()),
                (a, b), None)

    def backward():
        g = 2.0 * d * (out.grad / n)
        _accum(a, g)
        _accum(b, -g)

    out._backward = backward
    return out
