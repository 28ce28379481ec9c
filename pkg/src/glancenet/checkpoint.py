"""Binary checkpoint format.

Layout: magic "GLHG", u32 version, then named sections. Each section is
[u16 name length][name, utf-8][u32 payload length][payload]
[u32 CRC32 of payload]. Sections: "arch" (key=value text describing the
architecture scale and model flags), "weights" (tensor table),
"optimizer" (optional: u64 step count + tensor table of moment
buffers), "config" (optional free text, typically the experiment
config). Tensor tables store each array as [u16 name len][name]
[u8 dtype code][u8 rank][u32 dims...][raw little-endian bytes].
Round trips are bit-exact; every read is length- and CRC-checked and
failures report the byte offset.
"""

from __future__ import annotations

import io
import os
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .model import ArchitectureScale, GlanceModel, ModelFlags
from .optim import Adam

MAGIC = b"GLHG"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8"}
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1,
                np.dtype("int64"): 2}


def _pack_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype not in _DTYPE_CODES:
            arr = arr.astype(np.float32)
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
        for d in arr.shape:
            buf.write(struct.pack("<I", d))
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        buf.write(le.tobytes())
    return buf.getvalue()


def _unpack_tensors(payload: bytes, base_offset: int) -> dict[str, np.ndarray]:
    view = memoryview(payload)
    pos = 0

    def need(n, what):
        nonlocal pos
        if pos + n > len(view):
            raise FormatError(f"tensor table truncated reading {what}",
                              offset=base_offset + pos)
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", need(4, "tensor count"))
    out = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", need(2, "name length"))
        name = bytes(need(nlen, "name")).decode("utf-8")
        code, rank = struct.unpack("<BB", need(2, "dtype/rank"))
        if code not in _DTYPES:
            raise FormatError(f"tensor '{name}': unknown dtype code {code}",
                              offset=base_offset + pos - 2)
        dims = [struct.unpack("<I", need(4, "dim"))[0] for _ in range(rank)]
        n_elems = int(np.prod(dims)) if dims else 1
        raw = need(n_elems * np.dtype(_DTYPES[code]).itemsize, f"'{name}' data")
        out[name] = np.frombuffer(bytes(raw),
                                  dtype=_DTYPES[code]).reshape(dims).copy()
    if pos != len(view):
        raise FormatError(f"{len(view) - pos} trailing bytes in tensor table",
                          offset=base_offset + pos)
    return out


def _arch_text(scale: ArchitectureScale, flags: ModelFlags) -> str:
    fields = {
        "input_size": scale.input_size,
        "input_channels": scale.input_channels,
        "n_blocks": scale.n_blocks,
        "base_channels": scale.base_channels,
        "embedding_dim": scale.embedding_dim,
        "n_classes": scale.n_classes,
        "head_hidden": scale.head_hidden,
        "dec_out_kernel": scale.dec_out_kernel,
        "personalized": int(flags.personalized),
        "use_skips": int(flags.use_skips),
        "with_decoder": int(flags.with_decoder),
        "with_domain_head": int(flags.with_domain_head),
        "dropout_rate": repr(flags.dropout_rate),
        "domain_hidden": flags.domain_hidden,
        "n_domains": flags.n_domains,
    }
    return "".join(f"{k}={v}\n" for k, v in fields.items())


def _parse_arch(text: str) -> tuple[ArchitectureScale, ModelFlags]:
    kv = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if "=" not in line:
            raise FormatError(f"malformed arch line {line!r}")
        k, v = line.split("=", 1)
        kv[k] = v
    try:
        scale = ArchitectureScale(
            input_size=int(kv["input_size"]),
            input_channels=int(kv["input_channels"]),
            n_blocks=int(kv["n_blocks"]),
            base_channels=int(kv["base_channels"]),
            embedding_dim=int(kv["embedding_dim"]),
            n_classes=int(kv["n_classes"]),
            head_hidden=int(kv["head_hidden"]),
            dec_out_kernel=int(kv["dec_out_kernel"]))
        flags = ModelFlags(
            personalized=bool(int(kv["personalized"])),
            use_skips=bool(int(kv["use_skips"])),
            with_decoder=bool(int(kv["with_decoder"])),
            with_domain_head=bool(int(kv["with_domain_head"])),
            dropout_rate=float(kv["dropout_rate"]),
            domain_hidden=int(kv["domain_hidden"]),
            n_domains=int(kv["n_domains"]))
    except KeyError as e:
        raise FormatError(f"arch section missing key {e}")
    return scale, flags


@dataclass
class Checkpoint:
    scale: ArchitectureScale
    flags: ModelFlags
    weights: dict[str, np.ndarray]
    optimizer_step: int | None = None
    optimizer_state: dict[str, np.ndarray] | None = None
    config_text: str | None = None

    def build_model(self, dtype=np.float32) -> GlanceModel:
        model = GlanceModel(self.scale, np.random.default_rng(0),
                            self.flags, dtype=dtype)
        model.load_weights(self.weights)
        return model


def save_checkpoint(path: str, model: GlanceModel,
                    optimizer: Adam | None = None,
                    config_text: str | None = None):
    sections = [("arch", _arch_text(model.scale, model.flags).encode()),
                ("weights", _pack_tensors(model.copy_weights()))]
    if optimizer is not None:
        opt_payload = struct.pack("<Q", optimizer.t) + \
            _pack_tensors(optimizer.state_tensors())
        sections.append(("optimizer", opt_payload))
    if config_text is not None:
        sections.append(("config", config_text.encode()))

    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    for name, payload in sections:
        nb = name.encode()
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<I", len(payload)))
        buf.write(payload)
        buf.write(struct.pack("<I", zlib.crc32(payload)))
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        blob = f.read()
    pos = 0

    def need(n, what):
        nonlocal pos
        if pos + n > len(blob):
            raise FormatError(f"truncated reading {what}", offset=pos)
        chunk = blob[pos:pos + n]
        pos += n
        return chunk

    if need(4, "magic") != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}", offset=0)
    (version,) = struct.unpack("<I", need(4, "version"))
    if version != VERSION:
        raise FormatError(
            f"{path}: unsupported checkpoint version {version} "
            f"(reader supports {VERSION})", offset=4)

    sections = {}
    while pos < len(blob):
        (nlen,) = struct.unpack("<H", need(2, "section name length"))
        name = need(nlen, "section name").decode("utf-8")
        (plen,) = struct.unpack("<I", need(4, "section length"))
        payload_offset = pos
        payload = need(plen, f"section '{name}' payload")
        (crc,) = struct.unpack("<I", need(4, "section CRC"))
        if zlib.crc32(payload) != crc:
            raise FormatError(
                f"{path}: CRC mismatch in section '{name}'",
                offset=payload_offset)
        sections[name] = (payload, payload_offset)

    for required in ("arch", "weights"):
        if required not in sections:
            raise FormatError(f"{path}: missing section '{required}'")

    scale, flags = _parse_arch(sections["arch"][0].decode("utf-8"))
    weights = _unpack_tensors(*sections["weights"])
    ckpt = Checkpoint(scale, flags, weights)
    if "optimizer" in sections:
        payload, off = sections["optimizer"]
        if len(payload) < 8:
            raise FormatError("optimizer section too short", offset=off)
        (step,) = struct.unpack("<Q", payload[:8])
        ckpt.optimizer_step = step
        ckpt.optimizer_state = _unpack_tensors(payload[8:], off + 8)
    if "config" in sections:
        ckpt.config_text = sections["config"][0].decode("utf-8")
    return ckpt
