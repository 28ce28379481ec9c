"""Dataset directory format.

A dataset directory holds ``manifest.tsv`` (one row per sample: id,
subject, domain, class code, labeled 0/1, split, face filename, eye
filename) plus one raw image file per face/eye: little-endian 32-bit
reals, row-major, after a 16-byte header (magic "GLIM", u32 version=1,
u32 height, u32 width). Round trips are bit-exact.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .data import Dataset, DomainSpec, GlanceClass, Sample, SubjectProfile
from .errors import FormatError

GLIM_MAGIC = b"GLIM"
GLIM_VERSION = 1

MANIFEST_COLUMNS = ["id", "subject", "domain", "class", "labeled", "split",
                    "face_file", "eye_file"]


def write_image(path: str, img: np.ndarray):
    img = np.ascontiguousarray(img, dtype="<f4")
    if img.ndim != 2:
        raise FormatError(f"image must be 2-d, got shape {img.shape}")
    h, w = img.shape
    header = GLIM_MAGIC + struct.pack("<III", GLIM_VERSION, h, w)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(img.tobytes())
    os.replace(tmp, path)


def read_image(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) < 16:
            raise FormatError(f"{path}: truncated header", offset=len(header))
        if header[:4] != GLIM_MAGIC:
            raise FormatError(f"{path}: bad magic {header[:4]!r}", offset=0)
        version, h, w = struct.unpack("<III", header[4:16])
        if version != GLIM_VERSION:
            raise FormatError(
                f"{path}: unsupported version {version} "
                f"(reader supports {GLIM_VERSION})", offset=4)
        payload = f.read(4 * h * w + 1)
        if len(payload) != 4 * h * w:
            raise FormatError(
                f"{path}: expected {4 * h * w} payload bytes, "
                f"got {len(payload)}", offset=16)
    return np.frombuffer(payload, dtype="<f4").reshape(h, w).copy()


def save_dataset(dataset: Dataset, directory: str):
    os.makedirs(directory, exist_ok=True)
    rows = ["\t".join(MANIFEST_COLUMNS)]
    for s in dataset.samples:
        face_file = f"s{s.sample_id:06d}_face.glim"
        eye_file = f"s{s.sample_id:06d}_eye.glim"
        write_image(os.path.join(directory, face_file), s.face)
        write_image(os.path.join(directory, eye_file), s.eye)
        rows.append("\t".join([
            str(s.sample_id), str(s.subject_id), str(s.domain_id),
            str(int(s.glance)), str(int(s.labeled)), s.split,
            face_file, eye_file,
        ]))
    tmp = os.path.join(directory, "manifest.tsv.tmp")
    with open(tmp, "w") as f:
        f.write("\n".join(rows) + "\n")
    os.replace(tmp, os.path.join(directory, "manifest.tsv"))


def load_dataset(directory: str) -> Dataset:
    manifest = os.path.join(directory, "manifest.tsv")
    if not os.path.exists(manifest):
        raise FormatError(f"no manifest.tsv in {directory}")
    with open(manifest) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    header = lines[0].split("\t")
    if header != MANIFEST_COLUMNS:
        raise FormatError(f"unexpected manifest columns: {header}")
    samples = []
    image_size = None
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != len(MANIFEST_COLUMNS):
            raise FormatError(f"malformed manifest row: {ln!r}")
        sid, subj, dom, cls, labeled, split, face_file, eye_file = parts
        face = read_image(os.path.join(directory, face_file))
        eye = read_image(os.path.join(directory, eye_file))
        image_size = face.shape[0]
        samples.append(Sample(
            sample_id=int(sid), face=face, eye=eye,
            glance=GlanceClass(int(cls)), subject_id=int(subj),
            domain_id=int(dom), labeled=bool(int(labeled)), split=split))
    domains = {d: DomainSpec(domain_id=d)
               for d in sorted({s.domain_id for s in samples})}
    subjects = {s: SubjectProfile(subject_id=s)
                for s in sorted({s.subject_id for s in samples})}
    return Dataset(samples, image_size or 0, subjects, domains)
