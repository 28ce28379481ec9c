"""Procedural multi-domain, multi-subject glance dataset.

Each sample is a rendered face (ellipse head, two eye disks, pupils,
mouth) plus an eye patch cropped around the eye centers. The glance
class moves the pupils (lizard component) and tilts the head position
(owl component); subjects vary in head placement, size, eye spacing and
shading; domains apply an affine camera transform, brightness/contrast
shift, sensor noise and an optional vignette. Pixels are normalized to
[-1, 1].

Rendering is pure given (subject, domain, class, seed), so per-sample
seeds derived from ids make generation order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import BaselineUnavailableError, ConfigError


class GlanceClass(IntEnum):
    ROAD = 0
    CENTER_STACK = 1
    INSTRUMENT_CLUSTER = 2
    REARVIEW_MIRROR = 3
    LEFT = 4
    RIGHT = 5


N_CLASSES = len(GlanceClass)

# per class: pupil displacement (unit gaze code, scaled by gaze gain)
# and head-position shift in scene units (owl component)
GAZE_CODES = {
    GlanceClass.ROAD: (0.0, 0.0),
    GlanceClass.CENTER_STACK: (0.45, 0.65),
    GlanceClass.INSTRUMENT_CLUSTER: (0.0, 0.85),
    GlanceClass.REARVIEW_MIRROR: (0.55, -0.60),
    GlanceClass.LEFT: (-0.90, 0.0),
    GlanceClass.RIGHT: (0.90, 0.10),
}
HEAD_SHIFTS = {
    GlanceClass.ROAD: (0.0, 0.0),
    GlanceClass.CENTER_STACK: (0.05, 0.06),
    GlanceClass.INSTRUMENT_CLUSTER: (0.0, 0.08),
    GlanceClass.REARVIEW_MIRROR: (0.06, -0.05),
    GlanceClass.LEFT: (-0.09, 0.0),
    GlanceClass.RIGHT: (0.09, 0.0),
}


def _min_code_distance() -> float:
    codes = [np.array(GAZE_CODES[c]) for c in GlanceClass]
    dists = [np.linalg.norm(a - b)
             for i, a in enumerate(codes) for b in codes[i + 1:]]
    return min(dists)


# jitter std is 10% of the smallest inter-class pupil spacing so classes
# overlap slightly and AUC stays below 1
JITTER_FRACTION = 0.10


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: int
    offset: tuple[float, float] = (0.0, 0.0)   # scene units, face stays in frame
    head_size: float = 1.0
    eye_spacing: float = 1.0
    shade: float = 0.0                          # head intensity delta


@dataclass(frozen=True)
class DomainSpec:
    domain_id: int
    rotation_deg: float = 0.0
    scale: float = 1.0
    translate: tuple[float, float] = (0.0, 0.0)
    brightness: float = 0.0
    contrast: float = 1.0
    noise_sigma: float = 0.0
    vignette: bool = False

    def matrix(self) -> np.ndarray:
        """Scene -> image affine (rotation then scale then translation)."""
        th = math.radians(self.rotation_deg)
        c, s = math.cos(th), math.sin(th)
        return self.scale * np.array([[c, -s], [s, c]])


CLEAN_DOMAIN = DomainSpec(domain_id=0, noise_sigma=0.0)

# frozen experiment domains; d2's transform magnitudes were tuned once
# so a d1-only model measurably degrades on d2
DOMAIN_1 = DomainSpec(domain_id=1, rotation_deg=0.0, scale=1.0,
                      translate=(0.0, 0.0), brightness=0.0, contrast=1.0,
                      noise_sigma=0.03, vignette=False)
DOMAIN_2 = DomainSpec(domain_id=2, rotation_deg=13.0, scale=0.82,
                      translate=(0.08, -0.06), brightness=-0.28,
                      contrast=0.70, noise_sigma=0.10, vignette=True)


@dataclass
class Sample:
    sample_id: int
    face: np.ndarray            # [S, S] float32 in [-1, 1]
    eye: np.ndarray             # [S, S] float32 in [-1, 1]
    glance: GlanceClass
    subject_id: int
    domain_id: int
    labeled: bool = True
    split: str = "train"


# scene geometry constants (scene coordinates span [-1, 1])
_BG = -0.85
_HEAD_RX, _HEAD_RY = 0.60, 0.76
_EYE_DY = -0.22
_EYE_DX = 0.27
_EYE_R = 0.15
_PUPIL_R = 0.065
_GAZE_GAIN = _EYE_R * 0.50
_MOUTH_DY = 0.38
_MOUTH_RX, _MOUTH_RY = 0.22, 0.055


def _soft_ellipse(xs, ys, cx, cy, rx, ry, edge):
    d = np.sqrt(((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2)
    return np.clip((1.0 - d) / edge + 0.5, 0.0, 1.0)


class _Scene:
    """Implicit scene function for one (subject, class, jitter) triple."""

    def __init__(self, subject: SubjectProfile, glance: GlanceClass,
                 pupil_jitter, head_jitter):
        sz = subject.head_size
        hs = HEAD_SHIFTS[glance]
        self.head = (subject.offset[0] + hs[0] + head_jitter[0],
                     subject.offset[1] + hs[1] + head_jitter[1])
        self.rx, self.ry = _HEAD_RX * sz, _HEAD_RY * sz
        ex = _EYE_DX * sz * subject.eye_spacing
        self.eyes = [(self.head[0] - ex, self.head[1] + _EYE_DY * sz),
                     (self.head[0] + ex, self.head[1] + _EYE_DY * sz)]
        self.eye_r = _EYE_R * sz
        self.pupil_r = _PUPIL_R * sz
        code = GAZE_CODES[glance]
        gain = _GAZE_GAIN * sz
        self.pupil_off = (code[0] * gain + pupil_jitter[0],
                          code[1] * gain + pupil_jitter[1])
        self.mouth = (self.head[0], self.head[1] + _MOUTH_DY * sz)
        self.mouth_r = (_MOUTH_RX * sz, _MOUTH_RY * sz)
        self.head_col = 0.25 + subject.shade

    def eval(self, xs, ys, edge):
        img = np.full(xs.shape, _BG, dtype=np.float64)
        m = _soft_ellipse(xs, ys, self.head[0], self.head[1],
                          self.rx, self.ry, edge)
        img = img * (1 - m) + self.head_col * m
        m = _soft_ellipse(xs, ys, self.mouth[0], self.mouth[1],
                          self.mouth_r[0], self.mouth_r[1], edge)
        img = img * (1 - m) + (-0.35) * m
        for ecx, ecy in self.eyes:
            m = _soft_ellipse(xs, ys, ecx, ecy, self.eye_r, self.eye_r, edge)
            img = img * (1 - m) + 0.75 * m
            px = ecx + self.pupil_off[0]
            py = ecy + self.pupil_off[1]
            m = _soft_ellipse(xs, ys, px, py, self.pupil_r, self.pupil_r, edge)
            img = img * (1 - m) + (-0.70) * m
        return img


def _grid(size: int):
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    return np.meshgrid(coords, coords, indexing="xy")


def jitter_std() -> float:
    return JITTER_FRACTION * _min_code_distance() * _GAZE_GAIN


def render_sample(subject: SubjectProfile, domain: DomainSpec,
                  glance: GlanceClass, rng, image_size: int = 32,
                  sample_id: int = 0) -> Sample:
    """Render one face crop + eye patch pair for the given class."""
    pj = rng.normal(0.0, jitter_std(), size=2)
    hj = rng.normal(0.0, 0.010, size=2)
    scene = _Scene(subject, glance, pj, hj)
    edge = 1.5 * (2.0 / image_size)

    amat = domain.matrix()
    ainv = np.linalg.inv(amat)
    tx, ty = domain.translate

    ux, uy = _grid(image_size)
    sx = ainv[0, 0] * (ux - tx) + ainv[0, 1] * (uy - ty)
    sy = ainv[1, 0] * (ux - tx) + ainv[1, 1] * (uy - ty)
    face = scene.eval(sx, sy, edge / max(domain.scale, 1e-6))

    # eye patch: axis-aligned crop of the rendered scene centered
    # between the (transformed) eye centers, side 2x inter-eye distance
    e0 = amat @ np.array(scene.eyes[0]) + np.array([tx, ty])
    e1 = amat @ np.array(scene.eyes[1]) + np.array([tx, ty])
    center = (e0 + e1) / 2.0
    half = float(np.linalg.norm(e1 - e0))  # half-side = inter-eye distance
    crop = (np.arange(image_size) + 0.5) / image_size * 2.0 - 1.0
    cx, cy = np.meshgrid(center[0] + crop * half,
                         center[1] + crop * half, indexing="xy")
    ex = ainv[0, 0] * (cx - tx) + ainv[0, 1] * (cy - ty)
    ey = ainv[1, 0] * (cx - tx) + ainv[1, 1] * (cy - ty)
    patch_edge = edge * half / max(domain.scale, 1e-6)
    eye = scene.eval(ex, ey, max(patch_edge, 1e-3))

    def finish(img, noise_rng):
        img = domain.contrast * img + domain.brightness
        if domain.vignette:
            rr = ux * ux + uy * uy
            img = img - 0.25 * rr
        if domain.noise_sigma > 0:
            img = img + noise_rng.normal(0.0, domain.noise_sigma, img.shape)
        return np.clip(img, -1.0, 1.0).astype(np.float32)

    face = finish(face, rng)
    eye = finish(eye, rng)
    return Sample(sample_id, face, eye, glance, subject.subject_id,
                  domain.domain_id)


def decode_gaze(eye_patch: np.ndarray, subject: SubjectProfile) -> GlanceClass:
    """Non-learned geometric classifier for clean, untransformed renders.

    Works on the eye patch, where eye centers sit at fixed normalized
    positions (+-0.5, 0). Measures pupil displacement per eye by
    darkness-weighted centroid and picks the nearest class gaze code.
    """
    size = eye_patch.shape[0]
    xs, ys = _grid(size)
    sz = subject.head_size
    inter_eye = 2.0 * _EYE_DX * sz * subject.eye_spacing
    eye_r = _EYE_R * sz / inter_eye          # in patch units
    gain = _GAZE_GAIN * sz / inter_eye
    offs = []
    for ecx in (-0.5, 0.5):
        # window wide enough that a fully displaced pupil is not clipped;
        # the other eye stays outside it
        inside = ((xs - ecx) ** 2 + ys ** 2) <= (eye_r * 1.3) ** 2
        w = np.maximum(0.0, 0.1 - eye_patch) * inside
        if w.sum() <= 0:
            continue
        px = (xs * w).sum() / w.sum()
        py = (ys * w).sum() / w.sum()
        offs.append((px - ecx, py))
    if not offs:
        return GlanceClass.ROAD
    off = np.mean(offs, axis=0) / gain
    dists = {c: np.linalg.norm(off - np.array(GAZE_CODES[c]))
             for c in GlanceClass}
    return min(dists, key=dists.get)


# ---------------------------------------------------------------------------
# dataset assembly


class Dataset:
    def __init__(self, samples: list[Sample], image_size: int,
                 subjects: dict[int, SubjectProfile],
                 domains: dict[int, DomainSpec]):
        self.samples = samples
        self.image_size = image_size
        self.subjects = subjects
        self.domains = domains

    def split(self, name: str) -> list[Sample]:
        return [s for s in self.samples if s.split == name]

    def labeled_train(self, domain_id=None) -> list[Sample]:
        return [s for s in self.samples
                if s.split == "train" and s.labeled
                and (domain_id is None or s.domain_id == domain_id)]

    def unlabeled_train(self, domain_id=None) -> list[Sample]:
        return [s for s in self.samples
                if s.split == "train" and not s.labeled
                and (domain_id is None or s.domain_id == domain_id)]

    def merged(self, other: "Dataset") -> "Dataset":
        if self.image_size != other.image_size:
            raise ConfigError("cannot merge datasets of different image sizes")
        return Dataset(self.samples + other.samples, self.image_size,
                       {**self.subjects, **other.subjects},
                       {**self.domains, **other.domains})


def sample_subjects(n: int, rng, offset_scale: float = 1.0,
                    id_base: int = 0) -> list[SubjectProfile]:
    subs = []
    for i in range(n):
        # keep offsets small enough that the face stays inside the frame
        off = rng.uniform(-0.08, 0.08, size=2) * offset_scale
        subs.append(SubjectProfile(
            subject_id=id_base + i,
            offset=(float(off[0]), float(off[1])),
            head_size=float(rng.uniform(0.88, 1.12)),
            eye_spacing=float(rng.uniform(0.88, 1.12)),
            shade=float(rng.uniform(-0.08, 0.08)),
        ))
    return subs


def _split_counts(n: int, fractions) -> list[int]:
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    need = sum(1 for f in fractions if f > 0)
    if n < need:
        raise ConfigError(
            f"{n} subjects cannot populate {need} non-empty splits")
    counts = [int(math.floor(f * n)) for f in fractions]
    # ensure every non-empty split gets a subject, then spread the rest
    for i, f in enumerate(fractions):
        if f > 0 and counts[i] == 0:
            counts[i] = 1
    while sum(counts) > n:
        counts[counts.index(max(counts))] -= 1
    rema = sorted(range(len(fractions)),
                  key=lambda i: fractions[i] * n - counts[i], reverse=True)
    k = 0
    while sum(counts) < n:
        counts[rema[k % len(rema)]] += 1
        k += 1
    return counts


def generate_dataset(n_subjects: int, n_per_class: int, domain: DomainSpec,
                     split_fractions=(0.6, 0.2, 0.2), seed: int = 0,
                     image_size: int = 32, offset_scale: float = 1.0,
                     imbalance: dict | None = None,
                     subject_id_base: int = 0) -> Dataset:
    """Subject-disjoint dataset for one domain.

    ``imbalance`` maps class -> multiplier on n_per_class (models the
    road-heavy distribution of real glance corpora).
    """
    rng = np.random.default_rng([seed, domain.domain_id, 7])
    subjects = sample_subjects(n_subjects, rng, offset_scale, subject_id_base)
    counts = _split_counts(n_subjects, split_fractions)
    split_names = (["train"] * counts[0] + ["val"] * counts[1]
                   + ["test"] * counts[2])

    samples = []
    # domain-prefixed ids keep samples distinct across merged datasets
    sid = domain.domain_id * 10_000_000
    for subj, split in zip(subjects, split_names):
        for cls in GlanceClass:
            mult = 1.0 if imbalance is None else float(imbalance.get(cls, 1.0))
            n = int(round(n_per_class * mult))
            for idx in range(n):
                srng = np.random.default_rng(
                    [seed, domain.domain_id, subj.subject_id, int(cls), idx])
                s = render_sample(subj, domain, cls, srng, image_size,
                                  sample_id=sid)
                s.split = split
                samples.append(s)
                sid += 1
    return Dataset(samples, image_size, {s.subject_id: s for s in subjects},
                   {domain.domain_id: domain})


def compute_baseline(dataset: Dataset, subject_id: int,
                     allow_population_fallback: bool = False):
    """Per-subject mean road-glance face crop and eye patch (train split,
    labeled samples only)."""
    road = [s for s in dataset.samples
            if s.split == "train" and s.labeled
            and s.subject_id == subject_id and s.glance == GlanceClass.ROAD]
    if not road:
        if not allow_population_fallback:
            raise BaselineUnavailableError(
                f"subject {subject_id} has no labeled road-glance training frames")
        road = [s for s in dataset.samples
                if s.split == "train" and s.labeled
                and s.glance == GlanceClass.ROAD]
        if not road:
            raise BaselineUnavailableError(
                "no labeled road-glance training frames in the dataset")
    face = np.mean([s.face for s in road], axis=0).astype(np.float32)
    eye = np.mean([s.eye for s in road], axis=0).astype(np.float32)
    return face, eye


def apply_label_budget(dataset: Dataset, domain_id: int, fraction: float,
                       rng) -> Dataset:
    """Keep ceil(fraction * n) labeled training samples per class in the
    given domain; the rest become unlabeled. Labels stay on the Sample
    for evaluation bookkeeping only."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"label fraction must be in (0, 1], got {fraction}")
    new_samples = [replace(s) for s in dataset.samples]
    for cls in GlanceClass:
        idxs = [i for i, s in enumerate(new_samples)
                if s.split == "train" and s.domain_id == domain_id
                and s.glance == cls]
        if not idxs:
            continue
        keep = max(1, math.ceil(fraction * len(idxs)))
        chosen = set(rng.permutation(idxs)[:keep].tolist())
        for i in idxs:
            new_samples[i].labeled = i in chosen
    return Dataset(new_samples, dataset.image_size, dataset.subjects,
                   dataset.domains)


def stack_inputs(samples: list[Sample], dtype=np.float32) -> np.ndarray:
    """Batch of face (+) eye two-channel images: [n, S, S, 2]."""
    return np.stack([np.stack([s.face, s.eye], axis=-1)
                     for s in samples]).astype(dtype)


def labels_of(samples: list[Sample]) -> np.ndarray:
    return np.array([int(s.glance) for s in samples], dtype=np.int64)
