"""Line-oriented experiment configuration.

A config file is ``key=value`` lines; blank lines and ``#`` comments
are ignored. Unknown keys are rejected so typos fail loudly. The same
text format is embedded in checkpoints, making (config, seed) pairs
sufficient to reproduce a run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError
from .model import ArchitectureScale
from .training import REGIMES, RegimeConfig
from .losses import LossWeights


@dataclass
class ExperimentConfig:
    # regime and optimization
    regime: str = "standard"
    seed: int = 0
    n_seeds: int = 5
    learning_rate: float = -1.0      # -1 selects the per-regime default
    batch_size: int = -1             # -1 selects the per-regime default
    max_epochs: int = 20
    patience: int = 3
    epsilon: float = 1e-4
    dropout_rate: float = 0.7
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 10.0
    lambda_rev: float = 1.0
    domain_loss_weight: float = 1.0
    finetune_epochs: int = -1        # -1 means until early stop
    label_fraction: float = 1.0
    # ablations
    mse_rec: bool = False
    no_skip: bool = False
    no_rec: bool = False
    no_cls_pretrain: bool = False
    distill_mse: bool = False
    # architecture
    input_size: int = 32
    n_blocks: int = 3
    base_channels: int = 8
    embedding_dim: int = 128
    head_hidden: int = 64
    # synthetic data
    n_subjects: int = 6
    n_per_class: int = 60
    data_seed: int = 100
    offset_scale: float = 1.0

    def validate(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime '{self.regime}'")
        if not 0.0 < self.label_fraction <= 1.0:
            raise ConfigError(
                f"label_fraction must be in (0, 1], got {self.label_fraction}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        return self

    @property
    def scale(self) -> ArchitectureScale:
        return ArchitectureScale(
            input_size=self.input_size, n_blocks=self.n_blocks,
            base_channels=self.base_channels,
            embedding_dim=self.embedding_dim, head_hidden=self.head_hidden)

    def regime_config(self) -> RegimeConfig:
        return RegimeConfig(
            regime=self.regime,
            scale=self.scale,
            loss_weights=LossWeights(self.lambda1, self.lambda2, self.lambda3),
            learning_rate=None if self.learning_rate < 0 else self.learning_rate,
            batch_size=None if self.batch_size < 0 else self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            epsilon=self.epsilon,
            dropout_rate=self.dropout_rate,
            mse_rec=self.mse_rec,
            no_skip=self.no_skip,
            no_rec=self.no_rec,
            no_cls_pretrain=self.no_cls_pretrain,
            seeds=tuple(self.seed + i for i in range(self.n_seeds)),
            label_fraction=self.label_fraction,
            lambda_rev=self.lambda_rev,
            domain_loss_weight=self.domain_loss_weight,
            finetune_epochs=None if self.finetune_epochs < 0
            else self.finetune_epochs,
            distill_mse=self.distill_mse,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = int(v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        seen.add(key)
        ftype = _FIELD_TYPES[key]
        try:
            if ftype == "bool":
                if value not in ("0", "1"):
                    raise ValueError("booleans are written 0 or 1")
                parsed = value == "1"
            elif ftype == "int":
                parsed = int(value)
            elif ftype == "float":
                parsed = float(value)
            else:
                parsed = value
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {e}")
        setattr(cfg, key, parsed)
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    with open(path) as f:
        return parse_config(f.read())
