"""Training orchestration: the three core regimes (standard,
personalized, multi-domain), the five comparison regimes (mixed,
fine-tuning, gradient reversal, tri-training, distillation), early
stopping on the validation-loss plateau, and the multi-seed protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import losses as L
from . import tensor as T
from .data import Dataset, GlanceClass, Sample, compute_baseline, \
    labels_of, stack_inputs
from .errors import ConfigError, ContractError, SequencingError
from .metrics import MetricsReport, ScoredPredictions, macro_auc
from .model import ArchitectureScale, DESK_SCALE, GlanceModel, ModelFlags
from .optim import Adam
from .tensor import Tensor

REGIMES = ("standard", "personalized", "multidomain", "mixed", "finetune",
           "gradrev", "tritraining", "distillation")


@dataclass
class RegimeConfig:
    regime: str = "standard"
    scale: ArchitectureScale = field(default_factory=lambda: DESK_SCALE)
    loss_weights: L.LossWeights = field(default_factory=L.LossWeights)
    learning_rate: float | None = None   # per-regime default when None
    batch_size: int | None = None
    max_epochs: int = 20
    patience: int = 3
    epsilon: float = 1e-4
    dropout_rate: float = 0.7
    # ablations
    mse_rec: bool = False
    no_skip: bool = False
    no_rec: bool = False
    no_cls_pretrain: bool = False
    # regime-specific knobs
    seeds: tuple = (0, 1, 2, 3, 4)
    label_fraction: float = 1.0
    lambda_rev: float = 1.0
    domain_loss_weight: float = 1.0
    finetune_epochs: int | None = None
    reset_optimizer_on_finetune: bool = True
    distill_mse: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime '{self.regime}'; "
                              f"expected one of {REGIMES}")

    @property
    def lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 1e-3 if self.regime == "personalized" else 1e-4

    @property
    def batch(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 16 if self.regime == "personalized" else 8

    def model_flags(self, with_domain_head=False) -> ModelFlags:
        return ModelFlags(
            personalized=(self.regime == "personalized"),
            use_skips=not self.no_skip,
            with_decoder=not self.no_rec,
            with_domain_head=with_domain_head,
            dropout_rate=self.dropout_rate,
        )


class EarlyStopper:
    """Plateau rule: strict relative improvement > epsilon resets the
    patience counter; `patience` consecutive non-improving epochs stop
    training. Best epoch is the argmin of validation loss."""

    def __init__(self, patience: int = 3, epsilon: float = 1e-4):
        self.patience = patience
        self.epsilon = epsilon
        self.best = math.inf
        self.best_epoch = 0
        self.since_improvement = 0
        self.epoch = 0

    def update(self, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        self.epoch += 1
        if math.isinf(self.best) or \
                (self.best - val_loss) > self.epsilon * abs(self.best):
            self.best = val_loss
            self.best_epoch = self.epoch
            self.since_improvement = 0
        else:
            self.since_improvement += 1
        return self.since_improvement >= self.patience


@dataclass
class TrainResult:
    weights: dict[str, np.ndarray]
    history: list[dict]
    best_epoch: int
    flags: ModelFlags
    scale: ArchitectureScale


def _batches(n: int, batch_size: int, perm) -> list[np.ndarray]:
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def _cycled_batches(n: int, batch_size: int, steps: int, rng):
    """Endless stratified-ish stream: reshuffles whenever exhausted."""
    out = []
    pool = []
    while len(out) < steps:
        if len(pool) < batch_size:
            pool = list(rng.permutation(n)) + pool
        out.append(np.array([pool.pop() for _ in range(batch_size)]))
    return out


def make_model(cfg: RegimeConfig, seed: int, with_domain_head=False,
               flags: ModelFlags | None = None) -> GlanceModel:
    rng = np.random.default_rng([seed, 3])
    return GlanceModel(cfg.scale, rng,
                       flags or cfg.model_flags(with_domain_head))


# ---------------------------------------------------------------------------
# evaluation helpers


def evaluate_model(model: GlanceModel, samples: list[Sample],
                   baselines: dict | None = None,
                   batch_size: int = 64) -> ScoredPredictions:
    """Deterministic eval-mode predictions (encoder + head only)."""
    probs = []
    for i in range(0, len(samples), batch_size):
        chunk = samples[i:i + batch_size]
        x = Tensor(stack_inputs(chunk))
        if model.flags.personalized:
            if baselines is None:
                raise ContractError(
                    "personalized evaluation requires subject baselines")
            b = Tensor(np.stack([
                np.stack(baselines[s.subject_id], axis=-1) for s in chunk]))
            emb_c, _ = model.encode(x)
            emb_b, _ = model.encode(b)
            head_in = T.concat([T.sub(emb_c, emb_b), emb_c], axis=-1)
            p = model.predict(head_in, training=False,
                              rng=np.random.default_rng(0))
        else:
            emb, _ = model.encode(x)
            p = model.predict(emb, training=False,
                              rng=np.random.default_rng(0))
        probs.append(p.data)
    return ScoredPredictions(
        probs=np.concatenate(probs, axis=0),
        true=labels_of(samples),
        sample_ids=np.array([s.sample_id for s in samples]))


def macro_auc_of(model: GlanceModel, samples: list[Sample],
                 baselines: dict | None = None) -> float:
    return macro_auc(evaluate_model(model, samples, baselines)).macro_auc


def split_baselines(dataset: Dataset, split: str,
                    allow_fallback: bool = False) -> dict:
    """Baselines for the subjects of one split.

    Training baselines come from labeled train road frames; for val and
    test subjects (disjoint from training) the same road-frame average
    is taken over their own split, standing in for the calibration
    stream a deployed system observes for a new driver."""
    out = {}
    subject_ids = sorted({s.subject_id for s in dataset.samples
                          if s.split == split})
    for sid in subject_ids:
        if split == "train":
            out[sid] = compute_baseline(dataset, sid, allow_fallback)
        else:
            road = [s for s in dataset.samples
                    if s.split == split and s.subject_id == sid
                    and s.glance == GlanceClass.ROAD]
            if not road:
                from .errors import BaselineUnavailableError
                if not allow_fallback:
                    raise BaselineUnavailableError(
                        f"subject {sid} has no road frames in split {split}")
                continue
            out[sid] = (np.mean([s.face for s in road], axis=0).astype(np.float32),
                        np.mean([s.eye for s in road], axis=0).astype(np.float32))
    return out


# ---------------------------------------------------------------------------
# core supervised loop (standard / mixed / fine-tuning phases)


def _val_loss_standard(cfg, model, val_samples, batch_size=64) -> float:
    total = 0.0
    count = 0
    for i in range(0, len(val_samples), batch_size):
        chunk = val_samples[i:i + batch_size]
        x = Tensor(stack_inputs(chunk))
        out = model.forward(x, training=False)
        lb = L.loss_standard(out.class_probs, L.one_hot(labels_of(chunk)),
                             x, out.reconstruction,
                             cfg.loss_weights.lambda1, cfg.mse_rec)
        total += lb.total.item() * len(chunk)
        count += len(chunk)
    return total / max(count, 1)


def _supervised_loop(cfg: RegimeConfig, model: GlanceModel,
                     train_samples: list[Sample], val_samples: list[Sample],
                     seed: int, max_epochs: int | None = None,
                     trainable: dict | None = None,
                     label_source=None) -> TrainResult:
    """Shared single-stream loop; label_source(sample) lets tri-training
    and distillation substitute proxy/soft targets."""
    if not train_samples or not val_samples:
        raise ConfigError("empty train or validation split")
    trainable = trainable if trainable is not None else model.params
    rng = np.random.default_rng([seed, 17])
    opt = Adam(trainable, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    history = []
    best_weights = model.copy_weights()
    lam = cfg.loss_weights.lambda1
    for epoch in range(1, (max_epochs or cfg.max_epochs) + 1):
        perm = rng.permutation(len(train_samples))
        epoch_loss = 0.0
        for idxs in _batches(len(train_samples), cfg.batch, perm):
            chunk = [train_samples[i] for i in idxs]
            x = Tensor(stack_inputs(chunk))
            out = model.forward(x, training=True, rng=rng)
            if label_source is None:
                target = L.one_hot(labels_of(chunk))
            else:
                target = np.stack([label_source(s) for s in chunk])
            lb = L.loss_standard(out.class_probs, target, x,
                                 out.reconstruction, lam, cfg.mse_rec)
            T.zero_grads(trainable.values())
            lb.total.backward(params=trainable.values())
            opt.step()
            epoch_loss += lb.total.item() * len(chunk)
        val_loss = _val_loss_standard(cfg, model, val_samples)
        history.append({"epoch": epoch,
                        "train_loss": epoch_loss / len(train_samples),
                        "val_loss": val_loss})
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss)
        if improved or epoch == 1:
            best_weights = model.copy_weights()
        if stop:
            break
    model.load_weights(best_weights)
    return TrainResult(best_weights, history, stopper.best_epoch,
                       model.flags, cfg.scale)


def train_standard(cfg: RegimeConfig, dataset: Dataset, seed: int,
                   model: GlanceModel | None = None) -> TrainResult:
    if cfg.no_cls_pretrain:
        return _train_reconstruction_first(cfg, dataset, seed)
    model = model or make_model(cfg, seed)
    return _supervised_loop(cfg, model, dataset.labeled_train(),
                            dataset.split("val"), seed)


# ---------------------------------------------------------------------------
# "reconstruction first" two-phase ablation (no classification pretraining)


def _train_reconstruction_first(cfg: RegimeConfig, dataset: Dataset,
                                seed: int) -> TrainResult:
    """Phase 1: encoder/decoder on reconstruction alone. Phase 2: freeze
    them and train the prediction head with the classification loss."""
    if cfg.no_rec:
        raise ConfigError("no_cls_pretrain requires the decoder")
    model = make_model(cfg, seed)
    train_samples = dataset.labeled_train()
    val_samples = dataset.split("val")
    rng = np.random.default_rng([seed, 17])
    body = {n: p for n, p in model.params.items()
            if n.startswith(("enc/", "dec/"))}
    opt = Adam(body, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    best_weights = model.copy_weights()
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(len(train_samples))
        for idxs in _batches(len(train_samples), cfg.batch, perm):
            chunk = [train_samples[i] for i in idxs]
            x = Tensor(stack_inputs(chunk))
            out = model.forward(x, training=True, rng=rng,
                                with_prediction=False)
            rec = L.loss_rec(x, out.reconstruction, cfg.mse_rec)
            T.zero_grads(body.values())
            rec.backward(params=body.values())
            opt.step()
        val = 0.0
        for i in range(0, len(val_samples), 64):
            chunk = val_samples[i:i + 64]
            x = Tensor(stack_inputs(chunk))
            out = model.forward(x, training=False, with_prediction=False)
            val += L.loss_rec(x, out.reconstruction, cfg.mse_rec).item() * len(chunk)
        val /= len(val_samples)
        history.append({"epoch": epoch, "phase": "reconstruction",
                        "val_loss": val})
        improved = val < stopper.best
        stop = stopper.update(val)
        if improved or epoch == 1:
            best_weights = model.copy_weights()
        if stop:
            break
    model.load_weights(best_weights)

    head = {n: p for n, p in model.params.items() if n.startswith("head/")}
    head_cfg = replace(cfg, no_cls_pretrain=False)
    result = _supervised_loop(head_cfg, model, train_samples, val_samples,
                              seed + 1000, trainable=head)
    result.history = history + result.history
    return result


# ---------------------------------------------------------------------------
# personalized regime


def train_personalized(cfg: RegimeConfig, dataset: Dataset,
                       seed: int) -> TrainResult:
    model = make_model(cfg, seed)
    train_samples = dataset.labeled_train()
    val_samples = dataset.split("val")
    if not train_samples or not val_samples:
        raise ConfigError("empty train or validation split")
    base_train = split_baselines(dataset, "train")
    base_val = split_baselines(dataset, "val")
    rng = np.random.default_rng([seed, 17])
    opt = Adam(model.params, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    best_weights = model.copy_weights()
    history = []
    lam = cfg.loss_weights.lambda2

    def batch_loss(chunk, baselines, training):
        x = Tensor(stack_inputs(chunk))
        b = Tensor(np.stack([np.stack(baselines[s.subject_id], axis=-1)
                             for s in chunk]))
        cur, base, _ = model.forward_personalized(x, b, training, rng)
        return L.loss_personalized(
            cur.class_probs, L.one_hot(labels_of(chunk)),
            x, cur.reconstruction, b, base.reconstruction,
            lam, cfg.mse_rec)

    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(len(train_samples))
        epoch_loss = 0.0
        for idxs in _batches(len(train_samples), cfg.batch, perm):
            chunk = [train_samples[i] for i in idxs]
            lb = batch_loss(chunk, base_train, training=True)
            T.zero_grads(model.params.values())
            lb.total.backward(params=model.params.values())
            opt.step()
            epoch_loss += lb.total.item() * len(chunk)
        val_loss = 0.0
        for i in range(0, len(val_samples), 64):
            chunk = val_samples[i:i + 64]
            val_loss += batch_loss(chunk, base_val,
                                   training=False).total.item() * len(chunk)
        val_loss /= len(val_samples)
        history.append({"epoch": epoch,
                        "train_loss": epoch_loss / len(train_samples),
                        "val_loss": val_loss})
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss)
        if improved or epoch == 1:
            best_weights = model.copy_weights()
        if stop:
            break
    model.load_weights(best_weights)
    return TrainResult(best_weights, history, stopper.best_epoch,
                       model.flags, cfg.scale)


# ---------------------------------------------------------------------------
# multi-domain regime


def train_multidomain(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                      seed: int) -> TrainResult:
    """Each step draws labeled d1, labeled d2, and unlabeled d2
    mini-batches; one combined loss, one weight update. The unlabeled
    batch contributes through reconstruction only."""
    model = make_model(cfg, seed)
    d1_id = next(iter(d1.domains))
    d2_id = next(iter(d2.domains))
    lab1 = d1.labeled_train(d1_id)
    lab2 = d2.labeled_train(d2_id)
    unl2 = d2.unlabeled_train(d2_id)
    if not lab1 or not lab2:
        raise ConfigError("multidomain training needs labeled data in both domains")
    rng = np.random.default_rng([seed, 17])
    opt = Adam(model.params, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    best_weights = model.copy_weights()
    history = []
    lam = cfg.loss_weights.lambda3
    steps = math.ceil(len(lab1) / cfg.batch)

    def stream_loss(chunk1, chunk2, chunk2u, training):
        x1 = Tensor(stack_inputs(chunk1))
        x2 = Tensor(stack_inputs(chunk2))
        o1 = model.forward(x1, training=training, rng=rng)
        o2 = model.forward(x2, training=training, rng=rng)
        if chunk2u:
            x2u = Tensor(stack_inputs(chunk2u))
            o2u = model.forward(x2u, training=training, rng=rng,
                                with_prediction=False)
            rec_u, in_u = o2u.reconstruction, x2u
        else:
            rec_u, in_u = None, None
        return L.loss_multidomain(
            o1.class_probs, L.one_hot(labels_of(chunk1)),
            o2.class_probs, L.one_hot(labels_of(chunk2)),
            x1, o1.reconstruction, x2, o2.reconstruction,
            in_u, rec_u, lam, cfg.mse_rec)

    val1 = d1.split("val")
    val2 = [s for s in d2.split("val") if s.labeled]

    for epoch in range(1, cfg.max_epochs + 1):
        b1 = _batches(len(lab1), cfg.batch, rng.permutation(len(lab1)))
        b2 = _cycled_batches(len(lab2), min(cfg.batch, len(lab2)), steps, rng)
        b2u = _cycled_batches(len(unl2), min(cfg.batch, len(unl2)), steps,
                              rng) if unl2 else [None] * steps
        epoch_loss = 0.0
        for i1, i2, i2u in zip(b1, b2, b2u):
            chunk1 = [lab1[i] for i in i1]
            chunk2 = [lab2[i] for i in i2]
            chunk2u = [unl2[i] for i in i2u] if i2u is not None else []
            lb = stream_loss(chunk1, chunk2, chunk2u, training=True)
            T.zero_grads(model.params.values())
            lb.total.backward(params=model.params.values())
            opt.step()
            epoch_loss += lb.total.item()
        val_loss = 0.0
        nb = 0
        for i in range(0, min(len(val1), len(val2), 512), 64):
            lb = stream_loss(val1[i:i + 64], val2[i:i + 64], [],
                             training=False)
            val_loss += lb.total.item()
            nb += 1
        val_loss /= max(nb, 1)
        history.append({"epoch": epoch, "train_loss": epoch_loss / steps,
                        "val_loss": val_loss})
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss)
        if improved or epoch == 1:
            best_weights = model.copy_weights()
        if stop:
            break
    model.load_weights(best_weights)
    return TrainResult(best_weights, history, stopper.best_epoch,
                       model.flags, cfg.scale)


# ---------------------------------------------------------------------------
# comparison regimes


def train_mixed(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                seed: int) -> TrainResult:
    """Pool the labeled samples of both domains and train normally."""
    merged = d1.merged(d2)
    model = make_model(cfg, seed)
    val = [s for s in merged.split("val") if s.labeled]
    return _supervised_loop(cfg, model, merged.labeled_train(), val, seed)


def train_finetune(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                   seed: int) -> TrainResult:
    """Train on d1, then fine-tune the best snapshot on labeled d2."""
    first = train_standard(cfg, d1, seed)
    if first.weights is None:
        raise SequencingError("fine-tuning requires a trained d1 snapshot")
    model = make_model(cfg, seed)
    model.load_weights(first.weights)
    ft_epochs = cfg.finetune_epochs
    if ft_epochs == 0:
        return first
    lab2 = d2.labeled_train()
    val2 = [s for s in d2.split("val") if s.labeled]
    # fresh optimizer state on the regime transition
    result = _supervised_loop(cfg, model, lab2, val2, seed + 500,
                              max_epochs=ft_epochs)
    result.history = first.history + result.history
    return result


def train_gradrev(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                  seed: int) -> TrainResult:
    """Mixed training plus a domain classifier behind gradient reversal;
    unlabeled d2 samples feed the domain head too."""
    model = make_model(cfg, seed, with_domain_head=True)
    d1_id = next(iter(d1.domains))
    merged = d1.merged(d2)
    labeled = merged.labeled_train()
    all_train = [s for s in merged.samples if s.split == "train"]
    val = [s for s in merged.split("val") if s.labeled]
    if not labeled or not val:
        raise ConfigError("empty train or validation split")
    rng = np.random.default_rng([seed, 17])
    opt = Adam(model.params, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    best_weights = model.copy_weights()
    history = []
    steps = math.ceil(len(labeled) / cfg.batch)

    for epoch in range(1, cfg.max_epochs + 1):
        bl = _batches(len(labeled), cfg.batch, rng.permutation(len(labeled)))
        bd = _cycled_batches(len(all_train), cfg.batch, steps, rng)
        epoch_loss = 0.0
        for il, idm in zip(bl, bd):
            chunk = [labeled[i] for i in il]
            x = Tensor(stack_inputs(chunk))
            out = model.forward(x, training=True, rng=rng)
            lb = L.loss_standard(out.class_probs, L.one_hot(labels_of(chunk)),
                                 x, out.reconstruction,
                                 cfg.loss_weights.lambda1, cfg.mse_rec)
            dchunk = [all_train[i] for i in idm]
            xd = Tensor(stack_inputs(dchunk))
            od = model.forward(xd, training=True, rng=rng,
                               with_prediction=False, with_domain=True,
                               lambda_rev=cfg.lambda_rev)
            dom_target = L.one_hot(
                [0 if s.domain_id == d1_id else 1 for s in dchunk],
                n_classes=model.flags.n_domains)
            dom_ce = L.loss_cls(od.domain_probs, dom_target)
            total = T.add(lb.total, T.scale(dom_ce, cfg.domain_loss_weight))
            T.zero_grads(model.params.values())
            total.backward(params=model.params.values())
            opt.step()
            epoch_loss += total.item()
        val_loss = _val_loss_standard(cfg, model, val)
        history.append({"epoch": epoch, "train_loss": epoch_loss / steps,
                        "val_loss": val_loss})
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss)
        if improved or epoch == 1:
            best_weights = model.copy_weights()
        if stop:
            break
    model.load_weights(best_weights)
    return TrainResult(best_weights, history, stopper.best_epoch,
                       model.flags, cfg.scale)


def _stratified_parts(samples: list[Sample], n_parts: int, rng) -> list[list[Sample]]:
    parts = [[] for _ in range(n_parts)]
    groups = {}
    for s in samples:
        groups.setdefault((int(s.glance), s.domain_id), []).append(s)
    for key in sorted(groups):
        members = groups[key]
        order = rng.permutation(len(members))
        for rank, idx in enumerate(order):
            parts[rank % n_parts].append(members[idx])
    return parts


def train_tritraining(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                      seed: int) -> TrainResult:
    """Two models vote proxy labels for the held-out third split; a
    third model trains on the agreed samples only."""
    merged = d1.merged(d2)
    labeled = merged.labeled_train()
    val = [s for s in merged.split("val") if s.labeled]
    rng = np.random.default_rng([seed, 41])
    s1, s2, s3 = _stratified_parts(labeled, 3, rng)

    model_a = make_model(cfg, seed)
    model_b = make_model(cfg, seed + 1)
    _supervised_loop(cfg, model_a, s1, val, seed)
    _supervised_loop(cfg, model_b, s2, val, seed + 1)

    preds_a = evaluate_model(model_a, s3).probs.argmax(axis=1)
    preds_b = evaluate_model(model_b, s3).probs.argmax(axis=1)
    agree = preds_a == preds_b
    if not agree.any():
        raise ContractError(
            f"tri-training: models never agreed on any of the {len(s3)} "
            "held-out samples; no proxy-labeled set to train on")
    proxy = {s.sample_id: int(preds_a[i])
             for i, s in enumerate(s3) if agree[i]}
    proxy_set = [s for s in s3 if s.sample_id in proxy]

    model_c = make_model(cfg, seed + 2)
    result = _supervised_loop(
        cfg, model_c, proxy_set, val, seed + 2,
        label_source=lambda s: L.one_hot([proxy[s.sample_id]])[0])
    result.history.insert(0, {"agreement_rate": float(agree.mean()),
                              "proxy_set_size": len(proxy_set)})
    return result


def train_distillation(cfg: RegimeConfig, d1: Dataset, d2: Dataset,
                       seed: int) -> TrainResult:
    """Teacher on one half of the pooled labeled data; student trains
    with true labels on the d1 part of the other half and the teacher's
    soft outputs (temperature 1) on its d2 part."""
    d1_id = next(iter(d1.domains))
    merged = d1.merged(d2)
    labeled = merged.labeled_train()
    val = [s for s in merged.split("val") if s.labeled]
    rng = np.random.default_rng([seed, 43])
    half1, half2 = _stratified_parts(labeled, 2, rng)

    teacher = make_model(cfg, seed)
    _supervised_loop(cfg, teacher, half1, val, seed)

    d1_part = [s for s in half2 if s.domain_id == d1_id]
    d2_part = [s for s in half2 if s.domain_id != d1_id]
    soft = {}
    if d2_part:
        tprobs = evaluate_model(teacher, d2_part).probs
        soft = {s.sample_id: tprobs[i] for i, s in enumerate(d2_part)}

    def target_of(s: Sample):
        if s.sample_id in soft:
            return soft[s.sample_id].astype(np.float32)
        return L.one_hot([int(s.glance)])[0]

    student = make_model(cfg, seed + 1)
    if cfg.distill_mse:
        result = _distill_mse_loop(cfg, student, d1_part, d2_part, soft,
                                   val, seed + 1)
    else:
        result = _supervised_loop(cfg, student, d1_part + d2_part, val,
                                  seed + 1, label_source=target_of)
    return result


def _distill_mse_loop(cfg, student, d1_part, d2_part, soft, val, seed):
    """MSE variant of the soft-target term (flag-selected)."""
    train_samples = d1_part + d2_part
    rng = np.random.default_rng([seed, 17])
    opt = Adam(student.params, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience, cfg.epsilon)
    best_weights = student.copy_weights()
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(len(train_samples))
        for idxs in _batches(len(train_samples), cfg.batch, perm):
            chunk = [train_samples[i] for i in idxs]
            x = Tensor(stack_inputs(chunk))
            out = student.forward(x, training=True, rng=rng)
            loss = None
            hard_mask = np.array([s.sample_id not in soft for s in chunk])
            if hard_mask.any():
                target = L.one_hot([int(s.glance) if m else 0
                                    for s, m in zip(chunk, hard_mask)])
                target[~hard_mask] = out.class_probs.data[~hard_mask]
                loss = L.loss_cls(out.class_probs, target)
            if (~hard_mask).any():
                starget = np.stack([
                    soft[s.sample_id] if s.sample_id in soft
                    else out.class_probs.data[i]
                    for i, s in enumerate(chunk)]).astype(np.float32)
                mse = T.mean_sq_error(out.class_probs, Tensor(starget))
                loss = mse if loss is None else T.add(loss, mse)
            if out.reconstruction is not None:
                rec = L.loss_rec(x, out.reconstruction, cfg.mse_rec)
                loss = T.add(loss, T.scale(rec, cfg.loss_weights.lambda1))
            T.zero_grads(student.params.values())
            loss.backward(params=student.params.values())
            opt.step()
        val_loss = _val_loss_standard(cfg, student, val)
        history.append({"epoch": epoch, "val_loss": val_loss})
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss)
        if improved or epoch == 1:
            best_weights = student.copy_weights()
        if stop:
            break
    student.load_weights(best_weights)
    return TrainResult(best_weights, history, stopper.best_epoch,
                       student.flags, cfg.scale)


# ---------------------------------------------------------------------------
# multi-seed protocol


def run_seeds(train_fn, cfg: RegimeConfig, *datasets) -> list[TrainResult]:
    return [train_fn(cfg, *datasets, seed) for seed in cfg.seeds]


TRAINERS = {
    "standard": train_standard,
    "personalized": train_personalized,
    "multidomain": train_multidomain,
    "mixed": train_mixed,
    "finetune": train_finetune,
    "gradrev": train_gradrev,
    "tritraining": train_tritraining,
    "distillation": train_distillation,
}
