"""Command-line interface.

Subcommands: gen-data, train, eval, gradcheck, sweep, compare, ablate.
Exit codes: 0 success, 1 runtime or comparison failure, 2 bad usage or
configuration.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import dataio, training as TR
from .config import ExperimentConfig, load_config
from .checkpoint import load_checkpoint, save_checkpoint
from .data import CLEAN_DOMAIN, DOMAIN_1, DOMAIN_2, apply_label_budget, \
    generate_dataset
from .errors import ConfigError, GlanceNetError
from .gradcheck import check_gradients
from .metrics import confusion_matrix, macro_auc, paired_t_test_one_tailed, \
    report_rows
from .model import GlanceModel
from .tensor import Tensor

_DOMAINS = {"clean": CLEAN_DOMAIN, "d1": DOMAIN_1, "d2": DOMAIN_2}

TWO_DATASET_REGIMES = ("multidomain", "mixed", "finetune", "gradrev",
                       "tritraining", "distillation")


def _build_parser():
    p = argparse.ArgumentParser(prog="glancenet")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="render a synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--domain", choices=sorted(_DOMAINS), default="d1")
    g.add_argument("--subjects", type=int, default=6)
    g.add_argument("--per-class", type=int, default=60)
    g.add_argument("--seed", type=int, default=100)
    g.add_argument("--image-size", type=int, default=32)
    g.add_argument("--label-fraction", type=float, default=1.0)
    g.add_argument("--subject-id-base", type=int, default=0)

    t = sub.add_parser("train", help="train one seed and save a checkpoint")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--data", default=None,
                   help="dataset directory (default: synthesize from config)")
    t.add_argument("--data2", default=None,
                   help="second-domain dataset for two-domain regimes")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--report", default=None, help="write per-class TSV here")

    gc = sub.add_parser("gradcheck",
                        help="finite-difference check of the gradients")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tolerance", type=float, default=1e-4)

    sw = sub.add_parser("sweep", help="multi-seed protocol, TSV report")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True, help="output directory")
    sw.add_argument("--data", default=None)
    sw.add_argument("--data2", default=None)

    c = sub.add_parser("compare",
                       help="one-tailed paired t-test between two sweeps")
    c.add_argument("--a", required=True, help="sweep report (candidate)")
    c.add_argument("--b", required=True, help="sweep report (reference)")
    c.add_argument("--alpha", type=float, default=0.05)

    ab = sub.add_parser("ablate", help="baseline vs one ablation flag")
    ab.add_argument("--config", required=True)
    ab.add_argument("--ablation", required=True,
                    choices=["mse_rec", "no_skip", "no_rec", "no_cls_pretrain"])
    ab.add_argument("--out", required=True)
    ab.add_argument("--data", default=None)
    ab.add_argument("--data2", default=None)
    return p


# ---------------------------------------------------------------------------
# dataset plumbing


def _synthesize(cfg: ExperimentConfig, domain, subject_id_base=0):
    return generate_dataset(
        cfg.n_subjects, cfg.n_per_class, domain, seed=cfg.data_seed,
        image_size=cfg.input_size, offset_scale=cfg.offset_scale,
        subject_id_base=subject_id_base)


def _load_datasets(cfg: ExperimentConfig, data_dir, data2_dir):
    """Returns the dataset tuple the regime's trainer expects."""
    two = cfg.regime in TWO_DATASET_REGIMES
    d1 = dataio.load_dataset(data_dir) if data_dir else \
        _synthesize(cfg, DOMAIN_1)
    if not two:
        return (d1,)
    d2 = dataio.load_dataset(data2_dir) if data2_dir else \
        _synthesize(cfg, DOMAIN_2, subject_id_base=1000)
    if cfg.label_fraction < 1.0:
        d2_id = next(iter(d2.domains))
        d2 = apply_label_budget(d2, d2_id, cfg.label_fraction,
                                np.random.default_rng([cfg.data_seed, 99]))
    return d1, d2


def _eval_result(cfg: ExperimentConfig, result, datasets, split="test"):
    model = GlanceModel(cfg.scale, np.random.default_rng(0), result.flags)
    model.load_weights(result.weights)
    target = datasets[0] if len(datasets) == 1 else \
        datasets[0].merged(datasets[1])
    samples = [s for s in target.split(split) if s.labeled]
    baselines = None
    if result.flags.personalized:
        baselines = TR.split_baselines(target, split)
    return macro_auc(TR.evaluate_model(model, samples, baselines))


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args) -> int:
    domain = _DOMAINS[args.domain]
    ds = generate_dataset(args.subjects, args.per_class, domain,
                          seed=args.seed, image_size=args.image_size,
                          subject_id_base=args.subject_id_base)
    if args.label_fraction < 1.0:
        ds = apply_label_budget(ds, domain.domain_id, args.label_fraction,
                                np.random.default_rng([args.seed, 99]))
    dataio.save_dataset(ds, args.out)
    print(f"wrote {len(ds.samples)} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    datasets = _load_datasets(cfg, args.data, args.data2)
    rc = cfg.regime_config()
    result = TR.TRAINERS[cfg.regime](rc, *datasets, cfg.seed)
    for h in result.history:
        if "epoch" in h:
            print(f"epoch {h['epoch']}: val_loss={h['val_loss']:.6f}")
    print(f"best epoch: {result.best_epoch}")
    model = GlanceModel(cfg.scale, np.random.default_rng(0), result.flags)
    model.load_weights(result.weights)
    save_checkpoint(args.out, model, config_text=cfg.to_text())
    report = _eval_result(cfg, result, datasets)
    print(f"test macro AUC: {report.macro_auc:.4f}")
    print(f"saved checkpoint to {args.out}")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model = ckpt.build_model()
    ds = dataio.load_dataset(args.data)
    samples = [s for s in ds.split(args.split) if s.labeled]
    if not samples:
        raise ConfigError(f"no labeled samples in split '{args.split}'")
    baselines = None
    if ckpt.flags.personalized:
        baselines = TR.split_baselines(ds, args.split, allow_fallback=True)
    preds = TR.evaluate_model(model, samples, baselines)
    report = macro_auc(preds)
    for c, auc in sorted(report.per_class_auc.items()):
        print(f"class {c}: AUC {auc:.4f}")
    if report.skipped_classes:
        print(f"skipped classes (absent): {report.skipped_classes}")
    print(f"macro AUC: {report.macro_auc:.4f}")
    mat, empty = confusion_matrix(preds)
    print("confusion (rows=true, row-normalized):")
    for row in mat:
        print("  " + " ".join(f"{v:.2f}" for v in row))
    if args.report:
        _write_report(args.report, report_rows("eval", "-", report))
        print(f"wrote {args.report}")
    return 0


def cmd_gradcheck(args) -> int:
    from . import losses as L
    from .model import ArchitectureScale

    rng = np.random.default_rng(args.seed)
    scale = ArchitectureScale(input_size=8, n_blocks=1, base_channels=2,
                              embedding_dim=8, head_hidden=6)
    model = GlanceModel(scale, rng, dtype=np.float64)
    x = rng.standard_normal((2, 8, 8, 2))
    onehot = L.one_hot([1, 4])

    def build_loss():
        xs = Tensor(x)
        out = model.forward(xs, training=False)
        lb = L.loss_standard(out.class_probs, onehot, xs,
                             out.reconstruction, 1.0)
        return lb.total

    errors = check_gradients(build_loss, model.params)
    worst = max(errors.values())
    for name in sorted(errors, key=errors.get, reverse=True)[:5]:
        print(f"{name}: {errors[name]:.3e}")
    print(f"max relative error: {worst:.3e} (tolerance {args.tolerance:g})")
    if worst >= args.tolerance:
        print("gradcheck FAILED")
        return 1
    print("gradcheck passed")
    return 0


def _write_report(path, rows):
    cols = ["experiment", "seed", "class", "auc"]
    with open(path + ".tmp", "w") as f:
        f.write("\t".join(cols) + "\n")
        for r in rows:
            f.write("\t".join(str(r[c]) for c in cols) + "\n")
    os.replace(path + ".tmp", path)


def _read_macro_aucs(path):
    out = {}
    with open(path) as f:
        header = f.readline().rstrip("\n").split("\t")
        for line in f:
            row = dict(zip(header, line.rstrip("\n").split("\t")))
            if row.get("class") == "macro":
                out[row["seed"]] = float(row["auc"])
    if not out:
        raise ConfigError(f"{path}: no macro AUC rows")
    return out


def _run_sweep(cfg: ExperimentConfig, datasets, label):
    rc = cfg.regime_config()
    rows = []
    macros = []
    for seed in rc.seeds:
        result = TR.TRAINERS[cfg.regime](rc, *datasets, seed)
        report = _eval_result(cfg, result, datasets)
        rows.extend(report_rows(label, seed, report))
        macros.append(report.macro_auc)
        print(f"[{label}] seed {seed}: macro AUC {report.macro_auc:.4f}")
    print(f"[{label}] median macro AUC {np.median(macros):.4f}")
    return rows, macros


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    datasets = _load_datasets(cfg, args.data, args.data2)
    os.makedirs(args.out, exist_ok=True)
    rows, _ = _run_sweep(cfg, datasets, cfg.regime)
    path = os.path.join(args.out, "report.tsv")
    _write_report(path, rows)
    print(f"wrote {path}")
    return 0


def cmd_compare(args) -> int:
    a = _read_macro_aucs(args.a)
    b = _read_macro_aucs(args.b)
    seeds = sorted(set(a) & set(b))
    if len(seeds) < 2:
        raise ConfigError("compare needs >= 2 shared seeds")
    va = [a[s] for s in seeds]
    vb = [b[s] for s in seeds]
    t, p, degenerate = paired_t_test_one_tailed(va, vb)
    print(f"seeds: {seeds}")
    print(f"mean AUC a={np.mean(va):.4f} b={np.mean(vb):.4f}")
    print(f"t={t:.4f} p={p:.6f}" + (" (degenerate)" if degenerate else ""))
    if p < args.alpha:
        print(f"a > b at alpha={args.alpha:g}")
        return 0
    print(f"no significant difference at alpha={args.alpha:g}")
    return 1


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    datasets = _load_datasets(cfg, args.data, args.data2)
    os.makedirs(args.out, exist_ok=True)
    base_rows, base_macros = _run_sweep(cfg, datasets, "baseline")
    setattr(cfg, args.ablation, True)
    cfg.validate()
    abl_rows, abl_macros = _run_sweep(cfg, datasets, args.ablation)
    _write_report(os.path.join(args.out, "report.tsv"), base_rows + abl_rows)
    delta = np.median(abl_macros) - np.median(base_macros)
    print(f"median macro AUC delta ({args.ablation} - baseline): {delta:+.4f}")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"file not found: {e.filename}", file=sys.stderr)
        return 2
    except GlanceNetError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
