"""Acceptance suite: ten end-to-end criteria, one test each.

Each test finishes by printing a single PASS line (visible with -v -s
or on failure); an assertion failure is the FAIL line. The directional
experiments (3-6) train real models on the synthetic corpus, so this
file dominates the suite's runtime.
"""

import time

import numpy as np
import pytest

from glancenet import losses as L
from glancenet import tensor as T
from glancenet import training as TR
from glancenet.checkpoint import load_checkpoint, save_checkpoint
from glancenet.config import parse_config
from glancenet.data import DOMAIN_1, DOMAIN_2, DomainSpec, apply_label_budget, \
    generate_dataset, labels_of, stack_inputs
from glancenet.dataio import load_dataset, save_dataset
from glancenet.gradcheck import check_gradients
from glancenet.metrics import macro_auc, paired_t_test_one_tailed, \
    roc_auc_binary, roc_auc_pairwise
from glancenet.model import ArchitectureScale, FULL_SCALE, GlanceModel, \
    ModelFlags
from glancenet.tensor import Tensor


def _report(criterion, detail):
    print(f"\n[criterion {criterion}] PASS: {detail}")


def _median_sweep(train_fn, cfg, datasets, eval_samples, baseline_split=None,
                  seeds=(0, 1, 2, 3, 4)):
    aucs = []
    for seed in seeds:
        result = train_fn(cfg, *datasets, seed)
        model = GlanceModel(cfg.scale, np.random.default_rng(0), result.flags)
        model.load_weights(result.weights)
        baselines = None
        if result.flags.personalized:
            baselines = TR.split_baselines(baseline_split[0],
                                           baseline_split[1])
        aucs.append(TR.macro_auc_of(model, eval_samples, baselines))
    return float(np.median(aucs)), aucs


# ---------------------------------------------------------------------------
# 1. gradient correctness for every op and composite loss


def test_criterion_1_gradient_correctness():
    t0 = time.time()
    tol = 1e-4
    rng = np.random.default_rng(0)
    worst = {}

    def check(label, build, params, h=1e-4):
        # the composite losses contain |.| and leaky-relu kinks; a smaller
        # step (h=1e-5) keeps the finite difference off elements that
        # straddle one; smooth primitive checks use the default 1e-4
        errors = check_gradients(build, params, h)
        worst[label] = max(errors.values())
        assert worst[label] < tol, f"{label}: {errors}"

    def p(shape):
        return Tensor(rng.standard_normal(shape), requires_grad=True,
                      dtype=np.float64)

    # primitive ops under a scalar reduction
    x = p((2, 6, 6, 2))
    k = p((3, 3, 2, 3))
    for stride in (1, 2):
        for dil in (1, 2):
            check(f"conv2d s{stride} d{dil}",
                  lambda s=stride, d=dil: T.tensor_sum(
                      T.tanh(T.conv2d(x, k, s, d))), {"x": x, "k": k})
    w, b = p((72, 5)), p((5,))
    xf = p((3, 72))
    check("dense", lambda: T.tensor_sum(T.tanh(T.dense(xf, w, b))),
          {"x": xf, "w": w, "b": b})
    ps_in = p((1, 3, 3, 8))
    ps_side = p((1, 6, 6, 1))
    check("pixel_shuffle+concat+reshape",
          lambda: T.tensor_sum(T.tanh(T.reshape(
              T.concat([T.pixel_shuffle(ps_in), ps_side], -1),
              (1, -1)))), {"x": ps_in, "side": ps_side})
    lr_in = p((4, 7))
    check("leaky_relu+mean", lambda: T.tensor_mean(T.leaky_relu(lr_in)),
          {"x": lr_in})
    sm_in = p((4, 6))
    oh = np.eye(6)[[0, 2, 4, 5]]
    check("softmax+cross_entropy",
          lambda: T.cross_entropy(T.softmax(sm_in), oh), {"x": sm_in})
    a1, b1 = p((2, 4, 4, 2)), p((2, 4, 4, 2))
    check("mae", lambda: T.mean_abs_error(a1, b1), {"a": a1, "b": b1})
    check("mse", lambda: T.mean_sq_error(a1, b1), {"a": a1, "b": b1})
    # grad_reversal contract: backward is exactly -lambda times the true
    # gradient, so compare against the finite difference of the forward
    from glancenet.gradcheck import finite_diff
    gr_in = p((3, 5))
    build_rev = lambda: T.tensor_sum(T.tanh(T.grad_reversal(gr_in, 0.7)))
    T.zero_grads([gr_in])
    build_rev().backward(params=[gr_in])
    fd = finite_diff(build_rev, gr_in)
    err = np.max(np.abs(gr_in.grad - (-0.7) * fd)
                 / np.maximum(1.0, np.abs(fd)))
    worst["grad_reversal"] = float(err)
    assert err < tol, f"grad_reversal: {err}"
    T.zero_grads([gr_in])

    def fixed_dropout(t):
        return T.dropout(t, 0.4, True, np.random.default_rng(99))

    dr_in = p((4, 6))
    check("dropout(fixed mask)",
          lambda: T.tensor_sum(T.tanh(fixed_dropout(dr_in))), {"x": dr_in})

    # composite losses through a real (tiny, float64) model
    scale = ArchitectureScale(input_size=8, n_blocks=1, base_channels=2,
                              embedding_dim=8, head_hidden=6)
    xs_np = rng.standard_normal((2, 8, 8, 2))
    onehot = L.one_hot([1, 4])

    std = GlanceModel(scale, rng, dtype=np.float64)

    def build_standard():
        xs = Tensor(xs_np)
        out = std.forward(xs, training=False)
        return L.loss_standard(out.class_probs, onehot, xs,
                               out.reconstruction, 1.0).total

    check("loss_standard e2e", build_standard, std.params, h=1e-5)

    per = GlanceModel(scale, rng, ModelFlags(personalized=True),
                      dtype=np.float64)
    base_np = rng.standard_normal((2, 8, 8, 2))

    def build_personalized():
        xs, bs = Tensor(xs_np), Tensor(base_np)
        cur, base, _ = per.forward_personalized(xs, bs, training=False)
        return L.loss_personalized(cur.class_probs, onehot, xs,
                                   cur.reconstruction, bs,
                                   base.reconstruction, 1.0).total

    check("loss_personalized e2e", build_personalized, per.params,
          h=1e-5)

    md = GlanceModel(scale, rng, dtype=np.float64)
    x2_np = rng.standard_normal((2, 8, 8, 2))
    xu_np = rng.standard_normal((3, 8, 8, 2))

    def build_multidomain():
        x1, x2, xu = Tensor(xs_np), Tensor(x2_np), Tensor(xu_np)
        o1 = md.forward(x1, training=False)
        o2 = md.forward(x2, training=False)
        ou = md.forward(xu, training=False, with_prediction=False)
        return L.loss_multidomain(
            o1.class_probs, onehot, o2.class_probs, onehot,
            x1, o1.reconstruction, x2, o2.reconstruction,
            xu, ou.reconstruction, 10.0).total

    check("loss_multidomain e2e", build_multidomain, md.params,
          h=1e-5)

    dm = GlanceModel(scale, rng, ModelFlags(with_domain_head=True,
                                            with_decoder=False),
                     dtype=np.float64)
    dom_oh = np.array([[1.0, 0.0], [0.0, 1.0]])

    def build_gradrev_dom():
        xs = Tensor(xs_np)
        out = dm.forward(xs, training=False, with_domain=True,
                         lambda_rev=1.0)
        return L.loss_cls(out.domain_probs, dom_oh)

    # through the reversal layer the encoder's analytic gradient is the
    # *negative* of the loss gradient, so the contract is grad == -fd for
    # encoder parameters and grad == fd for the domain head
    T.zero_grads(dm.params.values())
    build_gradrev_dom().backward(params=list(dm.params.values()))
    analytic = {n: q.grad.copy() for n, q in dm.params.items()}
    gr_errs = {}
    for name, q in dm.params.items():
        fd = finite_diff(build_gradrev_dom, q, 1e-5)
        sign = -1.0 if name.startswith("enc/") else 1.0
        denom = np.maximum(1.0, np.maximum(np.abs(analytic[name]),
                                           np.abs(fd)))
        gr_errs[name] = float(
            np.max(np.abs(analytic[name] - sign * fd) / denom))
    T.zero_grads(dm.params.values())
    worst["gradrev domain loss e2e"] = max(gr_errs.values())
    assert worst["gradrev domain loss e2e"] < tol, \
        f"gradrev domain loss e2e: {gr_errs}"

    elapsed = time.time() - t0
    assert elapsed < 300, f"gradcheck suite took {elapsed:.0f}s (budget 300s)"
    _report(1, f"max rel err {max(worst.values()):.2e} over "
               f"{len(worst)} checks in {elapsed:.0f}s (tol 1e-4)")


# ---------------------------------------------------------------------------
# 2. AUC oracle equivalence


def test_criterion_2_auc_oracle_equivalence():
    assert roc_auc_binary([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    rng = np.random.default_rng(7)
    for case in range(1000):
        n = int(rng.integers(2, 1001))
        levels = int(rng.integers(1, 50))
        scores = np.round(rng.random(n) * levels, 2)  # heavy ties
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        fast = roc_auc_binary(scores, labels)
        oracle = roc_auc_pairwise(scores, labels)
        assert fast == oracle, f"case {case}: {fast} != {oracle}"
    _report(2, "fast AUC == pairwise oracle on 1000 randomized cases; "
               "hand case == 0.75")


# ---------------------------------------------------------------------------
# 3. reconstruction regularization direction (full vs no-decoder)


def test_criterion_3_reconstruction_direction():
    t0 = time.time()
    ds = generate_dataset(5, 200, DOMAIN_1, seed=31)
    train = ds.labeled_train()
    per_class = sum(1 for s in train if int(s.glance) == 0)
    assert per_class >= 600
    assert len({s.subject_id for s in train}) >= 3

    test_samples = ds.split("test")
    full_cfg = TR.RegimeConfig(regime="standard", max_epochs=3)
    nodec_cfg = TR.RegimeConfig(regime="standard", max_epochs=3, no_rec=True)
    med_full, full_aucs = _median_sweep(TR.train_standard, full_cfg, (ds,),
                                        test_samples)
    med_nodec, nodec_aucs = _median_sweep(TR.train_standard, nodec_cfg,
                                          (ds,), test_samples)
    elapsed = time.time() - t0
    assert elapsed < 1800, f"criterion 3 took {elapsed:.0f}s (budget 1800s)"
    assert med_full >= med_nodec - 0.005, \
        f"full {med_full:.4f} vs no-decoder {med_nodec:.4f} " \
        f"(full seeds {full_aucs}, no-dec seeds {nodec_aucs})"
    _report(3, f"median full {med_full:.4f} >= no-decoder {med_nodec:.4f} "
               f"- 0.005 in {elapsed / 60:.1f} min")


# ---------------------------------------------------------------------------
# 4 & 5 share datasets and the mixed sweep


@pytest.fixture(scope="module")
def domain_pair():
    d1 = generate_dataset(6, 30, DOMAIN_1, seed=11)
    d2 = generate_dataset(6, 30, DOMAIN_2, seed=11, subject_id_base=100)
    return d1, d2


@pytest.fixture(scope="module")
def mixed_full_sweep(domain_pair):
    d1, d2 = domain_pair
    cfg = TR.RegimeConfig(regime="mixed", max_epochs=8)
    d1_aucs, d2_aucs = [], []
    for seed in range(5):
        result = TR.train_mixed(cfg, d1, d2, seed)
        model = GlanceModel(cfg.scale, np.random.default_rng(0), result.flags)
        model.load_weights(result.weights)
        d1_aucs.append(TR.macro_auc_of(model, d1.split("test")))
        d2_aucs.append(TR.macro_auc_of(model, d2.split("test")))
    return d1_aucs, d2_aucs


def test_criterion_4_multidomain_vs_mixed(domain_pair, mixed_full_sweep):
    d1, d2 = domain_pair
    d2_id = next(iter(d2.domains))
    d2_test = d2.split("test")
    budget_rng = np.random.default_rng(42)
    d2_low = apply_label_budget(d2, d2_id, 0.10, budget_rng)

    md_cfg = TR.RegimeConfig(regime="multidomain", max_epochs=8)
    mx_cfg = TR.RegimeConfig(regime="mixed", max_epochs=8)

    med_md_low, md_low = _median_sweep(TR.train_multidomain, md_cfg,
                                       (d1, d2_low), d2_test)
    med_mx_low, mx_low = _median_sweep(TR.train_mixed, mx_cfg,
                                       (d1, d2_low), d2_test)
    assert med_md_low >= med_mx_low + 0.01, \
        f"10% labels: multidomain {med_md_low:.4f} vs mixed " \
        f"{med_mx_low:.4f} (seeds {md_low} vs {mx_low})"

    med_md_full, _ = _median_sweep(TR.train_multidomain, md_cfg, (d1, d2),
                                   d2_test)
    med_mx_full = float(np.median(mixed_full_sweep[1]))
    assert abs(med_md_full - med_mx_full) < 0.02, \
        f"100% labels: multidomain {med_md_full:.4f} vs mixed " \
        f"{med_mx_full:.4f}"
    _report(4, f"10%: {med_md_low:.4f} >= {med_mx_low:.4f} + 0.01; "
               f"100%: |{med_md_full:.4f} - {med_mx_full:.4f}| < 0.02")


# forgetting needs the second domain to *conflict* with the first:
# a 180-degree rotation with otherwise identical photometrics swaps the
# left/right (and top/bottom) glance geometry, so fine-tuning on it must
# overwrite the d1 pixel->label mapping, while mixed training can still
# separate the domains through subject appearance. With a photometric
# cue present (the standard d2), fine-tuning keeps both mappings and no
# forgetting occurs at this scale.
CONFLICT_DOMAIN = DomainSpec(domain_id=3, rotation_deg=180.0, scale=1.0,
                             translate=(0.0, 0.0), brightness=0.0,
                             contrast=1.0, noise_sigma=0.03, vignette=False)


def test_criterion_5_finetuning_forgetting(domain_pair):
    d1, _ = domain_pair
    d2c = generate_dataset(6, 30, CONFLICT_DOMAIN, seed=11,
                           subject_id_base=100)
    d1_test = d1.split("test")
    ft_cfg = TR.RegimeConfig(regime="finetune", max_epochs=8)
    mx_cfg = TR.RegimeConfig(regime="mixed", max_epochs=8)
    med_ft, ft_aucs = _median_sweep(TR.train_finetune, ft_cfg, (d1, d2c),
                                    d1_test)
    med_mixed, mx_aucs = _median_sweep(TR.train_mixed, mx_cfg, (d1, d2c),
                                       d1_test)
    assert med_ft <= med_mixed - 0.02, \
        f"finetune d1 {med_ft:.4f} vs mixed d1 {med_mixed:.4f} " \
        f"(finetune seeds {ft_aucs}, mixed seeds {mx_aucs})"
    _report(5, f"finetuned d1 AUC {med_ft:.4f} <= mixed {med_mixed:.4f} "
               "- 0.02")


# ---------------------------------------------------------------------------
# 6. personalization direction + residual-zero property


def test_criterion_6_personalization():
    ds = generate_dataset(6, 25, DOMAIN_1, seed=13, offset_scale=3.0)
    test_samples = ds.split("test")
    p_cfg = TR.RegimeConfig(regime="personalized", max_epochs=8)
    s_cfg = TR.RegimeConfig(regime="standard", max_epochs=8)
    med_p, p_aucs = _median_sweep(TR.train_personalized, p_cfg, (ds,),
                                  test_samples, baseline_split=(ds, "test"))
    med_s, s_aucs = _median_sweep(TR.train_standard, s_cfg, (ds,),
                                  test_samples)
    assert med_p >= med_s - 0.005, \
        f"personalized {med_p:.4f} vs standard {med_s:.4f} " \
        f"(seeds {p_aucs} vs {s_aucs})"

    # residual-zero property: identical streams give exactly zero residual
    model = TR.make_model(p_cfg, 0)
    x = Tensor(stack_inputs(test_samples[:4]))
    _, _, residual = model.forward_personalized(x, x, training=False)
    assert np.array_equal(residual.data, np.zeros_like(residual.data))
    _report(6, f"personalized {med_p:.4f} >= standard {med_s:.4f} - 0.005; "
               "residual(x, x) == 0 exactly")


# ---------------------------------------------------------------------------
# 7. weak-supervision contract


def test_criterion_7_weak_supervision_contract():
    d1 = generate_dataset(4, 4, DOMAIN_1, seed=51)
    d2 = generate_dataset(4, 4, DOMAIN_2, seed=51, subject_id_base=100)
    cfg = TR.RegimeConfig(regime="multidomain", dropout_rate=0.0)
    model = TR.make_model(cfg, 0)
    chunk1 = d1.labeled_train()[:6]
    chunk2 = d2.labeled_train()[:6]
    chunku = d2.split("train")[6:12]
    x1, x2 = Tensor(stack_inputs(chunk1)), Tensor(stack_inputs(chunk2))

    def grads(unlabeled_chunk, sentinel=None):
        T.zero_grads(model.params.values())
        o1 = model.forward(x1, training=True)
        o2 = model.forward(x2, training=True)
        if unlabeled_chunk is None:
            in_u, rec_u = None, None
        else:
            in_u = Tensor(stack_inputs(unlabeled_chunk))
            rec_u = model.forward(in_u, training=True,
                                  with_prediction=False).reconstruction
        lb = L.loss_multidomain(
            o1.class_probs, L.one_hot(labels_of(chunk1)),
            o2.class_probs, L.one_hot(labels_of(chunk2)),
            x1, o1.reconstruction, x2, o2.reconstruction, in_u, rec_u)
        lb.total.backward(params=model.params.values())
        return {n: p.grad.copy() for n, p in model.params.items()}

    # sentinel test: scrambling the unlabeled samples' nominal labels
    # changes nothing anywhere, because those labels are never read
    import dataclasses
    scrambled = [dataclasses.replace(s, glance=type(s.glance)(
        (int(s.glance) + 3) % 6)) for s in chunku]
    g_orig = grads(chunku)
    g_scrambled = grads(scrambled)
    assert all(np.array_equal(g_orig[k], g_scrambled[k]) for k in g_orig)

    # P-head gradients identical with and without the unlabeled batch
    g_without = grads(None)
    head = [n for n in g_orig if n.startswith("head/")]
    assert head
    assert all(np.array_equal(g_orig[n], g_without[n]) for n in head)
    # while encoder/decoder gradients do feel the unlabeled batch
    assert any(not np.array_equal(g_orig[n], g_without[n])
               for n in g_orig if n.startswith(("enc/", "dec/")))

    # passing labels alongside the unlabeled batch is rejected
    from glancenet.errors import ContractError
    xu = Tensor(stack_inputs(chunku))
    rec_u = model.forward(xu, with_prediction=False).reconstruction
    o1 = model.forward(x1)
    o2 = model.forward(x2)
    with pytest.raises(ContractError):
        L.loss_multidomain(
            o1.class_probs, L.one_hot(labels_of(chunk1)),
            o2.class_probs, L.one_hot(labels_of(chunk2)),
            x1, o1.reconstruction, x2, o2.reconstruction, xu, rec_u,
            unlabeled_labels=labels_of(chunku))
    _report(7, "sentinel labels inert; P-head grads identical without "
               "unlabeled batch; labeled-unlabeled mixing rejected")


# ---------------------------------------------------------------------------
# 8. full-scale architecture fidelity


def test_criterion_8_architecture_fidelity():
    m = GlanceModel(FULL_SCALE, np.random.default_rng(0))

    # encoder table: conv1 3x3/1/2 128; conv2..6 stride-2 into 64..1024
    # with constant-width residual blocks; fc1 -> 512
    assert m.params["enc/stem/w"].data.shape == (3, 3, 2, 128)
    widths = [64, 128, 256, 512, 1024]
    cin = 128
    for i, wd in enumerate(widths):
        assert m.params[f"enc/down{i}/w"].data.shape == (3, 3, cin, wd)
        assert m.params[f"enc/rb{i}a/w"].data.shape == (3, 3, wd, wd)
        assert m.params[f"enc/rb{i}b/w"].data.shape == (3, 3, wd, wd)
        cin = wd
    assert m.params["enc/fc/w"].data.shape == (3 * 3 * 1024, 512)

    # decoder table: fc2 -> 3*3*1024; conv7..conv11 with 4*w filters and
    # pixel shuffling; conv12 5x5 -> 2 channels
    assert m.params["dec/fc/w"].data.shape == (512, 3 * 3 * 1024)
    dec_out_widths = [512, 256, 128, 64, 64]
    skip_widths = [512, 256, 128, 64, 128]  # encoder maps, then the stem
    cin = 1024
    for j, wd in enumerate(dec_out_widths):
        assert m.params[f"dec/conv{j}/w"].data.shape == (3, 3, cin, 4 * wd)
        cin = wd + skip_widths[j]
    assert m.params["dec/out/w"].data.shape == (5, 5, cin, 2)

    # prediction head table: fc3 -> 256, fc4 -> 6
    assert m.params["head/fc0/w"].data.shape == (512, 256)
    assert m.params["head/fc1/w"].data.shape == (256, 6)

    # forward shapes at full scale
    x = Tensor(np.zeros((1, 96, 96, 2), dtype=np.float32))
    emb, levels = m.encode(x)
    assert emb.data.shape == (1, 512)
    sizes = [lvl.data.shape[1] for lvl in levels]
    assert sizes == [96, 48, 24, 12, 6, 3]
    rec = m.decode(emb, levels)
    assert rec.data.shape == (1, 96, 96, 2)

    ep = m.count_parameters("E+P")
    epd = m.count_parameters("E+P+D")
    assert 12_000_000 <= ep <= 48_000_000, f"E+P = {ep}"
    assert 27_000_000 <= epd <= 108_000_000, f"E+P+D = {epd}"
    _report(8, f"layer table reproduced; E+P={ep / 1e6:.1f}M (2x band of "
               f"24M), E+P+D={epd / 1e6:.1f}M (2x band of 54M)")


# ---------------------------------------------------------------------------
# 9. statistical protocol


def test_criterion_9_statistical_protocol():
    t, p, degenerate = paired_t_test_one_tailed([1, 2, 3, 4, 5],
                                                [0, 0, 0, 0, 0])
    assert not degenerate
    assert abs(p - 0.0066178) < 1e-4, f"p = {p}"
    _, p0, degen0 = paired_t_test_one_tailed([1, 2, 3], [1, 2, 3])
    assert p0 == 0.5 and degen0
    _report(9, f"p(d=[1..5]) = {p:.7f} (ref 0.0066178); zero-diff p = 0.5")


# ---------------------------------------------------------------------------
# 10. reproducibility and persistence


def test_criterion_10_reproducibility_and_persistence(tmp_path):
    cfg = parse_config("regime=standard\ninput_size=16\nn_blocks=2\n"
                       "base_channels=4\nembedding_dim=16\nhead_hidden=8\n"
                       "n_subjects=4\nn_per_class=3\nmax_epochs=2\nseed=3\n")

    def run():
        ds = generate_dataset(cfg.n_subjects, cfg.n_per_class, DOMAIN_1,
                              seed=cfg.data_seed,
                              image_size=cfg.input_size)
        result = TR.train_standard(cfg.regime_config(), ds, cfg.seed)
        model = GlanceModel(cfg.scale, np.random.default_rng(0),
                            result.flags)
        model.load_weights(result.weights)
        report = macro_auc(TR.evaluate_model(model, ds.split("test")))
        return ds, model, report

    ds_a, model_a, rep_a = run()
    _, _, rep_b = run()
    assert rep_a.macro_auc == rep_b.macro_auc
    assert rep_a.per_class_auc == rep_b.per_class_auc

    # checkpoint round trip preserves forward outputs bit-exactly
    ck_path = str(tmp_path / "model.glhg")
    save_checkpoint(ck_path, model_a, config_text=cfg.to_text())
    restored = load_checkpoint(ck_path)
    assert parse_config(restored.config_text) == cfg
    model_c = restored.build_model()
    x = Tensor(stack_inputs(ds_a.split("test")[:8]))
    out_a = model_a.forward(x)
    out_c = model_c.forward(x)
    assert np.array_equal(out_a.class_probs.data, out_c.class_probs.data)
    assert np.array_equal(out_a.reconstruction.data,
                          out_c.reconstruction.data)

    # dataset files round trip bit-exactly
    ds_dir = str(tmp_path / "ds")
    save_dataset(ds_a, ds_dir)
    back = load_dataset(ds_dir)
    for s_orig, s_back in zip(ds_a.samples, back.samples):
        assert np.array_equal(s_orig.face, s_back.face)
        assert np.array_equal(s_orig.eye, s_back.eye)
        assert s_orig.split == s_back.split
        assert int(s_orig.glance) == int(s_back.glance)
    _report(10, "identical config+seed => identical metrics; checkpoint "
                "and dataset round trips bit-exact")
