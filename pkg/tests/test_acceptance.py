"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the measured values.
The directional protocols (A7, A8, A9) pin their full desk-scale recipes
here, seeds included; everything is deterministic.
"""

import math

import numpy as np
import pytest
from scipy import stats as sps

from mixphase import network as nn
from mixphase import runner as rn
from mixphase import theory as th
from mixphase.stats import welch_t_one_tailed
from mixphase.strategies import select_easy_subset


def report(tag, message):
    print(f"[{tag}] {message} PASS")


# -- A1 ---------------------------------------------------------------------

ARCHS = [
    ((3, 1), ("sigmoid",)),
    ((4, 5, 1), ("relu", "sigmoid")),
    ((4, 5, 1), ("sigmoid", "sigmoid")),
    ((3, 4, 4, 1), ("relu", "sigmoid", "sigmoid")),
    ((3, 4, 3), ("sigmoid", "identity")),
    ((5, 6, 4, 3), ("relu", "relu", "identity")),
]


def test_a1_gradient_exactness():
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(50):
        sizes, acts = ARCHS[k % len(ARCHS)]
        model = nn.init_params(sizes, acts, rng)
        x = rng.standard_normal(sizes[0])
        if sizes[-1] == 1:
            target = rng.uniform()
        else:
            t = rng.uniform(size=sizes[-1])
            target = t / t.sum()
        g = nn.backward(nn.forward(model, x), target, model).flat
        fd = nn.finite_diff_grad(model, x, target, eps=1e-5).flat
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(g)), 1e-8)))
    assert worst < 1e-6
    report("A1", f"gradient exactness: max relative error {worst:.3e} < 1e-6 over 50 draws")


# -- A2 ---------------------------------------------------------------------

def test_a2_early_phase_gradient_oracle():
    pair = th.EarlyPhasePair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    total = th.total_grad_early(pair)
    assert total[0] == -1.25 and total[1] == 0.75

    rng = np.random.default_rng(0)
    for _ in range(100):
        p = th.EarlyPhasePair(rng.standard_normal(16), rng.standard_normal(16))
        np.testing.assert_allclose(
            th.total_grad_early(p),
            th.vanilla_grad_early(p) + th.mix_grad_early(p),
            atol=1e-12,
        )

    worst = 0.0
    for _ in range(1000):
        x = rng.standard_normal(24)
        y = rng.standard_normal(24)
        y -= (y @ x) / (x @ x) * x
        y *= np.linalg.norm(x) / np.linalg.norm(y)
        p = th.EarlyPhasePair(x, y)
        g_m, g_v = th.mix_grad_early(p), th.vanilla_grad_early(p)
        cos = np.dot(g_m, g_v) / (np.linalg.norm(g_m) * np.linalg.norm(g_v))
        worst = max(worst, abs(cos))
    assert worst < 1e-12
    report("A2", f"summed-update oracle exact; orthogonality |cos| <= {worst:.2e}")


# -- A3 ---------------------------------------------------------------------

def test_a3_interference_strength_scaling():
    n_values = [2**k for k in range(6, 15)]
    seeds = range(20)
    separated = th.interference_sweep(
        th.GaussianPairSource(dim=64, separation=2.0, sigma=1.0), n_values, seeds
    )
    control = th.interference_sweep(
        th.GaussianPairSource(dim=64, separation=0.0, sigma=1.0), n_values, seeds
    )
    assert separated.fitted_slope == pytest.approx(-0.5, abs=0.1)
    assert abs(control.fitted_slope) < 0.15
    report("A3", "interference decay: slope "
           f"{separated.fitted_slope:+.3f} (target -0.5 +- 0.1), "
           f"zero-separation control {control.fitted_slope:+.3f} (|.| < 0.15)")


# -- A4 ---------------------------------------------------------------------

def test_a4_fluctuation_scaling():
    g_bar, sigma = 1.3, 0.7
    for d in (16, 64, 256, 1024, 4096):
        f1 = th.relative_fluctuation(sigma, math.sqrt(d) * g_bar)
        f4 = th.relative_fluctuation(sigma, math.sqrt(4 * d) * g_bar)
        assert f4 == 0.5 * f1  # exact halving, not approximate

    rng = np.random.default_rng(2)
    g = rng.standard_normal(64)
    delta = sigma * rng.standard_normal((100_000, 64))
    mc = float((delta @ g).var())
    expected = sigma**2 * float(g @ g)
    assert abs(mc - expected) / expected < 0.05
    report("A4", f"relative fluctuation halves exactly at 4x params; "
           f"MC Var(g.delta)/(sigma^2||g||^2) = {mc / expected:.4f} within 5%")


# -- A5 ---------------------------------------------------------------------

def test_a5_mix_ratio_equivalence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        f_loss = rng.uniform(-20, 20)
        m = rng.uniform(1e3, 1e6)
        sol = th.equivalence_lambda(f_loss, m, -m)
        recovered = sol.lambda_star * m + (1.0 - sol.lambda_star) * (-m)
        worst = max(worst, abs(recovered - f_loss))
    assert worst < 1e-9

    for y in (0, 1):
        for m in (1.0, 1e3, 1e6):
            assert th.loss_at_lambda(0.5, m, y) == pytest.approx(math.log(2), abs=1e-12)

    grid = np.linspace(0.5, 1.0, 100)
    vals = [th.loss_at_lambda(l, 40.0, 1) for l in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    report("A5", f"mix-ratio lemma: max score recovery error {worst:.2e} < 1e-9; "
           "loss(0.5) = ln 2; strictly decreasing on (0.5, 1]")


# -- A6 ---------------------------------------------------------------------

def test_a6_three_sample_benr():
    out = th.benr_theoretical([1, 0, 0], [0, 1, 0], [0, 0, 1])
    mix_expected = (1.5 * math.sqrt(2.0) + 2.0 * math.sqrt(34.0) / 4.0) / (
        math.sqrt(278.0) / 4.0
    )
    assert out["benr_vanilla"] == pytest.approx(math.sqrt(3.0), abs=1e-9)
    assert out["benr_mix"] == pytest.approx(mix_expected, abs=1e-9)

    rng = np.random.default_rng(4)
    wins = 0
    for _ in range(1000):
        x1, x2, x3 = rng.standard_normal((3, 1024))
        x2 *= np.linalg.norm(x1) / np.linalg.norm(x2)
        x3 *= np.linalg.norm(x1) / np.linalg.norm(x3)
        o = th.benr_theoretical(x1, x2, x3)
        wins += o["benr_vanilla"] > o["benr_mix"]
    assert wins >= 990
    report("A6", f"three-sample ratios: orthonormal ({out['benr_vanilla']:.7f}, "
           f"{out['benr_mix']:.6f}); plain > mixed in {wins}/1000 triples")


# -- A7 ---------------------------------------------------------------------

def cos_trend_config(tmp_path, seed):
    return rn.config_from_dict({
        "name": "cos-trend",
        "seed": seed,
        "output_dir": str(tmp_path / f"cos-{seed}"),
        "dataset": {
            "source": "two_gaussians", "n_per_class": 512, "val_per_class": 256,
            "dim": 16, "separation": 4.0, "sigma": 1.0,
            "normalization": "per-feature-standardize",
        },
        "model": {"hidden": [256], "activation": "sigmoid"},
        "optimizer": {"eta": 0.5, "batch_size": 64, "epochs": 60},
        "mixup": {"alpha": None},
        "strategy": {"kind": "none"},
        "metrics": {"benr": False, "atd": False, "zero_activation": False,
                    "cos_probe": True},
    })


def test_a7_cosine_trajectory_trend(tmp_path):
    first_cos, last_cos, first_neg, last_neg = [], [], [], []
    for seed in range(5):
        record = rn.run(cos_trend_config(tmp_path, seed))
        first_cos.append(record.rows[0].avg_cos)
        last_cos.append(record.rows[-1].avg_cos)
        first_neg.append(record.rows[0].prop_lt_zero)
        last_neg.append(record.rows[-1].prop_lt_zero)
    d_cos = np.mean(last_cos) - np.mean(first_cos)
    assert d_cos > 0.2
    assert np.mean(last_neg) < np.mean(first_neg)
    report("A7", f"cosine trend (5 seeds): avg_cos {np.mean(first_cos):+.3f} -> "
           f"{np.mean(last_cos):+.3f} (delta {d_cos:+.3f} > 0.2); "
           f"prop_lt_zero {np.mean(first_neg):.4f} -> {np.mean(last_neg):.4f}")


# -- A8 ---------------------------------------------------------------------

def sweep_base_config(tmp_path):
    return rn.config_from_dict({
        "name": "grad-rate-sweep",
        "seed": 0,
        "output_dir": str(tmp_path / "sweep"),
        "dataset": {
            "source": "two_gaussians", "n_per_class": 4096, "val_per_class": 0,
            "dim": 128, "separation": 2.0, "sigma": 1.0,
        },
        "model": {"hidden": [256], "activation": "relu"},
        "optimizer": {"eta": 0.5, "batch_size": 64, "epochs": 1},
        "mixup": {"alpha": None},
        "strategy": {"kind": "none"},
        "metrics": {"grad_rate_alpha": 1.0, "grad_rate_per_pair": True},
    })


def test_a8_grad_rate_sweep(tmp_path):
    n_values = [256, 1024, 4096, 8192]
    widths = [16, 64, 256, 512]
    rows = rn.sweep_grad_rate(
        {"n_samples": n_values, "hidden_width": widths},
        seeds=range(32), base_config=sweep_base_config(tmp_path),
        out_path=tmp_path / "sweep.csv",
    )
    means = {}
    for r in rows:
        means.setdefault((r["n_samples"], r["hidden_width"]), []).append(r["grad_rate"])
    means = {k: float(np.mean(v)) for k, v in means.items()}

    n_profile = [means[(n, 256)] for n in n_values]
    w_profile = [means[(4096, w)] for w in widths]
    assert all(b < a for a, b in zip(n_profile, n_profile[1:]))
    assert all(b < a for a, b in zip(w_profile, w_profile[1:]))
    rho_n = sps.spearmanr(n_values, n_profile).statistic
    rho_w = sps.spearmanr(widths, w_profile).statistic
    assert rho_n <= -0.8
    assert rho_w <= -0.8
    report("A8", "grad-rate sweep strictly decreasing: "
           f"N axis {np.round(n_profile, 4).tolist()} (rho {rho_n:+.2f}), "
           f"width axis {np.round(w_profile, 4).tolist()} (rho {rho_w:+.2f})")


# -- A9 ---------------------------------------------------------------------

def revival_config(tmp_path, seed, alpha):
    label = "mix" if alpha else "van"
    return rn.config_from_dict({
        "name": f"revival-{label}",
        "seed": seed,
        "output_dir": str(tmp_path / f"revival-{label}-{seed}"),
        "dataset": {
            "source": "two_gaussians", "n_per_class": 512, "val_per_class": 256,
            "dim": 32, "separation": 4.0, "sigma": 2.0,
            "normalization": "per-feature-standardize",
        },
        "model": {"hidden": [128], "activation": "relu"},
        "optimizer": {"eta": 2.0, "batch_size": 32, "epochs": 5},
        "mixup": {"alpha": alpha},
        "strategy": {"kind": "none"},
        "metrics": {"benr": False, "atd": False, "zero_activation": True},
    })


def test_a9_activation_revival(tmp_path):
    per_strategy = {}
    for label, alpha in (("vanilla", None), ("mixup", 2.0)):
        values = []
        for seed in range(6):
            record = rn.run(revival_config(tmp_path, seed, alpha))
            values.append(float(np.mean([r.zero_act_avg for r in record.rows])))
        per_strategy[label] = values
    result = welch_t_one_tailed(per_strategy["vanilla"], per_strategy["mixup"])
    assert np.mean(per_strategy["mixup"]) < np.mean(per_strategy["vanilla"])
    assert result["p"] < 0.05
    report("A9", f"activation revival: dead-unit mean {np.mean(per_strategy['vanilla']):.2f} "
           f"(plain) vs {np.mean(per_strategy['mixup']):.2f} (mixed), "
           f"one-tailed p {result['p']:.2e} < 0.05")


# -- A10 --------------------------------------------------------------------

def plumbing_config(tmp_path, name, **overrides):
    tree = {
        "name": name,
        "seed": 0,
        "output_dir": str(tmp_path / name.replace(" ", "-")),
        "dataset": {
            "source": "two_gaussians", "n_per_class": 48, "val_per_class": 16,
            "dim": 8, "separation": 3.0, "sigma": 1.0,
        },
        "model": {"hidden": [12], "activation": "sigmoid"},
        "optimizer": {"eta": 0.5, "batch_size": 16, "epochs": 4},
        "mixup": {"alpha": 2.0},
        "strategy": {"kind": "none"},
    }
    tree.update(overrides)
    return rn.config_from_dict(tree)


def test_a10_strategy_plumbing(tmp_path):
    pause = plumbing_config(
        tmp_path, "gate",
        strategy={"kind": "pause", "window": {"mode": "fixed_epochs", "end_epoch": 0}},
    )
    baseline = plumbing_config(tmp_path, "gate")
    rn.run(pause, output_dir=tmp_path / "p")
    rn.run(baseline, output_dir=tmp_path / "b")
    pause_bytes = (tmp_path / "p" / "metrics.csv").read_bytes()
    assert pause_bytes == (tmp_path / "b" / "metrics.csv").read_bytes()

    hlr = plumbing_config(
        tmp_path, "gate2", mixup={"alpha": None},
        strategy={"kind": "high_loss_removal", "k_percent": 1.0,
                  "window": {"mode": "fixed_epochs", "end_epoch": 2}},
    )
    vanilla = plumbing_config(tmp_path, "gate2", mixup={"alpha": None})
    rn.run(hlr, output_dir=tmp_path / "h")
    rn.run(vanilla, output_dir=tmp_path / "v")
    assert (tmp_path / "h" / "metrics.csv").read_bytes() == (
        tmp_path / "v" / "metrics.csv"
    ).read_bytes()

    losses = {i: float((i * 7) % 13) for i in range(1000)}
    subset = select_easy_subset(losses, 0.85)
    assert len(subset.kept_ids) == math.ceil(0.85 * 1000)
    tied = select_easy_subset({5: 1.0, 2: 1.0, 9: 1.0, 4: 0.5}, 0.5)
    assert tied.kept_ids == frozenset({4, 2})
    report("A10", "no-op pause and full-retention removal are byte-identical to "
           "their baselines; subset keeps ceil(k n) ids with ascending-id ties")


# -- A11 --------------------------------------------------------------------

def test_a11_welch_statistics():
    cases = [
        ([81.5, 81.7, 81.6], [81.2, 81.3, 81.25]),
        ([0.154, 0.156, 0.151, 0.158], [0.146, 0.147, 0.149, 0.1485]),
        ([5.0, 6.0, 7.0, 8.0, 9.0], [6.5, 6.4, 6.6, 6.55, 6.45]),
    ]
    worst = 0.0
    for a, b in cases:
        ours = welch_t_one_tailed(a, b)
        ref = sps.ttest_ind(a, b, equal_var=False, alternative="greater")
        worst = max(worst, abs(ours["p"] - float(ref.pvalue)))
    assert worst < 1e-6

    rng = np.random.default_rng(7)
    hits = 0
    trials = 10_000
    for _ in range(trials):
        a = rng.standard_normal(8)
        b = rng.standard_normal(8)
        hits += welch_t_one_tailed(a, b)["p"] < 0.05
    rate = hits / trials
    assert 0.04 <= rate <= 0.06
    report("A11", f"Welch p within {worst:.2e} of reference on 3 fixtures; "
           f"null calibration rate {rate:.4f} in [0.04, 0.06]")
