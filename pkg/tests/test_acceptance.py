"""End-to-end acceptance gate.

Every numbered criterion below runs at its stated tolerance and prints
one live ``[PASS]``/``[FAIL]`` line (bypassing output capture) before
asserting, so the test log carries a scannable scorecard. The
desk-scale benchmark grid is computed once in a module fixture and
shared by the criteria that read it.
"""

import itertools
import time

import numpy as np
import pytest

from stablesel import oracle
from stablesel.cli import ExperimentConfig, _run_grid, cmd_reproduce
from stablesel.core import Dataset, Rng, WeightVector
from stablesel.dwr import DwrConfig, dwr_grad, dwr_loss
from stablesel.nnet import Mlp, grad_check
from stablesel.plotting import median_by
from stablesel.regress import wls
from stablesel.srdo import SrdoConfig, srdo_fit


@pytest.fixture
def announce(capfd):
    def _announce(name, ok, detail):
        with capfd.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
        assert ok, f"{name}: {detail}"

    return _announce


# ---------------------------------------------------------------------------
# criterion 1 — discrete oracle theorem suite


def test_criterion_1_oracle_theorem_suite(announce):
    t0 = time.monotonic()
    lattice_ok = True
    boundary_ok = True
    worst_off = 0.0
    for i in range(100):
        joint = oracle.random_joint(Rng(0).fork("oracle", i), max_features=4, max_support=3)
        minimal = oracle.minimal_stable_set(joint)
        rest = sorted(set(range(joint.d)) - minimal)
        lattice = {
            frozenset(minimal | set(extra))
            for size in range(len(rest) + 1)
            for extra in itertools.combinations(rest, size)
        }
        lattice_ok &= set(oracle.stable_sets(joint)) == lattice
        boundary_ok &= minimal <= oracle.markov_boundary(joint)
        beta = oracle.population_wls(joint, oracle.independence_weights(joint)).beta
        off = [abs(float(beta[j])) for j in range(joint.d) if j not in minimal]
        if off:
            worst_off = max(worst_off, max(off))
    elapsed = time.monotonic() - t0
    ok = lattice_ok and boundary_ok and worst_off < 1e-10 and elapsed < 60
    announce(
        "criterion 1 (oracle theorem suite, 100 random joints)",
        ok,
        f"stable-set lattice {lattice_ok}, minimal-in-boundary {boundary_ok}, "
        f"worst off-support |coef| {worst_off:.3e} < 1e-10, {elapsed:.1f}s < 60s",
    )


# ---------------------------------------------------------------------------
# criterion 2 — heteroskedastic instance where the sets differ


def test_criterion_2_heteroskedastic_sets(announce):
    joint = oracle.heteroskedastic_example()
    minimal = oracle.minimal_stable_set(joint)
    boundary = oracle.markov_boundary(joint)
    ok = minimal == frozenset({0}) and boundary == frozenset({0, 1})
    announce(
        "criterion 2 (heteroskedastic instance)",
        ok,
        f"minimal stable set {sorted(minimal)} == [0], markov boundary {sorted(boundary)} == [0, 1]",
    )


# ---------------------------------------------------------------------------
# criterion 3 — weighted estimates converge to the population target


def test_criterion_3_weighted_estimates_converge(announce):
    t0 = time.monotonic()
    joint = oracle.random_joint(Rng(3).fork("criterion3"), max_features=3, max_support=3)
    w_table = oracle.independence_weights(joint)
    beta_w = oracle.population_wls(joint, w_table).beta
    flatw = w_table.reshape(-1)
    sizes = (200, 800, 3200, 12800)
    noise_levels = (0.3, 0.1, 0.03)
    n_errs = {n: [] for n in sizes}
    e_errs = {eps: [] for eps in noise_levels}
    for seed in range(20):
        root = Rng(seed)
        for n in sizes:
            ds, cell = oracle.sample_joint(joint, n, root.fork("n", n))
            beta_hat = wls(ds, WeightVector.normalized(flatw[cell])).beta
            n_errs[n].append(float(np.linalg.norm(beta_hat - beta_w)))
        ds, cell = oracle.sample_joint(joint, 3200, root.fork("noisy"))
        u = np.asarray(root.fork("noise").uniform(-1.0, 1.0, size=3200))
        for eps in noise_levels:
            perturbed = flatw[cell] * (1.0 + eps * u)
            beta_hat = wls(ds, WeightVector.normalized(perturbed)).beta
            e_errs[eps].append(float(np.linalg.norm(beta_hat - beta_w)))
    n_med = [float(np.median(n_errs[n])) for n in sizes]
    e_med = [float(np.median(e_errs[eps])) for eps in noise_levels]
    elapsed = time.monotonic() - t0
    n_mono = all(a > b for a, b in zip(n_med, n_med[1:]))
    e_mono = all(a > b for a, b in zip(e_med, e_med[1:]))
    ok = n_mono and e_mono and elapsed < 300
    announce(
        "criterion 3 (weighted estimation error shrinks)",
        ok,
        f"median error vs n {[round(v, 4) for v in n_med]} monotone {n_mono}; "
        f"vs weight noise {[round(v, 4) for v in e_med]} monotone {e_mono}; {elapsed:.1f}s < 300s",
    )


# ---------------------------------------------------------------------------
# criterion 4 — analytic gradients match finite differences


def test_criterion_4_gradient_correctness(announce):
    worst_net = 0.0
    for sizes, head, loss in (
        ((5, 3, 3, 1), "linear", "mse"),
        ((10, 30, 10, 1), "sigmoid", "bce"),
        ((5, 5, 5, 1), "linear", "mse"),
    ):
        rng = Rng(41)
        net = Mlp.init(sizes, rng.fork("net", sizes[1]), head=head)
        x = np.asarray(rng.fork("x", sizes[0]).normal(size=sizes[0]))
        target = 1.0 if loss == "bce" else 0.5
        worst_net = max(worst_net, grad_check(net, x, target, loss))

    rng = Rng(7)
    X = np.asarray(rng.fork("x").normal(size=80)).reshape(20, 4)
    raw = 0.5 * np.asarray(rng.fork("raw").normal(size=20))
    cfg = DwrConfig()
    g = dwr_grad(X, raw, cfg)
    h = 1e-6
    worst_dwr = 0.0
    for i in range(20):
        rp, rm = raw.copy(), raw.copy()
        rp[i] += h
        rm[i] -= h
        fd = (dwr_loss(X, rp, cfg) - dwr_loss(X, rm, cfg)) / (2 * h)
        worst_dwr = max(worst_dwr, abs(g[i] - fd) / (abs(g[i]) + abs(fd) + 1e-9))

    ok = worst_net < 1e-4 and worst_dwr < 1e-5
    announce(
        "criterion 4 (gradient correctness)",
        ok,
        f"network backprop max rel err {worst_net:.3e} < 1e-4 over three architectures; "
        f"reweighter gradient max rel err {worst_dwr:.3e} < 1e-5 on a 20-sample instance",
    )


# ---------------------------------------------------------------------------
# criterion 5 — learned density ratio matches the analytic ratio


def test_criterion_5_density_ratio_accuracy(announce):
    t0 = time.monotonic()
    rho = 0.8
    mses = []
    for seed in range(5):
        root = Rng(seed)
        z = np.asarray(root.fork("draw").normal(size=20_000)).reshape(10_000, 2)
        x1 = z[:, 0]
        x2 = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
        ds = Dataset(np.column_stack([x1, x2]), np.zeros(10_000))
        cfg = SrdoConfig(gamma=10.0, shuffle_seed=root.fork("shuffle").seed)
        res = srdo_fit(ds, cfg, root.fork("fit"))
        # The estimator's population target is the clipped-and-renormalized
        # ratio: the raw product-to-joint ratio has an infinite second
        # moment at this correlation, so an unclipped comparison is not
        # well posed.
        log_joint = (
            -0.5 * (x1 * x1 - 2 * rho * x1 * x2 + x2 * x2) / (1.0 - rho * rho)
            - np.log(2 * np.pi * np.sqrt(1.0 - rho * rho))
        )
        log_prod = -0.5 * (x1 * x1 + x2 * x2) - np.log(2 * np.pi)
        wstar = np.exp(log_prod - log_joint)
        wref = np.clip(wstar, 1.0 / cfg.gamma, cfg.gamma)
        wref /= wref.mean()
        mses.append(float(np.mean((res.weights.weights - wref) ** 2)))
    med = float(np.median(mses))
    elapsed = time.monotonic() - t0
    ok = med < 0.1 and elapsed < 120
    announce(
        "criterion 5 (density-ratio accuracy, bivariate normal rho=0.8)",
        ok,
        f"median weight MSE over 5 seeds {med:.4f} < 0.1, {elapsed:.1f}s < 120s",
    )


# ---------------------------------------------------------------------------
# criteria 6 and 7 — desk-scale benchmark reproduction


_DESK_DOC = {
    "n": 2000,
    "seeds": [0, 1, 2],
    "r_train": [1.5, 2.0, 2.5, 3.0],
    "methods": ["dwr", "srdo", "ols"],
    "size_sweep_r": 2.5,
}


@pytest.fixture(scope="module")
def desk():
    cfg = ExperimentConfig.from_dict(_DESK_DOC)
    t0 = time.monotonic()
    merged = _run_grid(cfg, [(float(r), s) for r in cfg.r_train for s in cfg.seeds])
    elapsed = time.monotonic() - t0
    assert not merged["errors"], merged["errors"]
    medians = median_by(
        merged["rows"], ("method", "r_tr"), ("f1", "rank_average", "rmse_mean", "rmse_std")
    )
    med = {(m["method"], m["r_tr"]): m for m in medians}
    sweep = {
        int(row["k"]): row
        for row in median_by(merged["size_sweep_rows"], ("k",), ("rmse_mean", "rmse_std"))
    }
    return {"med": med, "sweep": sweep, "elapsed": elapsed, "r_train": tuple(cfg.r_train)}


def test_criterion_6a_f1_dominance(desk, announce):
    med = desk["med"]
    checks = []
    for r in desk["r_train"]:
        gap_dwr = med[("dwr", r)]["f1"] - med[("ols", r)]["f1"]
        gap_srdo = med[("srdo", r)]["f1"] - med[("ols", r)]["f1"]
        strict = r >= 2.5
        ok_r = (gap_dwr > 0 and gap_srdo > 0) if strict else (gap_dwr >= 0 and gap_srdo >= 0)
        checks.append((r, ok_r, gap_dwr, gap_srdo))
    ok = all(c[1] for c in checks) and desk["elapsed"] < 1200
    detail = "; ".join(f"r={r:g} dwr{g1:+.2f} srdo{g2:+.2f}" for r, _, g1, g2 in checks)
    announce(
        "criterion 6a (median F1: reweighted >= plain, strict at r >= 2.5)",
        ok,
        f"{detail}; grid {desk['elapsed']:.0f}s < 1200s",
    )


def test_criterion_6b_rank_average_dominance(desk, announce):
    med = desk["med"]
    checks = []
    for r in desk["r_train"]:
        for method in ("dwr", "srdo"):
            diff = med[(method, r)]["rank_average"] - med[("ols", r)]["rank_average"]
            checks.append((method, r, diff))
    ok = all(diff <= 0 for _, _, diff in checks)
    failing = [f"{m} r={r:g} {d:+.2f}" for m, r, d in checks if d > 0]
    announce(
        "criterion 6b (median rank average: reweighted <= plain at every r)",
        ok,
        "all non-positive" if ok else f"violations: {'; '.join(failing)}",
    )


def test_criterion_6c_rmse_stability(desk, announce):
    med = desk["med"]
    checks = []
    for r in (2.5, 3.0):
        for method in ("dwr", "srdo"):
            diff = med[(method, r)]["rmse_std"] - med[("ols", r)]["rmse_std"]
            checks.append((method, r, diff))
    ok = all(diff <= 0 for _, _, diff in checks)
    detail = "; ".join(f"{m} r={r:g} {d:+.3f}" for m, r, d in checks)
    announce(
        "criterion 6c (error spread across shifted environments: reweighted <= plain at r >= 2.5)",
        ok,
        detail,
    )


def test_criterion_7_five_features_beat_ten(desk, announce):
    k5 = desk["sweep"][5]
    k10 = desk["sweep"][10]
    ok = k5["rmse_mean"] <= k10["rmse_mean"] and k5["rmse_std"] <= k10["rmse_std"]
    announce(
        "criterion 7 (top-5 selection beats keeping all 10 features)",
        ok,
        f"median k=5 mean {k5['rmse_mean']:.4f} / std {k5['rmse_std']:.4f} vs "
        f"k=10 mean {k10['rmse_mean']:.4f} / std {k10['rmse_std']:.4f}",
    )


# ---------------------------------------------------------------------------
# criterion 8 — byte-identical reproduction


def test_criterion_8_reproduce_is_byte_identical(announce, tmp_path):
    doc = {
        "n": 120,
        "seeds": [0],
        "r_train": [2.0],
        "r_test": [-2.0, 2.5],
        "methods": ["dwr", "srdo", "ols"],
        "dwr_max_iters": 300,
        "srdo_epochs": 5,
        "regressor_epochs": 2,
        "size_sweep_r": 2.0,
    }
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        cfg = ExperimentConfig.from_dict({**doc, "output_dir": str(out)})
        assert cmd_reproduce(cfg) == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    mismatched = [
        name for name in csvs if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes()
    ]
    ok = bool(csvs) and not mismatched
    announce(
        "criterion 8 (byte-identical reproduction)",
        ok,
        f"{len(csvs)} result CSVs identical across two runs ({', '.join(csvs)})"
        if ok
        else f"mismatched files: {mismatched}",
    )
