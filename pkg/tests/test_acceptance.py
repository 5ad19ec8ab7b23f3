"""End-to-end acceptance criteria A1-A8.

Every criterion records a PASS/FAIL line that the terminal summary prints.
Seeds are fixed up front; none were tuned against the outcome.
"""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from oracles import dcca_loop, partial_closed_form, profile_loop
from scalereg.coefficients import DccaMatrix, rho_pdcca
from scalereg.fluctuation import dcca_covariance, dfa_variance
from scalereg.ingestion import Dataset, clean, load_csv, split_seasons, write_csv
from scalereg.regression import dfa_regression, dfa_regression_arrays, ols_fit
from scalereg.series import ScaleGrid, build_profile, default_scale_grid, log_scale_grid
from scalereg.significance import decide, mc_critical_t, t_statistics
from scalereg.synthgen import arfima_regression_sample, bmfs_regression_sample

LENGTH = 8192
REPLICAS = 200
GRID = default_scale_grid(LENGTH)  # 10..1000, 30 log-spaced points


def seeds(root, count):
    return [np.random.SeedSequence(root, spawn_key=(i,)) for i in range(count)]


def record(log, key, checks):
    """Store ``checks`` (name -> (ok, detail)) and assert they all hold."""
    ok = all(c for c, _ in checks.values())
    detail = "; ".join(f"{name} {'ok' if c else 'FAILED'} ({d})" for name, (c, d) in checks.items())
    log[key] = (ok, detail)
    failed = [name for name, (c, _) in checks.items() if not c]
    assert not failed, f"{key} failed: {detail}"


def replica_betas(d, d_error, root, chunk=25):
    """``(REPLICAS, 2, S)`` scale-dependent estimates for one configuration."""
    out = []
    ss = seeds(root, REPLICAS)
    for start in range(0, REPLICAS, chunk):
        batch = [arfima_regression_sample(d, LENGTH, d_error=d_error, seed=s) for s in ss[start:start + chunk]]
        y, x1, x2 = (np.stack([getattr(b, k).values for b in batch]) for k in ("y", "x1", "x2"))
        res = dfa_regression_arrays(y, x1, x2, GRID.scales)
        assert res["ok"].all()
        out.append(np.stack([res["beta1"], res["beta2"]], axis=1))
    return np.concatenate(out)


def summarize(betas):
    grid_avg = betas.mean(axis=-1)  # (R, 2)
    return grid_avg.mean(axis=0), betas.std(axis=0, ddof=1).mean(axis=-1)


def test_a1_setting_one(acceptance_log):
    checks, sds = {}, {}
    for i, d in enumerate([-0.4, -0.2, 0.0, 0.2, 0.4]):
        mean, sd = summarize(replica_betas(d, None, 1000 + i))
        sds[d] = sd
        err = np.abs(mean - [1.0, 2.0])
        checks[f"d={d:+.1f}"] = (bool(np.all(err <= 0.05)), f"means {mean[0]:.4f}, {mean[1]:.4f}")
    shrink = bool(np.all(sds[0.4] < sds[-0.4]))
    checks["sd(d=0.4) < sd(d=-0.4)"] = (shrink, f"{np.round(sds[0.4], 4)} vs {np.round(sds[-0.4], 4)}")
    record(acceptance_log, "A1", checks)


def test_a2_setting_two(acceptance_log):
    checks, sds = {}, []
    for i, d_eps in enumerate([-0.4, 0.0, 0.4]):
        mean, sd = summarize(replica_betas(0.4, d_eps, 2000 + i))
        sds.append(sd)
        err = np.abs(mean - [1.0, 2.0])
        checks[f"d_eps={d_eps:+.1f}"] = (bool(np.all(err <= 0.07)), f"means {mean[0]:.4f}, {mean[1]:.4f}")
    sds = np.array(sds)
    rising = bool(np.all(np.diff(sds, axis=0) > 0))
    checks["sd rises with d_eps"] = (rising, f"beta1 {np.round(sds[:, 0], 4)}, beta2 {np.round(sds[:, 1], 4)}")
    record(acceptance_log, "A2", checks)


def test_a3_cascade_in_noise(acceptance_log):
    # the cascade is deterministic; 20 noise realisations give the error bars
    b1, b2, ols = [], [], []
    grid = default_scale_grid(2**15)
    for s in seeds(3000, 20):
        smp = bmfs_regression_sample(p=0.3, depth=15, threshold=1e-5, noise_sd=1e-4, seed=s)
        fit = dfa_regression(smp.y, smp.x1, smp.x2, grid)
        b1.append(fit.beta1)
        b2.append(fit.beta2)
        ols.append(ols_fit(smp.y, smp.x1, smp.x2).beta1)
    b1, b2 = np.mean(b1, axis=0), np.mean(b2, axis=0)
    ols = float(np.mean(ols))
    worst2 = float(np.abs(b2 - 2).max())
    checks = {
        "beta2 within 0.1 of 2": (worst2 <= 0.1, f"max deviation {worst2:.4f}"),
        "beta1 < 0.9 at smallest scale": (bool(b1[0] < 0.9), f"n={grid.scales[0]}: {b1[0]:.4f}"),
        "beta1 > 0.95 at largest scale": (bool(b1[-1] > 0.95), f"n={grid.scales[-1]}: {b1[-1]:.4f}"),
        "OLS between regimes": (bool(b1[0] < ols < b1[-1]), f"OLS {ols:.4f}"),
    }
    record(acceptance_log, "A3", checks)


def test_a4_exact_recovery(acceptance_log):
    smp = arfima_regression_sample(0.3, LENGTH, seed=4000)
    x1, x2 = smp.x1.values, smp.x2.values
    y = 1.0 + x1 + 2.0 * x2
    ols = ols_fit(y, x1, x2)
    fit = dfa_regression(y, x1, x2, GRID)
    ols_err = max(abs(ols.beta0 - 1), abs(ols.beta1 - 1), abs(ols.beta2 - 2), abs(ols.r_squared - 1))
    dfa_err = max(
        np.abs(fit.beta1 - 1).max(), np.abs(fit.beta2 - 2).max(), np.abs(fit.r_squared_dfa - 1).max()
    )
    checks = {
        "OLS": (ols_err <= 1e-8, f"max error {ols_err:.2e}"),
        "DFA": (dfa_err <= 1e-8 and len(fit.grid) == len(GRID), f"max error {dfa_err:.2e}"),
    }
    record(acceptance_log, "A4", checks)


def test_a5_direct_loop_oracle(acceptance_log):
    r = np.random.default_rng(5000)
    worst = 0.0
    for _ in range(20):
        length = int(r.integers(32, 65))
        a, b = r.normal(size=(2, length))
        pa, pb = profile_loop(a), profile_loop(b)
        for n in (4, 8, 16):
            grid = ScaleGrid([n])
            got_ab = dcca_covariance(build_profile(a), build_profile(b), grid)[0]
            got_aa = dfa_variance(build_profile(a), grid)[0]
            want_ab = dcca_loop(pa, pb, n)
            want_aa = dcca_loop(pa, pa, n)
            worst = max(worst, abs(got_ab - want_ab) / abs(want_ab), abs(got_aa - want_aa) / want_aa)
    record(acceptance_log, "A5", {"direct loop": (worst <= 1e-10, f"max relative error {worst:.2e}")})


def test_a6_partial_identity(acceptance_log):
    r = np.random.default_rng(6000)
    worst = 0.0
    grid = ScaleGrid([10])
    for _ in range(50):
        a = r.normal(size=(3, 3))
        cov = a @ a.T + 0.05 * np.eye(3)
        sd = np.sqrt(np.diag(cov))
        rho = cov / np.outer(sd, sd)
        np.fill_diagonal(rho, 1.0)
        m = DccaMatrix(grid, ("a", "b", "c"), rho[None])
        got = rho_pdcca(m, "a", "b").values[0]
        want = partial_closed_form(rho[0, 1], rho[0, 2], rho[1, 2])
        worst = max(worst, abs(got - want))
    record(acceptance_log, "A6", {"inverse vs closed form": (worst <= 1e-12, f"max error {worst:.2e}")})


@pytest.mark.slow
def test_a7_size_control(acceptance_log):
    length, datasets, reps, alpha = 1024, 200, 2000, 0.01
    grid = log_scale_grid(10, 256, 8)
    rejections = np.zeros(len(grid))
    crits, null_samples = [], []
    for k, s in enumerate(seeds(7000, datasets)):
        y, x1, x2 = np.random.default_rng(s).normal(size=(3, length))
        tstat = t_statistics(dfa_regression(y, x1, x2, grid))
        assert tstat.grid == grid
        curve = mc_critical_t(y, x1, x2, grid, alpha=alpha, reps=reps, seed=7000 + k, keep_samples=k < 10)
        rejections += decide(curve, tstat.values).sum(axis=1)
        crits.append(curve.critical)
        if curve.samples is not None:
            null_samples.append(curve.samples)
    rate = rejections / (2 * datasets)
    crit = np.mean(crits, axis=0)
    pooled = np.concatenate(null_samples)
    z = pooled / pooled.std(axis=0)
    ks = np.array([stats.kstest(z[:, j], "norm").statistic for j in range(len(grid))])
    skew = np.abs(stats.skew(z, axis=0))
    kurt = np.abs(stats.kurtosis(z, axis=0))
    checks = {
        "rate in [0.1%, 3%]": (
            bool(np.all((rate >= 0.001) & (rate <= 0.03))),
            "rates " + ", ".join(f"n={n}:{100 * v:.2f}%" for n, v in zip(grid.scales, rate)),
        ),
        "Gaussian null": (
            bool(np.all(ks < 0.02) and np.all(skew < 0.1) and np.all(kurt < 0.3)),
            f"max KS {ks.max():.4f}, max |skew| {skew.max():.3f}, max |excess kurtosis| {kurt.max():.3f}",
        ),
        "critical grows with n": (bool(np.all(np.diff(crit) > 0)), f"mean critical {np.round(crit, 2)}"),
    }
    record(acceptance_log, "A7", checks)


def test_a8_ingestion_properties(acceptance_log, tmp_path):
    stamps = pd.date_range("2013-12-01", "2016-12-01", freq="h", inclusive="left")
    r = np.random.default_rng(8000)
    values = {c: r.gamma(2.0, 40.0, size=len(stamps)) for c in ("city_a", "city_b", "city_c")}
    for c in values:  # scattered short and long outages
        for start in r.integers(0, len(stamps) - 20, size=40):
            values[c][start:start + int(r.integers(1, 12))] = np.nan
    raw = Dataset(values, stamps, "generated")
    path = tmp_path / "pm.csv"
    write_csv(raw, path)
    loaded = load_csv(path, timestamp_col="timestamp")
    same = all(
        np.allclose(loaded.columns[c], raw.columns[c], rtol=1e-12, atol=0, equal_nan=True) for c in values
    )
    cleaned = clean(loaded)
    again = clean(cleaned)
    idem = all(np.array_equal(cleaned.columns[c], again.columns[c]) for c in values) and cleaned.timestamps.equals(
        again.timestamps
    )
    split = split_seasons(cleaned)
    counts = np.sum([split.masks[s] for s in ("winter", "spring", "summer", "fall")], axis=0)
    rows = sorted(np.concatenate([split[s].dataset.timestamps.asi8 for s in split]))
    partition = bool(np.all(counts == 1)) and rows == sorted(cleaned.timestamps.asi8)
    checks = {
        "round trip": (same, f"{len(raw)} rows x {len(values)} columns"),
        "clean idempotent": (idem, f"{len(loaded) - len(cleaned)} rows dropped"),
        "season partition": (partition, {s: len(split[s].dataset) for s in split}),
    }
    record(acceptance_log, "A8", checks)
