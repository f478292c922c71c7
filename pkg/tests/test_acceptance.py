"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line, printed in the terminal summary.
Monte Carlo cells are run once per session and shared between criteria.
"""
import filecmp
import math
import os

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from diurnalvol.bipower import adaptive_threshold, bipower, truncated_bipower
from diurnalvol.bootstrap import (BootstrapConfig, bootstrap_statistics, delta_b,
                                  delta_from_summands, draw_external, resample_matrix,
                                  select_block_size, sigma_hat, sigma_star, wild_blocks_sample)
from diurnalvol.bipower import abs_moment, bipower_scale, bipower_summands
from diurnalvol.diurnal import estimate_diurnal_profile
from diurnalvol.harness.montecarlo import CellSpec, emit_report, run_monte_carlo, simulate_panel
from diurnalvol.preavg import ReturnGrid, choose_window, pre_average
from diurnalvol.rng import stream
from diurnalvol.sim import (DiurnalShape, SimConfig, jump_scale, ma1_noise,
                            simulate_sv2f, simulate_tempered_stable, stationary_variance,
                            true_profile)
from diurnalvol.teststat import h_index_true

WORKERS = os.cpu_count() or 1


def record(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    return ok


@pytest.fixture(scope="session")
def size_cells():
    """n=4680 null cell and the n=390 null cell."""
    cells = [CellSpec(n=4680, hypothesis="null"), CellSpec(n=390, hypothesis="null")]
    rep = run_monte_carlo(cells, workers=WORKERS)
    return {c.spec.n: c for c in rep.cells}


@pytest.fixture(scope="session")
def power_4680():
    """n=4680 alternative at theta=1/3 and theta=1 on common simulated days."""
    cells = [CellSpec(n=4680, hypothesis="alt", theta=1 / 3),
             CellSpec(n=4680, hypothesis="alt", theta=1.0)]
    rep = run_monte_carlo(cells, workers=WORKERS)
    return {c.spec.theta: c for c in rep.cells}


def test_c1_bootstrap_size(size_cells):
    rate = size_cells[4680].rates()["z_wb2"]
    ok = record("C1 z_wb2 size, n=4680", 3.0 <= rate <= 9.0, f"{rate:.1f}% (band [3, 9])")
    assert ok


def test_c2_clt_oversize(size_cells):
    r1 = size_cells[4680].rates()["clt"]
    r2 = size_cells[390].rates()["clt"]
    ok = 9.0 <= r1 <= 16.0 and r2 >= 18.0
    record("C2 CLT oversize", ok, f"n=4680 {r1:.1f}% (band [9, 16]); n=390 {r2:.1f}% (>= 18)")
    assert ok


def test_c3_power_one_second():
    rep = run_monte_carlo([CellSpec(n=23400, hypothesis="alt")], workers=WORKERS)
    cell = rep.cells[0]
    rate = cell.rates()["z_wb2"]
    ok = record("C3 z_wb2 power, n=23400", 72.0 <= rate <= 89.0,
                f"{rate:.1f}% (band [72, 89]), avg block {cell.avg_block_length:.0f}")
    assert ok


def test_c4_theta_ordering(power_4680):
    a = power_4680[1 / 3].rates()["z_wb2"]
    b = power_4680[1.0].rates()["z_wb2"]
    ok = record("C4 theta ordering, n=4680", a - b >= 8.0,
                f"theta=1/3 {a:.1f}% vs theta=1 {b:.1f}% (gap {a - b:.1f}, need >= 8)")
    assert ok


# --- criterion 5: bootstrap exactness -------------------------------------

def _small_day(rng, n=780):
    r = rng.standard_normal(n) * rng.uniform(0.5, 2.0, n) / math.sqrt(n)
    r[rng.integers(n)] += rng.normal(0, 0.05)
    return pre_average(ReturnGrid(r), choose_window(n, 1 / 3))


def test_c5_bootstrap_exactness():
    rng = np.random.default_rng(2024)
    B = 199

    # (a) resample means of both bipower statistics sit on the originals
    worst = 0.0
    for d in range(50):
        s = _small_day(rng)
        rule = adaptive_threshold(s)
        b = select_block_size(s, rule)
        d22, d11 = delta_b(s, 2, 2, rule, b), delta_b(s, 1, 1, rule, b)
        orig = np.array([truncated_bipower(s, 2, 2, rule).value,
                         truncated_bipower(s, 1, 1, rule).value])
        dr = bootstrap_statistics(d22, d11, orig[0], orig[1], BootstrapConfig(b_n=b, B=B), s.n,
                                  keys=(d,))
        dev = np.abs(dr.pairs.mean(axis=0) - orig) / (dr.pairs.std(axis=0, ddof=1) / math.sqrt(B))
        worst = max(worst, float(dev.max()))
    ok_a = worst <= 4.0

    # (b) symmetric PSD on random increments
    min_eig, asym = math.inf, 0.0
    for _ in range(1000):
        J = int(rng.integers(1, 60))
        scale = 10.0 ** rng.uniform(-6, 3)
        s = sigma_hat(rng.standard_normal(J) * scale, rng.standard_normal(J) * scale,
                      int(rng.integers(10, 10 ** 5)), int(rng.integers(1, 200))).entries
        asym = max(asym, float(np.abs(s - s.T).max()))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(s).min() / max(np.abs(s).max(), 1e-300)))
    ok_b = asym == 0.0 and min_eig >= -1e-12

    # (c) shortcut sums equal the observation-level four-regime generator
    err_c, cases = 0.0, 0
    for _ in range(300):
        n = int(rng.integers(12, 41))
        s = pre_average(ReturnGrid(rng.standard_normal(n)), choose_window(n, 0.5))
        N = s.N_n
        b = int(rng.integers(1, (N + 2) // 3 + 1))
        J = N - 2 * b + 1
        if N > 40 or J < max(1, b - 1):
            continue
        cases += 1
        u = draw_external("mammen", J + 1, rng)
        thr = float(np.quantile(np.abs(s.values), 0.9))
        pair, slow = [], []
        for l, r in ((2, 2), (1, 1)):
            y = bipower_summands(s, l, r, thr)
            c = bipower_scale(s, l, r)
            pair.append(c * y.sum())
            slow.append(c * y.sum() + c * wild_blocks_sample(y, b, u).sum())
        d22 = delta_b(s, 2, 2, thr, b)
        d11 = delta_b(s, 1, 1, thr, b)
        fast = bootstrap_statistics(d22, d11, pair[0], pair[1], BootstrapConfig(b_n=b), s.n,
                                    u=u[None, :J]).pairs[0]
        err_c = max(err_c, float(np.max(np.abs(fast - slow) / np.maximum(np.abs(slow), 1.0))))
    ok_c = cases >= 100 and err_c <= 1e-10

    # (d) bootstrap covariance averages back to the sample covariance
    s = _small_day(rng, 2340)
    rule = adaptive_threshold(s)
    b = 60
    d22, d11 = delta_b(s, 2, 2, rule, b), delta_b(s, 1, 1, rule, b)
    target = sigma_hat(d22, d11, s.n, b).entries
    draws = np.empty((10 ** 4, 2, 2))
    for i in range(10 ** 4):
        u = draw_external("mammen", d22.size, stream(99, i))
        draws[i] = sigma_star(d22, d11, u, s.n, b).entries
    se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    zd = float(np.max(np.abs(draws.mean(axis=0) - target) / se))
    ok_d = zd <= 3.0

    ok = ok_a and ok_b and ok_c and ok_d
    record("C5 bootstrap exactness", ok,
           f"(a) max |mean*-orig|/(sd*/sqrt B) {worst:.2f} <= 4; (b) min eig/scale {min_eig:.1e}, "
           f"asym {asym}; (c) {cases} cases, max err {err_c:.1e}; (d) max dev {zd:.2f} SE <= 3")
    assert ok


# --- criterion 6: oracle equivalences -------------------------------------

def _loop_bipower(v, k, N, n, l, r, thr):
    total = 0.0
    for i in range(N):
        a, b = abs(v[i]), abs(v[i + k])
        if a < thr and b < thr:
            total += a ** l * b ** r
    return n ** ((l + r) / 4) / (N * abs_moment(l) * abs_moment(r)) * total


def test_c6_oracle_equivalences():
    rng = np.random.default_rng(6)
    worst_inf, worst_loop = 0.0, 0.0
    for i in range(200):
        n = int(rng.integers(20, 300))
        r = rng.standard_t(3, n) * 10.0 ** rng.uniform(-4, 1)
        s = pre_average(ReturnGrid(r), choose_window(n, rng.uniform(0.3, 1.0)))
        for l, rr in ((1, 1), (2, 2), (0.5, 1.5)):
            plain = bipower(s, l, rr).value
            worst_inf = max(worst_inf, abs(truncated_bipower(s, l, rr, np.inf).value - plain)
                            / abs(plain))
            thr = float(np.quantile(np.abs(s.values), rng.uniform(0.5, 1.0)))
            got = truncated_bipower(s, l, rr, thr).value
            want = _loop_bipower(s.values, s.k_n, s.N_n, s.n, l, rr, thr)
            worst_loop = max(worst_loop, abs(got - want) / max(abs(want), 1e-300))
    ok = worst_inf <= 1e-12 and worst_loop <= 1e-12
    record("C6 oracle equivalences", ok,
           f"inf threshold rel err {worst_inf:.1e}; indicator loop rel err {worst_loop:.1e}")
    assert ok


# --- criterion 7: diurnal estimator ---------------------------------------

def _binned_truth(n, m):
    s2 = true_profile(DiurnalShape(), n).sigma2_u.reshape(m, -1).mean(axis=1)
    return s2 / s2.mean()


def _rmse(est, truth):
    return float(np.sqrt(np.mean(((est - truth) / truth) ** 2)))


def test_c7_diurnal_estimator():
    n, m, T = 4680, 78, 500
    truth = _binned_truth(n, m)
    base, _ = simulate_panel(CellSpec(n=n, R=T, qv_share=0.0, seed=7), WORKERS)
    jumpy, _ = simulate_panel(CellSpec(n=n, R=T, qv_share=0.2, seed=7), WORKERS)
    e_base = _rmse(estimate_diurnal_profile(base, m, 3).sigma2_u, truth)
    e_jump = _rmse(estimate_diurnal_profile(jumpy, m, 3).sigma2_u, truth)
    e_125 = np.mean([_rmse(estimate_diurnal_profile(base[s:s + 125], m, 3).sigma2_u, truth)
                     for s in range(0, T, 125)])
    ratio = e_base / e_125
    ok1 = e_base <= 0.10
    ok2 = e_jump <= 2.0 * e_base
    ok3 = 0.35 <= ratio <= 0.70
    ok = ok1 and ok2 and ok3
    record("C7 diurnal estimator", ok,
           f"RMSE {100 * e_base:.1f}% (<= 10); with jumps {100 * e_jump:.1f}%, "
           f"x{e_jump / e_base:.2f} (<= 2); T=500/T=125 {ratio:.2f} (in [0.35, 0.70])")
    assert ok


# --- criterion 8: H-index -------------------------------------------------

def test_c8_h_index(power_4680):
    const = h_index_true(np.full(1000, 0.42))
    two = h_index_true(np.r_[np.ones(500), 3.0 * np.ones(500)])
    cfg = SimConfig(n=4680, under_null=False)
    hs = np.array([h_index_true(simulate_sv2f(cfg, stream(8, i))[:-1]) for i in range(2000)])
    cell = power_4680[1 / 3]
    rel = np.array([d.h_hat / d.true_h_index for d in cell.ok_days
                    if d.true_h_index > 0 and np.isfinite(d.h_hat)])
    med = float(np.median(rel))
    ok = const == 0.0 and abs(two - 0.2) < 1e-12 and abs(hs.mean() - 0.20) <= 0.03 and med < 1.0
    record("C8 H-index", ok,
           f"constant {const}; two-level {two:.12f}; SV2F mean {hs.mean():.3f} (0.20 +- 0.03); "
           f"median h_hat/H {med:.2f} (< 1)")
    assert ok


# --- criterion 9: simulator moments ---------------------------------------

def test_c9_simulator_moments():
    cfg = SimConfig(n=4680)
    days = 2000
    jq = np.array([np.sum(simulate_tempered_stable(cfg, stream(9, 1, d)) ** 2)
                   for d in range(days)])
    grid = np.arange(cfg.seconds_grid) / cfg.seconds_grid
    iv = stationary_variance(cfg.sv2f) * float(np.mean(cfg.diurnal.sigma2_u(grid)))
    share = jq.mean() / (jq.mean() + iv)

    e = ma1_noise(1.0, -0.5, 10 ** 6, stream(9, 2))
    ac1 = float(np.corrcoef(e[1:], e[:-1])[0, 1])

    integral = float(true_profile(DiurnalShape(), cfg.seconds_grid).sigma2_u.mean())

    moments = []
    for kind in ("gaussian", "mammen"):
        u = draw_external(kind, 10 ** 6, stream(9, 3))
        moments.append((float(u.mean()), float(u.var())))

    ok = (abs(share - 0.2) <= 0.02 and abs(ac1 + 0.4) <= 0.02 and abs(integral - 1) <= 1e-4
          and all(abs(a) <= 0.002 and abs(v - 0.5) <= 0.002 for a, v in moments))
    record("C9 simulator moments", ok,
           f"jump QV share {share:.3f}; MA lag-1 {ac1:.3f}; profile integral {integral:.6f}; "
           f"external (mean, var) " + ", ".join(f"({a:+.4f}, {v:.4f})" for a, v in moments))
    assert ok


# --- criterion 10: determinism --------------------------------------------

def test_c10_determinism(tmp_path):
    spec = CellSpec(n=4680, hypothesis="null")
    emit_report(run_monte_carlo([spec], workers=1), tmp_path / "serial")
    emit_report(run_monte_carlo([spec], workers=max(2, WORKERS)), tmp_path / "parallel")
    names = sorted(os.listdir(tmp_path / "serial"))
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "serial", tmp_path / "parallel", names,
                                               shallow=False)
    ok = not mismatch and not errors and len(match) == 5
    record("C10 determinism", ok, f"{len(match)} identical CSVs, mismatched {mismatch + errors}")
    assert ok
