"""Acceptance criteria, each at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL ...`` line, printed in the
terminal summary, then asserts.
"""

import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from beltrami_lab.experiments import (
    CALIBRATION_PATH,
    CoefficientFamily,
    ProbeSpec,
    calibration_sweep,
    check_monotone,
    run_probe,
)
from beltrami_lab.grid import Grid, sample_at
from beltrami_lab.oracles import beurling_disk_quadrature, probe_points, radial_stretch_oracle
from beltrami_lab.solver import (
    SolverConfig,
    identity_residual,
    lifted_derivative_split,
    solve,
    validate_coefficients,
)
from beltrami_lab.spaces import SobolevIndex, admissible_q_threshold
from beltrami_lab.spectral import beurling, disk_indicator, fractional_derivative, mollify

from conftest import ACCEPTANCE_LINES, random_field


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_1_beurling_unitarity():
    t0 = time.perf_counter()
    g = Grid(512, 4.0)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(50):
        f = random_field(g, rng)
        worst = max(worst, abs(beurling(f).norm() / f.norm() - 1))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-10 and dt <= 10,
           f"max |‖Bf‖/‖f‖ - 1| = {worst:.2e} (<= 1e-10), {dt:.1f} s (<= 10 s)")


def test_criterion_2_beurling_disk_oracle():
    t0 = time.perf_counter()
    pts = probe_points(20, snap=8 / 256)
    exact = np.array([beurling_disk_quadrature(z) for z in pts])
    errs = {}
    for n in (256, 512, 1024):
        bf = beurling(disk_indicator(Grid(n, 4.0)))
        errs[n] = float(np.abs(sample_at(bf, pts) - exact).max())
    dt = time.perf_counter() - t0
    monotone = errs[256] > errs[512] > errs[1024]
    detail = (f"max error {errs[256]:.4f} / {errs[512]:.4f} / {errs[1024]:.4f} at n=256/512/1024 "
              f"(n=1024 <= 0.05: {errs[1024] <= 0.05}; monotone: {monotone}), {dt:.1f} s (<= 60 s)")
    record(2, errs[1024] <= 0.05 and monotone and dt <= 60, detail)


def test_criterion_3_solver_vs_radial_stretch():
    t0 = time.perf_counter()
    g = Grid(1024, 4.0)
    mu, _, h = radial_stretch_oracle(0.3, g)
    coeffs = validate_coefficients(mu)
    cfg = SolverConfig(1e-10, 200)
    sol = solve(coeffs, cfg)
    dt = time.perf_counter() - t0
    err = (sol.h - h).norm() / h.norm()
    stated = math.ceil(math.log(1e-10 * 0.7) / math.log(0.3)) + 1
    bound = cfg.iteration_bound(coeffs.kappa)
    ok = err <= 2e-2 and sol.iterations <= 22 and sol.iterations <= stated and dt <= 120
    record(3, ok, f"relative L2 error {err:.4f} (<= 2e-2), {sol.iterations} iterations "
                  f"(<= 22; computed bound {stated}, kappa-measured bound {bound}), {dt:.1f} s (<= 120 s)")


def _contraction_corpus(g):
    chi = disk_indicator(g)
    half = disk_indicator(g, 0.5)
    for k in (0.1, 0.3, 0.5, 0.8):
        yield f"chi_D k={k}", chi * k, g.zeros()
        yield f"radial k={k}", radial_stretch_oracle(k, g)[0], g.zeros()
        yield f"mixed k={k}", chi * (0.6 * k), half * (0.4 * k)
        yield f"mollified k={k}", mollify(chi * (0.5 * k), 8), mollify(half * (0.5 * k), 8)


def test_criterion_4_contraction_certificate():
    g = Grid(256, 4.0)
    worst, runs, names = -np.inf, 0, []
    for name, mu, nu in _contraction_corpus(g):
        c = validate_coefficients(mu, nu, rescale=True)
        sol = solve(c, SolverConfig(1e-10, 400))
        r = sol.increments()
        excess = np.max(r[2:] / r[1:-1] - c.kappa) if len(r) > 2 else -np.inf
        worst = max(worst, excess)
        runs += 1
        if excess > 1e-6:
            names.append(name)
    record(4, worst <= 1e-6,
           f"{runs} runs, kappa in {{0.1, 0.3, 0.5, 0.8}}: max(r_m+1/r_m - kappa) = {worst:.2e} "
           f"(<= 1e-6){'; violations ' + ', '.join(names) if names else ''}")


def test_criterion_5_identity_residuals():
    g = Grid(512, 4.0)
    mu, _, _ = radial_stretch_oracle(0.3, g)
    mu = mollify(mu, 8)
    c = validate_coefficients(mu, rescale=True)
    sol = solve(c, SolverConfig(1e-12, 200))
    res = identity_residual(c, sol, 0.5).residual
    split = lifted_derivative_split(sol, 1.5)
    ok_a, ok_b = res <= 1e-6, split.discrepancy <= 1e-5
    record(5, ok_a and ok_b,
           f"identity residual s=0.5 {res:.2e} (<= 1e-6: {ok_a}); lifted split s=1.5 "
           f"discrepancy {split.discrepancy:.2e} (<= 1e-5: {ok_b})")


def test_criterion_6_semigroup_and_commutation():
    g = Grid(256, 4.0)
    rng = np.random.default_rng(6)
    semi, comm = 0.0, 0.0
    for _ in range(20):
        f = random_field(g, rng, band=20.0)
        d1 = fractional_derivative(f, 1.0)
        semi = max(semi, (fractional_derivative(fractional_derivative(f, 0.7), 0.3) - d1).norm() / d1.norm())
        s = rng.uniform(0.1, 1.9)
        ds = fractional_derivative(f, s)
        comm = max(comm, (fractional_derivative(beurling(f), s) - beurling(ds)).norm() / ds.norm())
    record(6, semi <= 1e-10 and comm <= 1e-12,
           f"semigroup {semi:.2e} (<= 1e-10), D^s B - B D^s {comm:.2e} (<= 1e-12) on 20 fields")


def test_criterion_7_mollifier_ellipticity():
    g = Grid(256, 4.0)
    rng = np.random.default_rng(7)
    chi = disk_indicator(g).values
    worst = 0.0
    for trial in range(10):
        split = rng.uniform(0, 1, (g.n, g.n))
        if trial % 2:
            # saturating: |mu| + |nu| = 0.8 on all of D, coherent phases
            split = np.full((g.n, g.n), split[0, 0])
            pa, pb = np.exp(2j * np.pi * rng.uniform(size=2))
            mag = 0.8 * chi
        else:
            pa, pb = np.exp(2j * np.pi * rng.uniform(size=(2, g.n, g.n)))
            mag = rng.uniform(0, 1, (g.n, g.n)) * chi
            mag = 0.8 * mag / mag.max()
        mu = split * mag * pa
        nu = (1 - split) * mag * pb
        pair = (g.field(mu), g.field(nu))
        assert validate_coefficients(*pair).kappa == pytest.approx(0.8)
        for n_moll in (2, 4, 8, 16):
            m, v = (mollify(x, n_moll) for x in pair)
            worst = max(worst, float(np.max(np.abs(m.values) + np.abs(v.values))))
    record(7, worst <= 0.8 + 1e-12,
           f"max ‖|mu_n| + |nu_n|‖_inf = {worst:.15f} (<= 0.8 + 1e-12) over 10 pairs x 4 scales")


def test_criterion_8_calibration(tmp_path):
    path = tmp_path / "calibration.json"
    cal = calibration_sweep(path=path)
    f0 = cal["f0_l2_ratio"]
    ok_f0 = 0.9 <= f0["min"] and f0["max"] <= 1.1
    cross = cal["tl_difference_ratio"]
    norm = list(cross["normalised"].values())
    ok_cross = all(1 / 3 <= r <= 3 for r in norm)
    dev = max(abs(v["ratio"] / v["expected"] - 1) for v in cal["scaling"].values())
    ok_scale = dev <= 0.15
    frozen = path.read_bytes() == CALIBRATION_PATH.read_bytes()
    raw = list(cross["raw"].values())
    record(8, ok_f0 and ok_cross and ok_scale and frozen,
           f"F0/L2 in [{f0['min']:.3f}, {f0['max']:.3f}] (within [0.9, 1.1]); TL/difference "
           f"normalised in [{min(norm):.3f}, {max(norm):.3f}] (within [1/3, 3]; raw "
           f"[{min(raw):.2f}, {max(raw):.2f}], centre {cross['centre']:.3f}); scaling max deviation "
           f"{dev:.3f} (<= 0.15); frozen file reproduced: {frozen}")


def test_criterion_9_exponent_arithmetic():
    t = admissible_q_threshold(SobolevIndex(0.3, 4), 0.3)
    c = admissible_q_threshold(SobolevIndex(1, 2), Fraction(7, 10))
    v = admissible_q_threshold(SobolevIndex(0.5, 2), 0.8)
    ok = (t.threshold == Fraction(25, 52) and Fraction(125, 260) == t.threshold
          and str(float(t.threshold)).startswith("0.480769230")
          and c.threshold == Fraction(1, 2) and v.verdict == "hypothesis-violated")
    record(9, ok, f"threshold {t.threshold} = {float(t.threshold):.10f}; critical {c.threshold}; "
                  f"(0.5, 2) at 0.8: {v.verdict}")


def test_criterion_10_threshold_probe():
    spec = ProbeSpec(CoefficientFamily.disk_indicator(0.3), SobolevIndex(0.3, 4, 2), 0.3,
                     [1.8, 2.5, 3.5], [256, 512, 1024])
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = run_probe(spec)
    dt = time.perf_counter() - t0
    check_monotone(spec.q_grid, res.verdicts)
    table = ", ".join(f"q={q}: {res.verdicts[q]} ({100 * res.growth_rates[q]:.2f}%)" for q in spec.q_grid)
    ok = res.verdicts[1.8] == "stable" and len(res.rows()) == 9 and dt <= 1800
    record(10, ok, f"{table}; threshold q < {float(res.threshold.q_max):.4f}; {dt:.1f} s (<= 1800 s)")
