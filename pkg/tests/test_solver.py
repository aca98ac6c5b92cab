import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_lab.grid import Grid, read_bfld
from beltrami_lab.oracles import radial_stretch_oracle
from beltrami_lab.solver import (
    CoefficientError,
    ConvergenceError,
    SolverConfig,
    commutator,
    identity_residual,
    lifted_derivative_split,
    solve,
    validate_coefficients,
)
from beltrami_lab.spectral import beurling, disk_indicator, fractional_derivative, mollify


@pytest.fixture(scope="module")
def g128():
    return Grid(128, 4.0)


def test_validate_examples(g128):
    chi = disk_indicator(g128)
    c = validate_coefficients(chi * 0.5, g128.zeros())
    assert c.kappa == 0.5
    assert 1.0 <= c.support_radius <= 1.0 + g128.spacing
    with pytest.raises(CoefficientError, match="1.1"):
        validate_coefficients(chi * 0.6, chi * 0.5)
    mu, _, _ = radial_stretch_oracle(0.3, g128)
    assert validate_coefficients(mu).kappa == pytest.approx(0.3, rel=1e-3)


def test_validate_support(g128):
    wide = disk_indicator(g128, radius=1.5) * 0.3
    with pytest.raises(CoefficientError, match="unit disk"):
        validate_coefficients(wide)
    c = validate_coefficients(wide, rescale=True)
    assert c.support_radius > 1.4
    with pytest.raises(CoefficientError):
        validate_coefficients(wide, Grid(64, 4.0).zeros())


def test_config_validation():
    for kw in ({"tolerance": 0}, {"tolerance": 1}, {"max_iterations": 0},
               {"over_relaxation": 2.0}, {"anderson": -1}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    cfg = SolverConfig(1e-10, 10)
    assert cfg.iteration_bound(0.3) == 21
    with pytest.raises(ValueError, match="need 21"):
        cfg.check(0.3)


def test_zero_coefficients(g128):
    sol = solve(validate_coefficients(g128.zeros()), SolverConfig())
    assert sol.iterations == 1 and sol.h.sup() == 0
    assert (sol.f() - g128.field(g128.z)).sup() == 0


def test_perturbative_regime(g128):
    eps = 1e-3
    mu = disk_indicator(g128) * eps
    sol = solve(validate_coefficients(mu))
    assert (sol.h - mu).norm() <= 2 * eps * mu.norm()


def test_disk_indicator_exact_solution(g128):
    # mu = k chi_D: h = k chi_D solves h = mu B h + mu since B chi_D = 0 on D
    mu = disk_indicator(g128) * 0.3
    sol = solve(validate_coefficients(mu))
    assert (sol.h - mu).norm() / mu.norm() < 0.05


def _residual(c, h):
    Bh = beurling(h)
    return (h - c.mu * Bh - c.nu * Bh.conj() - c.mu - c.nu).norm() / h.norm()


@pytest.mark.parametrize("k", [0.1, 0.5, 0.8])
def test_contraction_and_contract(g128, k):
    mu, _, _ = radial_stretch_oracle(k, g128)
    nu = disk_indicator(g128) * 0.05 if k < 0.8 else g128.zeros()
    mu = mu * ((k - 0.05) / k) if k < 0.8 else mu
    c = validate_coefficients(mu, nu)
    cfg = SolverConfig(1e-10, SolverConfig(1e-10).iteration_bound(c.kappa) + 5)
    sol = solve(c, cfg)
    assert sol.residual <= 1e-10
    assert _residual(c, sol.h) == pytest.approx(sol.residual, rel=1e-3, abs=1e-13)
    assert sol.iterations <= cfg.iteration_bound(c.kappa)
    inc = sol.increments()
    assert np.all(inc[2:] <= (c.kappa + 1e-6) * inc[1:-1])
    assert sol.h.norm() <= (c.mu + c.nu).norm() / (1 - c.kappa)
    # orientation preservation
    assert sol.jacobian().min() > 0
    # norm transfer: ||d f - 1|| = ||B h|| = ||h - mean h|| (B kills the mean)
    h0 = sol.h - sol.h.mean()
    assert abs((sol.d_f - 1.0).norm() - h0.norm()) <= 1e-10 * h0.norm()


def test_linearity_in_forcing(g128):
    mu, _, _ = radial_stretch_oracle(0.4, g128)
    c = validate_coefficients(mu)
    cfg = SolverConfig(1e-12, 60)
    a = solve(c, cfg)
    b = solve(c, cfg, forcing=(c.mu + c.nu) * 2.0)
    assert (b.h - a.h * 2.0).norm() <= 1e-10 * b.h.norm()


def test_non_convergence_carries_history(g128):
    mu = disk_indicator(g128) * 0.9
    c = validate_coefficients(mu, rescale=True)
    with pytest.raises(ConvergenceError) as exc:
        solve(c, SolverConfig(1e-12, 3, over_relaxation=0.5))
    assert len(exc.value.history) == 3


def test_anderson_and_relaxation_converge(g128):
    mu, _, _ = radial_stretch_oracle(0.6, g128)
    c = validate_coefficients(mu)
    plain = solve(c, SolverConfig(1e-10, 80))
    acc = solve(c, SolverConfig(1e-10, 80, anderson=4))
    assert acc.iterations < plain.iterations
    assert (acc.h - plain.h).norm() <= 1e-8 * plain.h.norm()
    relaxed = solve(c, SolverConfig(1e-10, 200, over_relaxation=0.8))
    assert (relaxed.h - plain.h).norm() <= 1e-8 * plain.h.norm()


def test_iteration_log_and_dump(tmp_path, g128):
    mu, _, _ = radial_stretch_oracle(0.3, g128)
    sol = solve(validate_coefficients(mu))
    rows = list(csv.reader(io.StringIO(sol.iteration_log_csv())))
    assert rows[0] == ["iteration", "residual", "elapsed"]
    assert len(rows) == sol.iterations + 1
    assert float(rows[-1][1]) == sol.residual
    paths = sol.dump(tmp_path / "out")
    assert np.array_equal(read_bfld(paths["h"]).values, sol.h.values)
    assert np.array_equal(read_bfld(paths["f_disp"]).values, sol.f_displacement.values)


def test_principal_solution_matches_oracle_map():
    g = Grid(256, 4.0)
    mu, f, _ = radial_stretch_oracle(0.3, g)
    sol = solve(validate_coefficients(mu))
    r = np.abs(g.z)
    probe = (r > 0.3) & (r < 1.8)
    err = np.abs(sol.f().values - f.values)[probe].max()
    assert err < 0.03


# -- commutators ---------------------------------------------------------------


def _smooth(g, seed, width=1.0):
    r = np.random.default_rng(seed)
    spec = np.fft.fft2(r.standard_normal((g.n, g.n)) + 1j * r.standard_normal((g.n, g.n)))
    spec[g.lattice.modulus > 3] = 0
    v = np.fft.ifft2(spec)
    return g.field(v / np.abs(v).max() * np.exp(-np.pi * np.abs(g.z) ** 2 / width**2))


def test_commutator_vanishes_on_constants(g128):
    f = _smooth(g128, 1)
    assert commutator(g128.constant(0.7 - 0.2j), 0.5, f).sup() < 1e-12
    mu = _smooth(g128, 2)
    c = 1.5 - 0.5j
    got = commutator(mu, 0.5, g128.constant(c))
    assert (got + fractional_derivative(mu, 0.5) * c).sup() < 1e-12


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), s=st.floats(0.05, 0.95))
def test_commutator_bilinear(a, b, s):
    g = Grid(64, 4.0)
    mu1, mu2, f1, f2 = (_smooth(g, k) for k in range(4))
    lhs = commutator(mu1 * a + mu2 * b, s, f1)
    rhs = commutator(mu1, s, f1) * a + commutator(mu2, s, f1) * b
    assert (lhs - rhs).sup() <= 1e-11
    lhs = commutator(mu1, s, f1 * a + f2 * b)
    rhs = commutator(mu1, s, f1) * a + commutator(mu1, s, f2) * b
    assert (lhs - rhs).sup() <= 1e-11


def test_commutator_rejects_order(g128):
    for s in (0, 1, 1.2, -0.1):
        with pytest.raises(ValueError):
            commutator(g128.zeros(), s, g128.zeros())


def test_commutator_bound_uses_frozen_constant():
    from beltrami_lab.experiments import commutator_ratio, load_calibration, smooth_pair

    cal = load_calibration()["commutator"]
    for seed in range(3):
        r = [commutator_ratio(*smooth_pair(Grid(n, 4.0), seed)) for n in (256, 512)]
        assert max(r) <= cal["constant"]
        assert abs(r[1] / r[0] - 1) <= 0.2


# -- identities ------------------------------------------------------------------


def test_identity_residual_trivial(g128):
    c = validate_coefficients(g128.zeros())
    sol = solve(c)
    assert identity_residual(c, sol, 0.5).residual == 0
    with pytest.raises(ValueError):
        identity_residual(c, sol, 1.2)


@pytest.mark.parametrize("smooth", [True, False])
def test_identity_residual_holds_discretely(g128, smooth):
    mu = disk_indicator(g128) * 0.4
    nu = disk_indicator(g128, 0.6) * 0.3
    if smooth:
        mu, nu = mollify(mu, 8), mollify(nu, 8)
    c = validate_coefficients(mu, nu, rescale=True)
    sol = solve(c, SolverConfig(1e-12, 120))
    for s in (0.25, 0.5, 0.9):
        assert identity_residual(c, sol, s).residual <= 1e-6


def test_lifted_split_trivial(g128):
    c = validate_coefficients(g128.zeros())
    ls = lifted_derivative_split(solve(c), 1.5)
    assert ls.direct.sup() == 0 and ls.assembled.sup() == 0 and ls.discrepancy == 0
    assert not ls.under_resolved
    with pytest.raises(ValueError):
        lifted_derivative_split(solve(c), 0.5)


def test_lifted_split_converges_with_resolution():
    disc = []
    for n in (128, 256):
        g = Grid(n, 4.0)
        mu = mollify(disk_indicator(g) * 0.3, 4)
        nu = mollify(disk_indicator(g, 0.5) * 0.2, 4)
        c = validate_coefficients(mu, nu, rescale=True)
        ls = lifted_derivative_split(solve(c, SolverConfig(1e-12, 120)), 1.5)
        disc.append(ls.discrepancy)
        assert not ls.under_resolved
    assert disc[1] < disc[0] / 4


def test_lifted_split_flags_discontinuous_coefficient(g128):
    c = validate_coefficients(disk_indicator(g128) * 0.3)
    ls = lifted_derivative_split(solve(c, SolverConfig(1e-12, 60)), 1.5)
    assert ls.under_resolved and ls.dmu_growth >= 0.5
    assert math.isfinite(ls.discrepancy)
