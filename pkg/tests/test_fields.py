import numpy as np
import pytest

from holoflow.errors import BoundaryViolationError, ClosureError
from holoflow.fields import (
    RadialGaugeField,
    SphereGrid,
    build_connection,
    close_xi,
    compute_gauge_potential,
    curvature_density,
    decompose,
    gauge_transform_loopwise,
    geodesic_generator,
    grad_norm,
    gradient_components,
    holonomy,
    monodromy,
    project_closure,
    radial_derivative,
    random_connection,
    residual_energy,
    winding,
    xi_energy,
    ym_energy,
)
from holoflow.groups import SU2, U1, AlgebraElement, GroupLoop, exp_map, loop_derivative
from holoflow.loops import loop_energy

from helpers import random_loop

C = 0.5  # energy comparison constant under the [0, 2*pi) conventions


def geodesic_field(grid, group, label):
    return RadialGaugeField.geodesic(grid, geodesic_generator(group, label))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def test_curvature_zero_field():
    grid = SphereGrid(32, 16)
    f = RadialGaugeField.zeros(grid, SU2)
    assert np.max(np.abs(curvature_density(f))) == 0.0


def test_curvature_geodesic_field_half_eta():
    eta = geodesic_generator(SU2, 1)
    errs = []
    for n_r in (64, 128):
        grid = SphereGrid(n_r, 8)
        w = curvature_density(RadialGaugeField.geodesic(grid, eta))
        # two rows nearest each pole are excluded from accuracy claims
        diff = np.abs(w[2:-2] - 0.5 * eta.mat)
        errs.append(float(np.max(diff)))
    assert errs[0] <= 1e-3
    assert errs[0] / errs[1] >= 3.5  # second order


def test_radial_derivative_second_order():
    errs = []
    for n_r in (32, 64):
        grid = SphereGrid(n_r, 4)
        f = np.sin(2.0 * grid.r) ** 2
        df = radial_derivative(grid, f)
        exact = 2.0 * np.sin(4.0 * grid.r)
        errs.append(float(np.max(np.abs(df - exact))))
    assert errs[0] / errs[1] >= 3.5


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------


def test_ym_energy_zero_and_positive():
    grid = SphereGrid(32, 16)
    assert ym_energy(RadialGaugeField.zeros(grid, U1)) == 0.0
    f = random_connection(grid, SU2, seed=3, class_label=0, amplitude=0.2)
    assert ym_energy(f) > 0.0


def test_ym_energy_u1_analytic_value():
    # (1/2) * 2*pi * int_0^pi (1/4) sin r dr = pi/2 for u = ell * i
    grid = SphereGrid(256, 8)
    f = geodesic_field(grid, U1, 1)
    assert ym_energy(f) == pytest.approx(np.pi / 2.0, abs=1e-4)


def test_ym_energy_rotation_invariance():
    grid = SphereGrid(48, 32)
    f = random_connection(grid, SU2, seed=11, amplitude=0.3)
    rolled = f.with_u(np.roll(f.u, 5, axis=1))
    assert ym_energy(rolled) == pytest.approx(ym_energy(f), rel=1e-12)


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


def test_decompose_geodesic():
    grid = SphereGrid(32, 16)
    eta = geodesic_generator(SU2, 1)
    d = decompose(RadialGaugeField.geodesic(grid, eta))
    assert np.max(np.abs(d.xi - eta.mat)) == 0.0
    assert np.max(np.abs(d.m)) == 0.0


def test_decompose_recovers_bump():
    grid = SphereGrid(32, 16)
    eta = geodesic_generator(U1, 1)
    bump = np.zeros((33, 16, 1, 1), dtype=complex)
    bump[:, :, 0, 0] = (np.sin(grid.r) ** 2)[:, None] * 1j
    f = build_connection(grid, U1, np.broadcast_to(eta.mat, (16, 1, 1)), bump)
    d = decompose(f)
    assert np.max(np.abs(d.xi - eta.mat)) <= 1e-14
    assert np.max(np.abs(d.m - bump)) <= 1e-14


def test_build_decompose_roundtrip_bit_exact():
    grid = SphereGrid(24, 16)
    f = random_connection(grid, SU2, seed=5, class_label=1, amplitude=0.2)
    d = decompose(f)
    g = build_connection(grid, SU2, d.xi, d.m)
    assert np.array_equal(g.u, f.u)


def test_build_rejects_bad_boundary():
    grid = SphereGrid(16, 8)
    xi = np.zeros((8, 1, 1), dtype=complex)
    m = np.full((17, 8, 1, 1), 0.1j)
    with pytest.raises(BoundaryViolationError):
        build_connection(grid, U1, xi, m)


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------


def test_holonomy_zero_field_is_identity_loop():
    grid = SphereGrid(16, 32)
    x = holonomy(RadialGaugeField.zeros(grid, SU2))
    assert np.max(np.abs(x.samples - np.eye(2))) <= 1e-14


def test_holonomy_u1_winding_loops():
    grid = SphereGrid(16, 64)
    for n in (1, 2, -1):
        f = geodesic_field(grid, U1, n)
        x = holonomy(f, tol_closure=1e-12)
        expected = np.exp(1j * n * grid.t)
        assert np.max(np.abs(x.samples[:, 0, 0] - expected)) <= 1e-12


def test_holonomy_su2_one_parameter_loop():
    grid = SphereGrid(8, 256)
    f = geodesic_field(grid, SU2, 1)
    x = holonomy(f)
    expected = np.stack([
        np.diag([np.exp(1j * t), np.exp(-1j * t)]) for t in grid.t
    ])
    assert np.max(np.abs(x.samples - expected)) <= 1e-8


def test_holonomy_rejects_nonclosing_field():
    grid = SphereGrid(16, 32)
    xi = np.full((32, 1, 1), 0.5j)  # integral pi*i: far from closing
    u = grid.ell[:, None, None, None] * xi[None]
    f = RadialGaugeField(grid, U1, u, check=False)
    with pytest.raises(ClosureError):
        holonomy(f)


def test_monodromy_and_winding():
    grid = SphereGrid(8, 64)
    xi0 = np.zeros((64, 1, 1), dtype=complex)
    assert np.allclose(monodromy(U1, xi0, grid.dt).mat, 1.0)
    assert winding(xi0, grid.dt) == 0
    for n in (-2, 1, 3):
        xin = np.full((64, 1, 1), 1j * n)
        assert winding(xin, grid.dt) == n
    eta = geodesic_generator(SU2, 1)
    xis = np.broadcast_to(eta.mat, (64, 2, 2))
    assert np.max(np.abs(monodromy(SU2, xis, grid.dt).mat - np.eye(2))) <= 1e-12
    with pytest.raises(ClosureError):
        winding(np.full((64, 1, 1), 0.5j), grid.dt)


# ---------------------------------------------------------------------------
# closure projection
# ---------------------------------------------------------------------------


def test_project_closure_already_closed():
    grid = SphereGrid(16, 32)
    f = geodesic_field(grid, SU2, 1)
    g = project_closure(f)
    assert np.array_equal(g.u, f.u)


def test_project_closure_u1_constant_shift():
    grid = SphereGrid(16, 64)
    eps = 0.037
    xi = np.full((64, 1, 1), 1j * (1.0 + eps))
    _, delta = close_xi(U1, xi, grid.dt)
    assert delta[0, 0] == pytest.approx(-1j * eps, abs=1e-13)


def test_project_closure_su2_random_drift():
    grid = SphereGrid(16, 64)
    rng = np.random.default_rng(17)
    f = random_connection(grid, SU2, seed=23, class_label=1, amplitude=0.15)
    drift = SU2.from_coeffs(1e-3 * rng.standard_normal(3))
    u = f.u + grid.ell[:, None, None, None] * drift[None, None]
    broken = f.with_u(u)
    fixed = project_closure(broken)
    mono = monodromy(SU2, fixed.xi, grid.dt)
    assert np.max(np.abs(mono.mat - np.eye(2))) <= 1e-12
    again = project_closure(fixed)
    assert np.max(np.abs(again.u - fixed.u)) <= 1e-12


# ---------------------------------------------------------------------------
# gauge potential
# ---------------------------------------------------------------------------


def test_gauge_potential_vanishes_on_geodesic_and_zero_fields():
    grid = SphereGrid(32, 16)
    assert np.max(np.abs(compute_gauge_potential(
        RadialGaugeField.zeros(grid, SU2)))) == 0.0
    psi = compute_gauge_potential(geodesic_field(grid, SU2, 1))
    assert np.max(np.abs(psi)) <= 1e-13


def test_gauge_potential_cancels_radial_gradient_component():
    # after subtracting d_r Psi, the radial descent component must vanish
    # to discretization order; measured away from the pole-regularization
    # collars (the integrand is log-singular there for nonconstant loops)
    errs = []
    for n in (32, 64, 128):
        grid = SphereGrid(n, n)
        f = random_connection(grid, SU2, seed=29, amplitude=0.2, smoothness=2.0)
        psi = compute_gauge_potential(f)
        grad_r, _ = gradient_components(f)
        resid = np.abs(grad_r - radial_derivative(grid, psi)).max(axis=(1, 2, 3))
        mask = (grid.r >= 0.3) & (grid.r <= np.pi - 0.3)
        errs.append(float(resid[mask].max()))
    assert errs[1] <= errs[0] / 2.5
    assert errs[2] <= errs[1] / 2.5


# ---------------------------------------------------------------------------
# gauge action
# ---------------------------------------------------------------------------


def test_gauge_transform_identity_and_constant():
    grid = SphereGrid(24, 32)
    f = random_connection(grid, SU2, seed=31, amplitude=0.25)
    gid = GroupLoop.constant(SU2, 32)
    assert np.max(np.abs(gauge_transform_loopwise(f, gid).u - f.u)) <= 1e-14
    h = exp_map(AlgebraElement(SU2, SU2.random_algebra(np.random.default_rng(1))))
    gconst = GroupLoop.constant(SU2, 32, h)
    fc = gauge_transform_loopwise(f, gconst)
    assert fc.pinned
    assert ym_energy(fc) == pytest.approx(ym_energy(f), abs=1e-12)


def test_gauge_transform_loop_energy_invariance_and_covariance():
    grid = SphereGrid(24, 64)
    f = random_connection(grid, SU2, seed=37, amplitude=0.2)
    g = random_loop(SU2, 64, seed=41, amplitude=0.3, modes=2)
    ft = gauge_transform_loopwise(f, g)
    assert abs(ym_energy(ft) - ym_energy(f)) <= 1e-8
    x = holonomy(f).samples
    xt = holonomy(ft, tol_closure=1e-6).samples
    g0_inv = np.conj(g.samples[0].T)
    expected = g0_inv[None] @ x @ g.samples
    assert np.max(np.abs(xt - expected)) <= 1e-6


# ---------------------------------------------------------------------------
# random connections
# ---------------------------------------------------------------------------


def test_random_connection_zero_amplitude_is_geodesic():
    grid = SphereGrid(32, 32)
    f = random_connection(grid, SU2, seed=1, class_label=1, amplitude=0.0)
    expected = RadialGaugeField.geodesic(grid, geodesic_generator(SU2, 1))
    assert np.array_equal(f.u, expected.u)


def test_random_connection_deterministic():
    grid = SphereGrid(24, 32)
    a = random_connection(grid, SU2, seed=99, class_label=1, amplitude=0.2)
    b = random_connection(grid, SU2, seed=99, class_label=1, amplitude=0.2)
    assert np.array_equal(a.u, b.u)
    c = random_connection(grid, SU2, seed=100, class_label=1, amplitude=0.2)
    assert not np.array_equal(a.u, c.u)


def test_random_connection_closure_valid():
    grid = SphereGrid(24, 32)
    for seed in range(6):
        f = random_connection(grid, U1 if seed % 2 else SU2, seed=seed,
                              class_label=seed % 2, amplitude=0.3)
        holonomy(f, tol_closure=1e-8)


# ---------------------------------------------------------------------------
# energy identity / inequality
# ---------------------------------------------------------------------------


def test_energy_identity_on_random_fields():
    grid = SphereGrid(128, 128)
    worst = 0.0
    for seed in range(10):
        group = SU2 if seed % 2 else U1
        f = random_connection(grid, group, seed=seed, class_label=seed % 2,
                              amplitude=0.25)
        d = decompose(f)
        lhs = ym_energy(f)
        rhs = C * loop_energy(holonomy(f)) + residual_energy(grid, d.m)
        worst = max(worst, abs(lhs - rhs) / max(lhs, 1e-6))
    assert worst <= 1e-3


def test_energy_identity_second_order_convergence():
    resids = []
    for n in (64, 128):
        grid = SphereGrid(n, n)
        f = random_connection(grid, SU2, seed=12, class_label=1, amplitude=0.25)
        d = decompose(f)
        lhs = ym_energy(f)
        rhs = C * loop_energy(holonomy(f)) + residual_energy(grid, d.m)
        resids.append(abs(lhs - rhs) / max(lhs, 1e-6))
    assert resids[0] / resids[1] >= 3.5


def test_energy_identity_discrete_split_is_exact():
    # with the staggered quadrature the split against xi-energy is exact
    grid = SphereGrid(48, 32)
    f = random_connection(grid, SU2, seed=13, class_label=1, amplitude=0.3)
    d = decompose(f)
    lhs = ym_energy(f)
    rhs = C * xi_energy(grid, d.xi) + residual_energy(grid, d.m)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_energy_inequality_and_geodesic_equality():
    grid = SphereGrid(96, 64)
    for seed in range(8):
        f = random_connection(grid, SU2, seed=seed, class_label=1, amplitude=0.2)
        lhs = ym_energy(f)
        rhs = C * loop_energy(holonomy(f))
        assert lhs >= rhs - 1e-3 * max(lhs, 1.0)
    for group, label in ((U1, 1), (U1, 2), (SU2, 1)):
        f = geodesic_field(grid, group, label)
        gap = abs(ym_energy(f) - C * loop_energy(holonomy(f)))
        assert gap <= 1e-8


def test_grad_norm_zero_at_geodesics():
    grid = SphereGrid(48, 32)
    assert grad_norm(geodesic_field(grid, SU2, 1)) <= 1e-10
    f = random_connection(grid, SU2, seed=2, amplitude=0.2)
    assert grad_norm(f) > 1e-3
