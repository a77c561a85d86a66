"""Kernel quadrature: weights, nonlocal fields and their derivatives."""

import numpy as np
import pytest
from scipy import integrate, special

from ntcentral.core import BoundaryCondition, Grid, init_cell_averages
from ntcentral.errors import ConfigurationError, KernelDefinitionError
from ntcentral.kernels import (
    KernelSpec,
    build_derivative_weights,
    build_weights,
    builtin_kernel,
    eval_nonlocal_field,
    eval_nonlocal_space_derivative,
    eval_nonlocal_time_derivative,
    kernel_integral,
    normalize_kernel,
)
from ntcentral.limiters import cell_slopes

PER = BoundaryCondition.PERIODIC


def test_backward_power_normalization_matches_beta_integral():
    # raw shape is (-x (eta + x))^(5/2) on [-eta, 0]; substituting x = -eta t
    # turns its integral into eta^6 * Beta(7/2, 7/2)
    eta = 0.5
    spec = builtin_kernel("backward-power52", eta)
    raw_mass = eta**6 * special.beta(3.5, 3.5)
    assert spec.normalization == pytest.approx(1.0 / raw_mass, rel=1e-9)
    assert kernel_integral(spec) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", ["constant", "linear", "concave", "symmetric-parabola"])
def test_builtin_kernels_have_unit_integral(name):
    spec = builtin_kernel(name, 0.37)
    assert kernel_integral(spec) == pytest.approx(1.0, abs=1e-10)


def test_quadrature_weights_constant_kernel_by_hand():
    # eta = 2 dx: half-cell ends carry dx/2 * omega, one interior cell dx * omega
    dx = 0.1
    qw = build_weights(builtin_kernel("constant", 2 * dx), dx)
    assert (qw.n1, qw.n2) == (0, 2)
    np.testing.assert_allclose(qw.weights, [0.25, 0.5, 0.25], atol=1e-14)


def test_quadrature_weights_linear_kernel_by_hand():
    # omega(y) = (2/eta)(1 - y/eta) with eta = 2 dx evaluated at dx/4, dx, 7dx/4
    dx = 0.05
    qw = build_weights(builtin_kernel("linear", 2 * dx), dx)
    np.testing.assert_allclose(qw.weights, [0.4375, 0.5, 0.0625], atol=1e-14)
    assert qw.total() == pytest.approx(1.0, abs=1e-14)


def test_weight_sums_exact_for_polynomial_degree_one_kernels():
    for name in ("constant", "linear"):
        qw = build_weights(builtin_kernel(name, 0.2), 0.2 / 16)
        assert qw.total() == pytest.approx(1.0, abs=1e-13)


def test_weight_sum_second_order_for_curved_kernels():
    errs = []
    for n in (8, 16, 32):
        qw = build_weights(builtin_kernel("concave", 0.2), 0.2 / n)
        errs.append(abs(qw.total() - 1.0))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


def test_fractional_support_is_rejected():
    with pytest.raises(ConfigurationError, match="integer multiple"):
        build_weights(builtin_kernel("constant", 0.013), 0.05)


def test_negative_kernel_weights_are_rejected():
    spec = KernelSpec(omega=lambda x: np.cos(40.0 * np.asarray(x)), support=(0.0, 1.0))
    with pytest.raises(KernelDefinitionError, match="negative"):
        build_weights(spec, 0.125)


def test_normalize_kernel_rejects_zero_mass():
    spec = KernelSpec(omega=lambda x: 0.0 * np.asarray(x), support=(0.0, 1.0))
    with pytest.raises(KernelDefinitionError, match="cannot normalize"):
        normalize_kernel(spec)


def test_builtin_kernel_validation():
    with pytest.raises(KernelDefinitionError, match="available"):
        builtin_kernel("gaussian", 0.5)
    with pytest.raises(KernelDefinitionError):
        builtin_kernel("constant", -1.0)


def test_derivative_weights_need_closed_form_derivative():
    spec = KernelSpec(omega=lambda x: np.ones_like(np.asarray(x)), support=(0.0, 1.0))
    with pytest.raises(KernelDefinitionError, match="omega_prime"):
        build_derivative_weights(spec, 0.25)


def _convolution_setup(n, eta, kernel):
    grid = Grid(-1.0, 1.0, n)
    state = init_cell_averages(lambda x: np.sin(np.pi * x), grid)
    u = state.values
    s = cell_slopes(u, grid.dx, PER)
    qw = build_weights(builtin_kernel(kernel, eta), grid.dx)
    return grid, u, s, qw


def test_nonlocal_field_converges_to_analytic_convolution():
    # constant kernel: R(x) = (cos(pi x) - cos(pi (x + eta))) / (pi eta)
    eta = 0.25
    errs = []
    for n in (64, 128, 256):
        grid, u, s, qw = _convolution_setup(n, eta, "constant")
        R = eval_nonlocal_field(u, s, qw, PER)
        x = grid.centers
        exact = (np.cos(np.pi * x) - np.cos(np.pi * (x + eta))) / (np.pi * eta)
        errs.append(np.abs(R[0] - exact).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() > 1.8


def test_nonlocal_field_dense_quadrature_cross_check():
    # compare against a dense trapezoid evaluation of the piecewise linear
    # reconstruction; the band rule samples the kernel at cell midpoints, so
    # the two differ by O(dx^2) of kernel variation inside the cells
    eta = 0.2
    spec = builtin_kernel("linear", eta)
    yq = np.linspace(0.0, eta, 40001)
    diffs = []
    for n in (80, 160):
        grid, u, s, qw = _convolution_setup(n, eta, "linear")
        R = eval_nonlocal_field(u, s, qw, PER)

        def dense_at(j0):
            xq = grid.centers[j0] + yq
            jf = np.floor((xq - grid.x_left) / grid.dx).astype(int) % grid.cells
            xq_wrapped = grid.x_left + (xq - grid.x_left) % 2.0
            recon = u[0][jf] + s[0][jf] * (xq_wrapped - grid.x_left - (jf + 0.5) * grid.dx)
            return np.trapezoid(recon * spec.omega(yq), yq)

        sample = range(3, grid.cells, grid.cells // 8)
        diffs.append(max(abs(R[0][j] - dense_at(j)) for j in sample))
    assert diffs[0] < 2e-3
    assert diffs[1] < 0.35 * diffs[0]


def test_time_derivative_band_matches_plain_average():
    # the time-derivative band is the field quadrature without slope
    # corrections, applied to an arbitrary cellwise integrand
    grid, u, s, qw = _convolution_setup(64, 0.25, "constant")
    g = np.cos(3.0 * grid.centers)[None, :]
    via_td = eval_nonlocal_time_derivative(g, qw, PER)
    via_field = eval_nonlocal_field(g, None, qw, PER)
    np.testing.assert_allclose(via_td, via_field, atol=1e-15)


def test_space_derivative_constant_kernel_is_a_difference_quotient():
    # for the constant kernel the derivative is exactly
    # (u(x + eta) - u(x)) / eta; the discrete version uses the cell band ends
    eta = 0.25
    errs = []
    for n in (64, 128, 256):
        grid, u, s, qw = _convolution_setup(n, eta, "constant")
        dw = build_derivative_weights(builtin_kernel("constant", eta), grid.dx)
        dR = eval_nonlocal_space_derivative(u, s, dw, PER)
        x = grid.centers
        exact = (np.sin(np.pi * (x + eta)) - np.sin(np.pi * x)) / eta
        errs.append(np.abs(dR[0] - exact).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() > 1.8


def test_space_derivative_linear_kernel_against_quadrature():
    eta = 0.2
    grid, u, s, _ = _convolution_setup(160, eta, "linear")
    spec = builtin_kernel("linear", eta)
    dw = build_derivative_weights(spec, grid.dx)
    dR = eval_nonlocal_space_derivative(u, s, dw, PER)

    def exact_at(x0):
        val, _ = integrate.quad(
            lambda y: np.pi * np.cos(np.pi * (x0 + y)) * spec.omega(y), 0.0, eta
        )
        return val

    idx = [0, 31, 77, 119, 159]
    exact = np.array([exact_at(grid.centers[i]) for i in idx])
    np.testing.assert_allclose(dR[0][idx], exact, atol=2e-3)


def test_extended_evaluation_matches_wrapped_interior():
    # asking for ghost cells of a periodic field must agree with rolling it
    grid, u, s, qw = _convolution_setup(40, 0.25, "constant")
    base = eval_nonlocal_field(u, s, qw, PER)
    ext = eval_nonlocal_field(u, s, qw, PER, extend=3)
    assert ext.shape[-1] == 46
    np.testing.assert_allclose(ext[:, 3:-3], base, atol=1e-15)
    np.testing.assert_allclose(ext[:, :3], base[:, -3:], atol=1e-15)
    np.testing.assert_allclose(ext[:, -3:], base[:, :3], atol=1e-15)


def test_kernel_support_validation():
    with pytest.raises(KernelDefinitionError, match="support"):
        KernelSpec(omega=lambda x: x, support=(0.5, 1.0))
