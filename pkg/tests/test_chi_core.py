"""Core representation, pipeline operations, and the moment engine."""

import math

import numpy as np
import pytest

from cvdistill.chi_core import (
    ChannelParams,
    CoherentOp,
    DegreeOverflowError,
    GaussianKernel,
    MomentEngine,
    PolyGaussianChi,
    SingularKernelError,
    ZERO_INDEX,
    ZeroStateError,
    apply_coherent_op,
    apply_thermal_channel,
    evaluate_chi,
    gaussian_monomial_integral,
    normalize,
    tmsv_chi,
)

import oracles


def vacuum_chi():
    k = np.zeros((4, 4))
    k[0, 1] = k[1, 0] = 0.5
    k[2, 3] = k[3, 2] = 0.5
    return PolyGaussianChi({ZERO_INDEX: 1.0}, GaussianKernel(k))


def pair_kernel(p):
    """Kernel whose exponent is -p (|xi1|^2 + |xi2|^2)."""
    k = np.zeros((4, 4))
    k[0, 1] = k[1, 0] = p
    k[2, 3] = k[3, 2] = p
    return GaussianKernel(k)


# ---------------------------------------------------------------------------
# state preparation

def test_tmsv_trace_is_one():
    for s in (0.0, 0.029, 0.114, 0.403, 1.2):
        st = tmsv_chi(s)
        assert st.trace == 1.0
        assert st.degree == 0


def test_tmsv_zero_squeezing_is_vacuum():
    st = tmsv_chi(0.0)
    np.testing.assert_allclose(st.kernel.quad, vacuum_chi().kernel.quad,
                               atol=1e-15)


def test_tmsv_kernel_entries():
    s = 0.403
    st = tmsv_chi(s)
    k = st.kernel.quad
    assert k[0, 1] == pytest.approx(math.cosh(0.806) / 2, abs=1e-15)
    assert k[2, 3] == pytest.approx(math.cosh(0.806) / 2, abs=1e-15)
    assert abs(k[0, 2]) == pytest.approx(math.sinh(0.806) / 2, abs=1e-15)
    assert k[0, 3] == 0.0 and k[1, 2] == 0.0


def test_tmsv_matches_fock_series():
    for s in (0.114, 0.6):
        st = tmsv_chi(s)
        for xi1, xi2 in ((0.3 + 0.2j, -0.1 + 0.4j), (1.0, 0.0),
                         (-0.5j, 0.25 - 0.75j)):
            ref = oracles.tmsv_chi_series(s, xi1, xi2)
            np.testing.assert_allclose(evaluate_chi(st, xi1, xi2), ref,
                                       atol=1e-10)


def test_tmsv_negative_squeezing_rejected():
    with pytest.raises(ValueError):
        tmsv_chi(-0.1)


def test_evaluate_chi_fixed_point():
    # chi(1, 0) of the s=0.114 squeezed vacuum, by hand
    st = tmsv_chi(0.114)
    assert evaluate_chi(st, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    val = evaluate_chi(st, 1.0, 0.0)
    assert val == pytest.approx(5.986654229206886e-01, abs=1e-12)


def test_evaluate_chi_hermiticity_spot_check():
    st = apply_coherent_op(tmsv_chi(0.3), 1, CoherentOp.from_t(0.8))
    a = evaluate_chi(st, 0.4 - 0.1j, 0.2 + 0.5j)
    b = evaluate_chi(st, -0.4 + 0.1j, -0.2 - 0.5j)
    np.testing.assert_allclose(a, np.conj(b), atol=1e-14)


# ---------------------------------------------------------------------------
# parameter containers

def test_coherent_op_validation():
    CoherentOp(1.0, 0.0)
    CoherentOp(0.6, 0.8)
    with pytest.raises(ValueError):
        CoherentOp(0.9, 0.9)
    with pytest.raises(ValueError):
        CoherentOp(-0.6, 0.8)
    with pytest.raises(ValueError):
        CoherentOp(1.2, 0.0)
    op = CoherentOp.from_t(0.7)
    assert op.t ** 2 + op.r ** 2 == pytest.approx(1.0, abs=1e-15)


def test_channel_params_validation():
    ChannelParams(1.0, 0.0)
    ChannelParams(0.3, 2.5)
    with pytest.raises(ValueError):
        ChannelParams(0.0, 0.1)
    with pytest.raises(ValueError):
        ChannelParams(1.1, 0.1)
    with pytest.raises(ValueError):
        ChannelParams(0.5, -0.1)


def test_kernel_validation():
    with pytest.raises(ValueError):
        GaussianKernel(np.array([[0.0, 1.0], [0.5, 0.0]]))  # not symmetric
    with pytest.raises(ValueError):
        GaussianKernel(np.zeros((3, 3)))
    assert tmsv_chi(0.5).kernel.swap_conjugation_defect() == 0.0


def test_multi_index_validation():
    k = pair_kernel(0.5)
    with pytest.raises(ValueError):
        PolyGaussianChi({(1, 0, 0): 1.0}, k)
    with pytest.raises(ValueError):
        PolyGaussianChi({(-1, 0, 0, 0): 1.0}, k)
    with pytest.raises(DegreeOverflowError):
        PolyGaussianChi({(3, 3, 3, 3): 1.0}, k)


# ---------------------------------------------------------------------------
# coherent operation

def test_subtraction_annihilates_vacuum():
    out = apply_coherent_op(vacuum_chi(), 1, CoherentOp(1.0, 0.0))
    assert abs(out.trace) < 1e-15
    with pytest.raises(ZeroStateError):
        normalize(out)


def test_addition_on_vacuum_gives_single_photon():
    # chi of |1><1| is (1 - |xi|^2) exp(-|xi|^2 / 2)
    out = apply_coherent_op(vacuum_chi(), 1, CoherentOp(0.0, 1.0))
    assert out.trace == pytest.approx(1.0, abs=1e-14)
    for xi in (0.37, -0.8 + 0.33j, 1.5j):
        want = (1 - abs(xi) ** 2) * math.exp(-abs(xi) ** 2 / 2)
        np.testing.assert_allclose(evaluate_chi(out, xi, 0.0), want, atol=1e-13)


def test_coherent_op_trace_on_vacuum():
    # Tr[(t a + r a^dag) rho (t a^dag + r a)] on vacuum = r^2
    out = apply_coherent_op(vacuum_chi(), 2, CoherentOp(0.6, 0.8))
    assert out.trace == pytest.approx(0.64, abs=1e-14)


def test_coherent_op_preserves_kernel_and_hermiticity():
    st = tmsv_chi(0.4)
    out = apply_coherent_op(st, 1, CoherentOp.from_t(0.3))
    assert out.kernel is st.kernel
    assert out.degree <= st.degree + 2
    assert out.is_hermitian()
    out2 = apply_coherent_op(out, 2, CoherentOp.from_t(0.9))
    assert out2.is_hermitian()
    assert out2.degree <= st.degree + 4


def test_degree_overflow_raised():
    st = tmsv_chi(0.2)
    op = CoherentOp.from_t(0.5)
    for _ in range(4):  # degree 0 -> 8, at the default cap
        st = apply_coherent_op(st, 1, op)
    with pytest.raises(DegreeOverflowError):
        apply_coherent_op(st, 1, op)


def test_subtraction_probability_closed_form():
    for s in (0.029, 0.403):
        st = tmsv_chi(s)
        op = CoherentOp(1.0, 0.0)
        out = apply_coherent_op(apply_coherent_op(st, 1, op), 2, op)
        np.testing.assert_allclose(out.trace,
                                   oracles.subtract_both_probability(s),
                                   rtol=1e-12)


# ---------------------------------------------------------------------------
# thermal channel

def test_channel_is_identity_at_unit_transmissivity():
    st = apply_coherent_op(tmsv_chi(0.3), 1, CoherentOp.from_t(0.7))
    out = apply_thermal_channel(st, 1, ChannelParams(1.0, 5.0))
    np.testing.assert_allclose(out.kernel.quad, st.kernel.quad, atol=1e-15)
    assert set(out.poly) == set(st.poly)
    for a in st.poly:
        assert out.poly[a] == pytest.approx(st.poly[a], abs=1e-15)


def test_channel_preserves_trace():
    st = apply_coherent_op(tmsv_chi(0.5), 1, CoherentOp.from_t(0.4))
    for eta, n_th in ((0.7, 0.0), (0.3, 0.8), (0.999, 2.0)):
        out = apply_thermal_channel(st, 1, ChannelParams(eta, n_th))
        out = apply_thermal_channel(out, 2, ChannelParams(eta, n_th))
        assert abs(out.trace - st.trace) < 1e-14


def test_channel_full_loss_limit_is_thermal():
    # eta -> 0: the mode-1 factor approaches exp(-(2 n_th + 1) |xi1|^2 / 2)
    n_th = 0.35
    out = apply_thermal_channel(tmsv_chi(0.8), 1, ChannelParams(1e-14, n_th))
    k = out.kernel.quad
    assert k[0, 1] == pytest.approx((2 * n_th + 1) / 2, abs=1e-9)
    assert abs(k[0, 2]) < 1e-6 and abs(k[1, 3]) < 1e-6


def test_channel_scales_polynomial_by_mode_degree():
    st = apply_coherent_op(tmsv_chi(0.4), 1, CoherentOp.from_t(1.0))
    eta = 0.6
    out = apply_thermal_channel(st, 1, ChannelParams(eta, 0.2))
    for a, c in st.poly.items():
        scale = math.sqrt(eta) ** (a[0] + a[1])
        assert out.poly[a] == pytest.approx(c * scale, rel=1e-14)


def test_channel_hermiticity_preserved():
    st = apply_coherent_op(tmsv_chi(0.4), 2, CoherentOp.from_t(0.2))
    out = apply_thermal_channel(st, 2, ChannelParams(0.45, 0.6))
    assert out.is_hermitian()


# ---------------------------------------------------------------------------
# normalize

def test_normalize_tmsv_is_identity():
    st, tr = normalize(tmsv_chi(0.7))
    assert tr == 1.0
    assert st.trace == 1.0


def test_normalize_returns_success_probability():
    s = 0.029
    op = CoherentOp(1.0, 0.0)
    out = apply_coherent_op(apply_coherent_op(tmsv_chi(s), 1, op), 2, op)
    nrm, tr = normalize(out)
    np.testing.assert_allclose(tr, 8.426511420694035e-04, rtol=1e-12)
    assert nrm.trace == pytest.approx(1.0, abs=1e-15)


def test_normalize_rejects_complex_trace():
    st = PolyGaussianChi({ZERO_INDEX: 1.0 + 0.1j}, pair_kernel(0.5))
    with pytest.raises(ValueError):
        normalize(st)


# ---------------------------------------------------------------------------
# moment engine

def test_monomial_integral_normalizations():
    # exponent -(|xi1|^2 + |xi2|^2): each mode integrates to 1
    assert gaussian_monomial_integral(pair_kernel(1.0), ZERO_INDEX) \
        == pytest.approx(1.0, abs=1e-14)
    # the bare vacuum characteristic function exp(-|xi|^2/2) gives 2 per mode
    assert gaussian_monomial_integral(pair_kernel(0.5), ZERO_INDEX) \
        == pytest.approx(4.0, abs=1e-13)


def test_monomial_integral_radial():
    # Int (d^2xi/pi) |xi|^2 e^(-|xi|^2) = 1
    val = gaussian_monomial_integral(pair_kernel(1.0), (1, 1, 0, 0))
    assert val == pytest.approx(1.0, abs=1e-13)


def test_odd_moments_vanish():
    k = tmsv_chi(0.5).kernel
    for alpha in ((1, 0, 0, 0), (0, 1, 2, 0), (1, 1, 1, 0), (3, 0, 1, 1)):
        assert gaussian_monomial_integral(k, alpha) == 0.0


def test_moment_engine_against_numeric_quadrature():
    # random integrable kernels with the conjugation symmetry, all moments of
    # total degree <= 6 against a dense 4-D grid
    rng = np.random.default_rng(7)
    for _ in range(3):
        base = pair_kernel(1.0).quad.copy()
        z = rng.normal(scale=0.1, size=2) + 1j * rng.normal(scale=0.1, size=2)
        # cross-mode block entries respecting P K P = conj(K)
        base = np.array(base)
        base[0, 2] = base[2, 0] = z[0]
        base[1, 3] = base[3, 1] = np.conj(z[0])
        base[0, 3] = base[3, 0] = z[1]
        base[1, 2] = base[2, 1] = np.conj(z[1])
        kernel = GaussianKernel(base)
        engine = MomentEngine(kernel)
        alphas = [(a, b, c, d)
                  for a in range(4) for b in range(4)
                  for c in range(4) for d in range(4)
                  if 0 < a + b + c + d <= 6]
        picks = alphas[::5] + [(1, 1, 1, 1), (2, 2, 1, 1), (3, 3, 0, 0)]
        refs = oracles.numeric_gaussian_monomials(kernel.quad, picks)
        for alpha in picks:
            exact = engine.moment(alpha)
            ref = refs[alpha]
            if abs(ref) < 1e-9:
                assert abs(exact) < 1e-7
            else:
                np.testing.assert_allclose(exact, ref, rtol=1e-6)


def test_moment_table_matches_scalar_route():
    st = apply_thermal_channel(tmsv_chi(0.6), 1, ChannelParams(0.7, 0.25))
    engine = MomentEngine(st.kernel)
    table = engine.moment_table((4, 4, 4, 4))
    fresh = MomentEngine(st.kernel)
    for a in ((0, 0, 0, 0), (1, 1, 0, 0), (2, 0, 1, 1), (3, 3, 2, 2),
              (1, 0, 0, 0), (2, 1, 0, 1)):
        np.testing.assert_allclose(table[a], fresh.moment(a), atol=1e-12,
                                   rtol=1e-12)


def test_singular_kernel_rejected():
    k = GaussianKernel(np.zeros((4, 4)))
    with pytest.raises(SingularKernelError):
        gaussian_monomial_integral(k, ZERO_INDEX)
    with pytest.raises(SingularKernelError):
        MomentEngine(pair_kernel(-0.5))


def test_integrate_polynomial():
    engine = MomentEngine(pair_kernel(1.0))
    # Int (1 + |xi1|^2) -> 1 + 1 = 2
    val = engine.integrate({ZERO_INDEX: 1.0, (1, 1, 0, 0): 1.0})
    assert val == pytest.approx(2.0, abs=1e-13)
