"""Entanglement and teleportation measures for two-mode states.

Two independent routes to the logarithmic negativity are kept deliberately
separate: the Fock route diagonalizes the partially transposed truncated
density matrix, the Gaussian route uses only the covariance matrix (exact for
Gaussian states, an approximation once photon operations make the state
non-Gaussian).  Their disagreement is itself a signal of non-Gaussianity, so
neither is ever expressed through the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _SPEED_OF_LIGHT
from scipy.constants import h as _PLANCK
from scipy.constants import k as _BOLTZMANN

from .chi_core import GaussianKernel, MomentEngine
from .fock_recon import FockDensityMatrix

PT_DISCRIMINANT_TOL = 1e-12
NEGATIVE_TRACE_TOL = 1e-12
COV_IMAG_TOL = 1e-10


class EigenConvergenceError(RuntimeError):
    """Jacobi iteration failed to reach the off-diagonal tolerance."""


class InvalidCovarianceError(ValueError):
    """Covariance matrix violates a physicality bound beyond tolerance."""


def partial_transpose(rho):
    """Partial transpose on the first mode: (rho^T1)_{ij,kl} = rho_{kj,il}."""
    d = rho.n_trunc + 1
    t = rho.elems.reshape(d, d, d, d).transpose(2, 1, 0, 3).reshape(d * d, d * d)
    return FockDensityMatrix(rho.n_trunc, np.ascontiguousarray(t))


def jacobi_eigvalsh(mat, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation phases the pivot entry real and then annihilates it with a
    real plane rotation; sweeps repeat until the off-diagonal Frobenius norm
    drops below tol times the matrix norm.  Self-contained on purpose: used to
    cross-check the LAPACK eigensolver, so it must not call it.
    """
    a = np.array(mat, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = a - np.diag(np.diag(a))
        if float(np.linalg.norm(off)) <= tol * scale:
            return np.sort(np.diag(a).real)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                h = abs(apq)
                if h <= tol * scale / (10.0 * n * n):
                    continue
                phi = np.conj(apq) / h
                tau = (a[q, q].real - a[p, p].real) / (2.0 * h)
                if tau >= 0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                cth = 1.0 / math.hypot(1.0, t)
                sth = t * cth
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = cth * col_p - phi * sth * col_q
                a[:, q] = sth * col_p + phi * cth * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = cth * row_p - np.conj(phi) * sth * row_q
                a[q, :] = sth * row_p + np.conj(phi) * cth * row_q
    raise EigenConvergenceError(
        f"off-diagonal norm still above {tol} after {max_sweeps} sweeps")


def log_negativity(rho, method="jacobi"):
    """Logarithmic negativity E = log2 ||rho^T1||_1 of a Fock-basis state,
    clamped at zero (a negative truncated trace-norm log is noise, not
    physics).

    method picks the eigensolver for the partial transpose: the cyclic
    "jacobi" default, or "lapack" when throughput matters (optimizer loops);
    the two agree far below every tolerance in use.
    """
    pt = partial_transpose(rho)
    if method == "lapack":
        w = np.linalg.eigvalsh(pt.elems)
    elif method == "jacobi":
        w = jacobi_eigvalsh(pt.elems)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return max(0.0, math.log2(float(np.sum(np.abs(w)))))


@dataclass(frozen=True)
class CovarianceMatrix:
    """4x4 symmetrized quadrature covariance, ordering (x1, p1, x2, p2).

    Convention: vacuum covariance is identity/2.
    """

    mat: np.ndarray

    @property
    def block_a(self):
        return self.mat[:2, :2]

    @property
    def block_b(self):
        return self.mat[2:, 2:]

    @property
    def block_c(self):
        return self.mat[:2, 2:]

    def symplectic_eigenvalues(self):
        """(nu_minus, nu_plus) of the two-mode covariance."""
        delta = (float(np.linalg.det(self.block_a))
                 + float(np.linalg.det(self.block_b))
                 + 2.0 * float(np.linalg.det(self.block_c)))
        det = float(np.linalg.det(self.mat))
        disc = max(delta * delta - 4.0 * det, 0.0)
        lo = (delta - math.sqrt(disc)) / 2.0
        hi = (delta + math.sqrt(disc)) / 2.0
        return math.sqrt(max(lo, 0.0)), math.sqrt(max(hi, 0.0))


# Quadratures x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)) from the
# derivative variables w = (d/dxi_i acting as a^dag, -a):
_L_MODE = np.array([[1.0, -1.0], [1j, 1j]]) / math.sqrt(2.0)


def covariance_from_chi(state):
    """Quadrature covariance of a normalized state, from exact derivatives of
    its characteristic function at the origin.

    For chi = P(v) exp(-v^T K v / 2) with P(0) = 1 the symmetrized moments of
    (a1^dag, -a1, a2^dag, -a2) read off as S_ij = d_i d_j P(0) - K_ij and the
    first moments as m_i = d_i P(0); no numerical differentiation is involved.
    """
    tr = state.trace
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"state trace {tr} is not 1; normalize first")
    poly = state.poly
    kq = state.kernel.quad
    s = np.empty((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            e = [0, 0, 0, 0]
            e[i] += 1
            e[j] += 1
            coeff = poly.get(tuple(e), 0.0)
            s[i, j] = (2.0 if i == j else 1.0) * coeff - kq[i, j]
    basis = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    m = np.array([poly.get(e, 0.0) for e in basis], dtype=complex)
    l_full = np.zeros((4, 4), dtype=complex)
    l_full[:2, :2] = _L_MODE
    l_full[2:, 2:] = _L_MODE
    sigma = l_full @ (s - np.outer(m, m)) @ l_full.T
    if float(np.max(np.abs(sigma.imag))) > COV_IMAG_TOL:
        raise InvalidCovarianceError("covariance has a non-real part")
    out = 0.5 * (sigma.real + sigma.real.T)
    out.flags.writeable = False
    return CovarianceMatrix(out)


def gaussian_log_negativity(cov):
    """Logarithmic negativity of the Gaussian state with this covariance.

    Partial transposition flips the sign of det C, so with
    Dt = det A + det B - 2 det C the smallest symplectic eigenvalue of the
    transposed state is dt = sqrt((Dt - sqrt(Dt^2 - 4 det sigma))/2) and
    E = max(0, -log2(2 dt)).
    """
    det_a = float(np.linalg.det(cov.block_a))
    det_b = float(np.linalg.det(cov.block_b))
    det_c = float(np.linalg.det(cov.block_c))
    det_s = float(np.linalg.det(cov.mat))
    delta = det_a + det_b - 2.0 * det_c
    disc = delta * delta - 4.0 * det_s
    if disc < -PT_DISCRIMINANT_TOL:
        raise InvalidCovarianceError(f"negative discriminant {disc}")
    inner = (delta - math.sqrt(max(disc, 0.0))) / 2.0
    if inner < PT_DISCRIMINANT_TOL ** 2:
        raise InvalidCovarianceError(f"degenerate symplectic eigenvalue ({inner})")
    return max(0.0, -math.log2(2.0 * math.sqrt(inner)))


def teleportation_fidelity(state):
    """Average fidelity of coherent-state teleportation with the state as the
    shared resource.

    F = (1/pi) Int d^2xi chi(xi*, xi) exp(-|xi|^2): the two-mode
    characteristic function on the diagonal against a Gaussian weight, again a
    polynomial-times-Gaussian moment problem (now in one complex variable).
    """
    tr = state.trace
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"state trace {tr} is not 1; normalize first")
    reduced = {}
    for (a0, a1, a2, a3), coeff in state.poly.items():
        key = (a1 + a2, a0 + a3)
        reduced[key] = reduced.get(key, 0j) + coeff
    # substitution (xi1, xi1*, xi2, xi2*) = (xi*, xi, xi, xi*)
    r = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    kq = r.T @ state.kernel.quad @ r
    kq[0, 1] += 1.0
    kq[1, 0] += 1.0
    engine = MomentEngine(GaussianKernel(kq))
    val = engine.integrate({(a, b): c for (a, b), c in reduced.items()})
    if abs(val.imag) > 1e-9:
        raise ValueError(f"fidelity came out non-real: {val}")
    return float(val.real)


def success_probability(raw_state):
    """Heralding probability of a conditional preparation: the trace of the
    raw (unnormalized) pipeline output.  Tiny negative float noise clamps to
    zero; anything genuinely negative is an internal error."""
    tr = complex(raw_state.trace)
    if abs(tr.imag) > 1e-9 * max(1.0, abs(tr)):
        raise ValueError(f"trace has a non-real part: {tr}")
    value = tr.real
    if value < -NEGATIVE_TRACE_TOL:
        raise ValueError(f"negative success probability {value}")
    return max(float(value), 0.0)


def separation_eta(s, n_th):
    """Transmissivity at which the thermal-loss channel output of a two-mode
    squeezed vacuum stops being entangled.

    eta_sep = 2 n_th / (2 n_th + 1 - e^(-2s)); for pure loss (n_th = 0) the
    entanglement survives all the way down, so the threshold is 0.
    """
    if s <= 0:
        raise ValueError("squeezing must be positive")
    if n_th < 0:
        raise ValueError("thermal occupation must be nonnegative")
    if n_th == 0:
        return 0.0
    return 2.0 * n_th / (2.0 * n_th + 1.0 - math.exp(-2.0 * s))


def separation_time(s, n_th, gamma=1.0):
    """Interaction time at which eta(t) = e^(-gamma t) crosses the separation
    threshold; infinite for pure loss."""
    if gamma <= 0:
        raise ValueError("decay rate must be positive")
    eta = separation_eta(s, n_th)
    if eta == 0.0:
        return math.inf
    return -math.log(eta) / gamma


def thermal_occupation(wavelength, temperature):
    """Planck occupation 1/(e^(hc/(lambda kB T)) - 1) of an optical mode.

    wavelength in meters, temperature in kelvin; T = 0 returns 0 exactly.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    if temperature < 0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0:
        return 0.0
    x = _PLANCK * _SPEED_OF_LIGHT / (wavelength * _BOLTZMANN * temperature)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class MeasureRecord:
    """The four figures of merit evaluated on one prepared state."""

    e_n_fock: float
    e_n_gauss: float
    fidelity: float
    p_success: float
