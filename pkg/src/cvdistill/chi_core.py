"""Two-mode characteristic functions of polynomial-times-Gaussian form.

Every state handled here is represented through its symmetrically ordered
characteristic function

    chi(xi1, xi2) = P(v) * exp(-0.5 * v^T K v),
    v = (xi1, xi1*, xi2, xi2*),

with P a polynomial (multi-index -> coefficient map) and K a symmetric 4x4
kernel matrix.  The representation is closed under the three operations the
distillation pipelines need: preparation of a two-mode squeezed vacuum, the
coherent superposition operation t*a + r*a^dag applied to one mode, and the
beamsplitter model of a thermal-noise channel.  Phase-space integrals of
monomials against the Gaussian factor are evaluated exactly by a Wick/Stein
moment recursion; Fock-basis reconstruction and the teleportation-fidelity
integral are built on top of it.

Conventions: the formal variables are ordered (xi1, xi1*, xi2, xi2*), mode
arguments are 1-based, and every phase-space integral carries one factor of
1/pi per mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_VARS = 4
ZERO_INDEX = (0, 0, 0, 0)

DEFAULT_MAX_DEGREE = 8
PRUNE_REL_TOL = 1e-16
HERMITICITY_TOL = 1e-12
TRACE_IMAG_TOL = 1e-10
ZERO_TRACE_TOL = 1e-30


class DegreeOverflowError(Exception):
    """Polynomial degree would exceed the configured maximum."""


class ZeroStateError(Exception):
    """A state of vanishing trace cannot be normalized."""


class SingularKernelError(Exception):
    """Gaussian kernel is not positive definite; the integral diverges."""


# ---------------------------------------------------------------------------
# polynomial helpers (coefficient maps over exponent tuples)

def _prune(poly):
    if not poly:
        return {}
    cap = PRUNE_REL_TOL * max(abs(c) for c in poly.values())
    return {a: c for a, c in poly.items() if abs(c) > cap}


def _poly_add(dst, src, scale):
    for a, c in src.items():
        dst[a] = dst.get(a, 0.0) + scale * c


def _poly_shift(poly, var):
    """Multiply the polynomial by the formal variable v_var."""
    out = {}
    for a, c in poly.items():
        b = list(a)
        b[var] += 1
        out[tuple(b)] = c
    return out


def _poly_diff(poly, var):
    out = {}
    for a, c in poly.items():
        k = a[var]
        if k:
            b = list(a)
            b[var] -= 1
            out[tuple(b)] = k * c
    return out


def _conj_swap(alpha):
    """Exchange xi and xi* exponents in every mode."""
    return (alpha[1], alpha[0], alpha[3], alpha[2])


def _complexification(n_modes):
    """Matrix T with v = T u, u = (x, y) per mode, xi = x + i y."""
    t = np.zeros((2 * n_modes, 2 * n_modes), dtype=complex)
    for m in range(n_modes):
        t[2 * m, 2 * m] = 1.0
        t[2 * m, 2 * m + 1] = 1j
        t[2 * m + 1, 2 * m] = 1.0
        t[2 * m + 1, 2 * m + 1] = -1j
    return t


def _pair_swap(n_modes):
    p = np.zeros((2 * n_modes, 2 * n_modes))
    for m in range(n_modes):
        p[2 * m, 2 * m + 1] = 1.0
        p[2 * m + 1, 2 * m] = 1.0
    return p


# ---------------------------------------------------------------------------
# parameter containers

@dataclass(frozen=True)
class CoherentOp:
    """Weights of the superposition t*a + r*a^dag, real with t^2 + r^2 = 1."""

    t: float
    r: float

    def __post_init__(self):
        if not (0.0 <= self.t <= 1.0 and 0.0 <= self.r <= 1.0):
            raise ValueError("t and r must lie in [0, 1]")
        if abs(self.t ** 2 + self.r ** 2 - 1.0) > 1e-12:
            raise ValueError("t^2 + r^2 must equal 1")

    @classmethod
    def from_t(cls, t):
        return cls(t, math.sqrt(max(0.0, 1.0 - t * t)))


@dataclass(frozen=True)
class ChannelParams:
    """Thermal channel parameters: transmissivity eta = exp(-Gamma*t) and
    bath occupation n_th of the beamsplitter model."""

    eta: float
    n_th: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")
        if self.n_th < 0.0:
            raise ValueError("n_th must be nonnegative")


class GaussianKernel:
    """Symmetric kernel matrix K of the factor exp(-0.5 v^T K v).

    Rows/columns interleave each mode's (xi, xi*).  Physical kernels obey the
    swap-conjugation symmetry P K P = conj(K), with P the permutation that
    exchanges xi_i and xi_i* in every mode; this makes the quadratic form real
    whenever xi_i* is the complex conjugate of xi_i.
    """

    def __init__(self, quad):
        quad = np.array(quad, dtype=complex)
        if quad.ndim != 2 or quad.shape[0] != quad.shape[1] or quad.shape[0] % 2:
            raise ValueError("kernel must be square over (xi, xi*) pairs")
        if not np.allclose(quad, quad.T, rtol=0.0, atol=1e-12 * (1.0 + np.max(np.abs(quad)))):
            raise ValueError("kernel must be symmetric")
        quad = 0.5 * (quad + quad.T)
        quad.flags.writeable = False
        self.quad = quad

    @property
    def n_modes(self):
        return self.quad.shape[0] // 2

    def swap_conjugation_defect(self):
        p = _pair_swap(self.n_modes)
        return float(np.max(np.abs(p @ self.quad @ p - np.conj(self.quad))))

    def real_form(self):
        """Real matrix M with v^T K v = u^T M u over u = (x, y) per mode."""
        t = _complexification(self.n_modes)
        mc = t.T @ self.quad @ t
        scale = max(1.0, float(np.max(np.abs(mc.real))))
        if np.max(np.abs(mc.imag)) > 1e-10 * scale:
            raise ValueError("kernel does not define a real quadratic form")
        m = mc.real
        return 0.5 * (m + m.T)


class PolyGaussianChi:
    """Unnormalized two-mode state chi(v) = P(v) * exp(-0.5 v^T K v).

    The trace of the underlying operator is chi(0, 0), i.e. the constant
    coefficient of P.  Instances are treated as immutable; operations return
    new objects.
    """

    def __init__(self, poly, kernel, max_degree=DEFAULT_MAX_DEGREE):
        if kernel.n_modes != 2:
            raise ValueError("states are two-mode; kernel must be 4x4")
        clean = {}
        for a, c in poly.items():
            a = tuple(int(k) for k in a)
            if len(a) != N_VARS or min(a) < 0:
                raise ValueError(f"bad multi-index {a!r}")
            if sum(a) > max_degree:
                raise DegreeOverflowError(
                    f"monomial degree {sum(a)} exceeds maximum {max_degree}")
            clean[a] = complex(c)
        self.poly = clean
        self.kernel = kernel
        self.max_degree = max_degree

    @property
    def trace(self):
        return self.poly.get(ZERO_INDEX, 0j)

    @property
    def degree(self):
        return max((sum(a) for a in self.poly), default=0)

    def evaluate(self, xi1, xi2):
        return evaluate_chi(self, xi1, xi2)

    def hermiticity_defect(self):
        """Max deviation of chi from conj(chi(-v)), over coefficients and kernel."""
        defect = self.kernel.swap_conjugation_defect()
        keys = set(self.poly) | {_conj_swap(a) for a in self.poly}
        for a in keys:
            want = np.conj(self.poly.get(_conj_swap(a), 0j)) * (-1) ** sum(a)
            defect = max(defect, abs(self.poly.get(a, 0j) - want))
        return defect

    def is_hermitian(self, tol=HERMITICITY_TOL):
        scale = max([1.0] + [abs(c) for c in self.poly.values()])
        return self.hermiticity_defect() <= tol * scale


# ---------------------------------------------------------------------------
# state preparation and pipeline operations

def tmsv_chi(s):
    """Characteristic function of the two-mode squeezed vacuum.

    The Schmidt form sech(s) * sum_n tanh(s)^n |n,n> has the pure Gaussian
    characteristic function

        chi = exp[ -(|xi1|^2 + |xi2|^2) cosh(2s)/2
                   + (xi1 xi2 + xi1* xi2*) sinh(2s)/2 ],

    so the kernel carries cosh(2s)/2 on the conjugate pairs of each mode and
    -sinh(2s)/2 on the cross-mode entries.  s = 0 gives the two-mode vacuum.
    """
    if s < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    ch = math.cosh(2 * s) / 2
    sh = math.sinh(2 * s) / 2
    k = np.zeros((4, 4))
    k[0, 1] = k[1, 0] = ch
    k[2, 3] = k[3, 2] = ch
    k[0, 2] = k[2, 0] = -sh
    k[1, 3] = k[3, 1] = -sh
    return PolyGaussianChi({ZERO_INDEX: 1.0}, GaussianKernel(k))


def _first_order(poly, kq, dcoef, mcoef):
    """Apply sum_j dcoef[j] d/dv_j + sum_j mcoef[j] v_j to P * exp(-0.5 v^T K v).

    Differentiating the Gaussian factor pulls down -(K v)_j, so the result
    stays in the same kernel class and only the polynomial changes.
    """
    out = {}
    for j, c in dcoef.items():
        if c == 0.0:
            continue
        _poly_add(out, _poly_diff(poly, j), c)
        for k in range(N_VARS):
            kv = kq[j, k]
            if kv != 0.0:
                _poly_add(out, _poly_shift(poly, k), -c * kv)
    for j, c in mcoef.items():
        if c != 0.0:
            _poly_add(out, _poly_shift(poly, j), c)
    return out


def apply_coherent_op(state, mode, op):
    """Apply (t a + r a^dag) rho (t a^dag + r a) to one mode.

    Under the characteristic-function correspondence

        a rho     -> (-d/dxi* - xi/2) chi      rho a     -> (-d/dxi* + xi/2) chi
        a^dag rho -> ( d/dxi  - xi*/2) chi     rho a^dag -> ( d/dxi  + xi*/2) chi

    the sandwich splits into two commuting first-order operators: right
    multiplication by (t a^dag + r a), then left multiplication by
    (t a + r a^dag).  The kernel is untouched and the polynomial degree grows
    by at most two.  The output is unnormalized; its trace carries the success
    probability of the operation.
    """
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    if state.degree + 2 > state.max_degree:
        raise DegreeOverflowError(
            f"degree {state.degree} + 2 would exceed maximum {state.max_degree}")
    p, q = 2 * (mode - 1), 2 * (mode - 1) + 1
    kq = state.kernel.quad
    t, r = op.t, op.r
    inner = _first_order(state.poly, kq, {p: t, q: -r}, {p: r / 2, q: t / 2})
    outer = _first_order(inner, kq, {p: r, q: -t}, {p: -t / 2, q: -r / 2})
    return PolyGaussianChi(_prune(outer), state.kernel, state.max_degree)


def apply_thermal_channel(state, mode, channel):
    """Mix one mode with a thermal bath on a beamsplitter of transmissivity eta.

    chi'(..., xi_i, ...) = chi(..., sqrt(eta) xi_i, ...)
                           * exp(-0.5 (2 n_th + 1)(1 - eta) |xi_i|^2)

    Monomial coefficients pick up eta^(mode degree / 2); the kernel rows and
    columns of the mode are scaled by sqrt(eta) and the conjugate-pair entry
    gains the thermal term.  The trace chi(0, 0) is preserved exactly.
    """
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    p, q = 2 * (mode - 1), 2 * (mode - 1) + 1
    root = math.sqrt(channel.eta)
    poly = {a: c * root ** (a[p] + a[q]) for a, c in state.poly.items()}
    k = np.array(state.kernel.quad)
    k[[p, q], :] *= root
    k[:, [p, q]] *= root
    add = 0.5 * (2 * channel.n_th + 1) * (1 - channel.eta)
    k[p, q] += add
    k[q, p] += add
    return PolyGaussianChi(poly, GaussianKernel(k), state.max_degree)


def evaluate_chi(state, xi1, xi2):
    """Evaluate chi at a phase-space point (xi_i* is the complex conjugate)."""
    v = np.array([xi1, np.conj(xi1), xi2, np.conj(xi2)], dtype=complex)
    val = 0j
    for a, c in state.poly.items():
        val += c * v[0] ** a[0] * v[1] ** a[1] * v[2] ** a[2] * v[3] ** a[3]
    return val * np.exp(-0.5 * (v @ state.kernel.quad @ v))


def normalize(state):
    """Scale a state to unit trace.

    Returns (normalized_state, trace); the trace of a pipeline output is the
    success probability of the non-deterministic operations applied so far.
    """
    tr = state.trace
    if abs(tr.imag) > TRACE_IMAG_TOL * max(1.0, abs(tr.real)):
        raise ValueError(f"trace has non-negligible imaginary part: {tr}")
    t = tr.real
    if t < ZERO_TRACE_TOL:
        raise ZeroStateError("state has vanishing trace")
    poly = {a: c / t for a, c in state.poly.items()}
    return PolyGaussianChi(poly, state.kernel, state.max_degree), t


# ---------------------------------------------------------------------------
# Gaussian moment engine

class MomentEngine:
    """Exact phase-space moments against one Gaussian kernel.

        moment(alpha) = Int prod_i (d^2 xi_i / pi) v^alpha exp(-0.5 v^T K v)

    The kernel is converted to its real quadratic form M over (x, y) pairs;
    the moment covariance of the real Gaussian is Sigma = M^{-1}, pulled back
    to the complex variables as C = T Sigma T^T.  Moments then follow the
    Wick/Stein recursion

        E[v_j v^beta] = sum_k C_jk beta_k E[v^(beta - e_k)]

    memoized over multi-indices.  An engine instance is a single integration
    context: the memo table is owned by the instance and nothing is shared
    globally, so independent evaluations can run concurrently.
    """

    def __init__(self, kernel):
        self.n_vars = 2 * kernel.n_modes
        m = kernel.real_form()
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise SingularKernelError("kernel is not positive definite") from exc
        det = float(np.prod(np.diag(chol))) ** 2
        t = _complexification(kernel.n_modes)
        sigma = np.linalg.inv(m)
        self._cov = t @ sigma @ t.T
        self._norm = 2.0 ** kernel.n_modes / math.sqrt(det)
        self._memo = {(0,) * self.n_vars: 1.0 + 0j}

    def moment(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n_vars or min(alpha) < 0:
            raise ValueError(f"bad multi-index {alpha!r}")
        return self._norm * self._ev(alpha)

    def integrate(self, poly):
        """Integrate a polynomial (coefficient map) against the kernel."""
        return sum(c * self.moment(a) for a, c in poly.items())

    def _ev(self, alpha):
        val = self._memo.get(alpha)
        if val is not None:
            return val
        j = next(i for i, a in enumerate(alpha) if a)
        beta = list(alpha)
        beta[j] -= 1
        acc = 0j
        for k in range(self.n_vars):
            bk = beta[k]
            if bk:
                cjk = self._cov[j, k]
                if cjk != 0.0:
                    beta[k] -= 1
                    acc += cjk * bk * self._ev(tuple(beta))
                    beta[k] += 1
        self._memo[alpha] = acc
        return acc

    def moment_table(self, shape):
        """Dense array of moment(alpha) for every alpha with alpha_i < shape_i.

        Same recursion as moment(), vectorized over shells of equal total
        degree; used by the Fock-basis reconstruction where many thousands of
        monomials share one kernel.
        """
        shape = tuple(int(s) for s in shape)
        if len(shape) != self.n_vars:
            raise ValueError("shape rank must match the number of variables")
        table = np.zeros(shape, dtype=complex)
        flat = table.reshape(-1)
        flat[0] = 1.0
        idx = np.indices(shape).reshape(self.n_vars, -1).T
        totals = idx.sum(axis=1)
        for d in range(2, int(totals.max()) + 1, 2):
            shell = idx[totals == d]
            first = (shell > 0).argmax(axis=1)
            for j in range(self.n_vars):
                sub = shell[first == j]
                if not len(sub):
                    continue
                beta = sub.copy()
                beta[:, j] -= 1
                acc = np.zeros(len(sub), dtype=complex)
                for k in range(self.n_vars):
                    cjk = self._cov[j, k]
                    bk = beta[:, k]
                    if cjk == 0.0 or not bk.any():
                        continue
                    gam = beta.copy()
                    gam[:, k] -= 1
                    np.clip(gam, 0, None, out=gam)  # rows with bk == 0 are zeroed by bk
                    acc += cjk * bk * flat[np.ravel_multi_index(gam.T, shape)]
                flat[np.ravel_multi_index(sub.T, shape)] = acc
        return self._norm * table


def gaussian_monomial_integral(kernel, alpha):
    """Int prod_i (d^2 xi_i / pi) v^alpha exp(-0.5 v^T K v), exactly."""
    return MomentEngine(kernel).moment(alpha)
