"""Fock-basis reconstruction of two-mode states from characteristic functions.

A density matrix element on the truncated Fock space is the overlap integral

    rho_{ij,kl} = (1/pi^2) Int d^2xi1 d^2xi2
                  <i|D^dag(xi1)|k> <j|D^dag(xi2)|l> chi(xi1, xi2),

and every displacement matrix element is a finite polynomial times the
Gaussian exp(-|xi|^2/2).  For polynomial-times-Gaussian characteristic
functions the whole integrand therefore lives in one augmented Gaussian
kernel, and the exact moment engine evaluates it term by term.

Truncation note: dropping Fock components above n_trunc can only lower the
measured entanglement (the truncation is a local projection), so negativity
computed from these matrices is a lower bound that grows toward the true
value as n_trunc increases.

An independent tensor-product Gauss-Legendre quadrature of the same integral
is provided as a cross-check oracle; it never touches the moment recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import eval_genlaguerre

from .chi_core import (
    GaussianKernel,
    MomentEngine,
    PolyGaussianChi,
)

TRACE_ONE_TOL = 1e-6


def _laguerre_coeffs(n, alpha):
    """Ascending coefficients of the generalized Laguerre polynomial
    L_n^(alpha), exact rationals via the three-term recurrence."""
    prev = [Fraction(1)]
    if n == 0:
        return prev
    cur = [Fraction(1 + alpha), Fraction(-1)]
    for k in range(1, n):
        nxt = [Fraction(0)] * (k + 2)
        for i, c in enumerate(cur):
            nxt[i] += (2 * k + 1 + alpha) * c
            nxt[i + 1] -= c
        for i, c in enumerate(prev):
            nxt[i] -= (k + alpha) * c
        prev, cur = cur, [c / (k + 1) for c in nxt]
    return cur


def _sqrt_factorial_ratio(n, m):
    """sqrt(n!/m!) for m >= n, accumulated as a ratio to avoid overflow."""
    r = 1.0
    for j in range(n + 1, m + 1):
        r /= math.sqrt(j)
    return r


def displacement_fock_poly(m, n):
    """Polynomial part of the displacement matrix element <m|D(xi)|n>.

    <m|D(xi)|n> = P(xi, xi*) exp(-|xi|^2/2) with, for m >= n,
    P = sqrt(n!/m!) xi^(m-n) L_n^(m-n)(xi xi*) expanded into min(m, n) + 1
    monomials of total degree up to m + n; m < n follows from
    <m|D(xi)|n> = conj(<n|D(-xi)|m>).  Returned as {(a, b): coeff} with a the
    power of xi and b the power of xi*.
    """
    if m < 0 or n < 0:
        raise ValueError("Fock indices must be nonnegative")
    if m >= n:
        lag = _laguerre_coeffs(n, m - n)
        pref = _sqrt_factorial_ratio(n, m)
        return {(m - n + k, k): pref * float(lag[k]) for k in range(n + 1)}
    lag = _laguerre_coeffs(m, n - m)
    pref = _sqrt_factorial_ratio(m, n) * (-1.0) ** (n - m)
    return {(k, n - m + k): pref * float(lag[k]) for k in range(m + 1)}


def _dagger_poly(m, n):
    """Polynomial part of <m|D^dag(xi)|n> = <m|D(-xi)|n>."""
    return {(a, b): c * (-1.0) ** (a + b)
            for (a, b), c in displacement_fock_poly(m, n).items()}


@dataclass
class FockDensityMatrix:
    """Two-mode density matrix on Fock levels 0..n_trunc per mode.

    Row-major composite index: row = i * (n_trunc + 1) + j for |i, j>.
    """

    n_trunc: int
    elems: np.ndarray

    @property
    def dim(self):
        return self.n_trunc + 1

    @property
    def trace(self):
        return float(np.trace(self.elems).real)

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.elems - self.elems.conj().T)))


def _augmented_kernel(kernel):
    """State kernel plus the exp(-|xi_i|^2/2) factors of the displacement
    matrix elements."""
    k = np.array(kernel.quad)
    for p in (0, 2):
        k[p, p + 1] += 0.5
        k[p + 1, p] += 0.5
    return GaussianKernel(k)


class FockMatrixBuilder:
    """Reusable reconstruction context for one kernel and truncation.

    The coherent operation and the optimizer change only the polynomial part
    of the state, never the kernel, so the expensive objects (moment table and
    the per-element weight matrix over a fixed monomial support) are built
    once and reused by every matrix() call.
    """

    def __init__(self, kernel, n_trunc, alpha_support):
        if n_trunc < 0:
            raise ValueError("n_trunc must be nonnegative")
        self.n_trunc = n_trunc
        d = n_trunc + 1
        support = sorted({tuple(int(x) for x in a) for a in alpha_support})
        if not support:
            raise ValueError("empty polynomial support")
        self._alpha_index = {a: i for i, a in enumerate(support)}
        engine = MomentEngine(_augmented_kernel(kernel))

        dag = {}
        for mm in range(d):
            for nn in range(d):
                terms = _dagger_poly(mm, nn)
                offs = np.array([t for t in terms], dtype=np.intp).reshape(-1, 2)
                cofs = np.array([terms[t] for t in terms])
                dag[(mm, nn)] = (offs, cofs)

        amax = np.max(np.array(support), axis=0)
        shape = tuple(int(x) for x in amax + n_trunc + 1)
        table = engine.moment_table(shape).reshape(-1)
        strides = np.array([int(np.prod(shape[i + 1:])) for i in range(4)], dtype=np.intp)

        alpha_arr = np.array(support, dtype=np.intp)
        alpha_lin = alpha_arr @ strides
        rows = []
        cols = []
        weights = np.empty((len(support), d * d * (d * d + 1) // 2), dtype=complex)
        for row in range(d * d):
            i, j = divmod(row, d)
            for col in range(row, d * d):
                k, l = divmod(col, d)
                o1, c1 = dag[(i, k)]
                o2, c2 = dag[(j, l)]
                lin1 = o1[:, 0] * strides[0] + o1[:, 1] * strides[1]
                lin2 = o2[:, 0] * strides[2] + o2[:, 1] * strides[3]
                lin = (alpha_lin[:, None, None] + lin1[None, :, None]
                       + lin2[None, None, :])
                vals = table[lin.reshape(-1)].reshape(lin.shape)
                rows.append(row)
                cols.append(col)
                weights[:, len(rows) - 1] = np.einsum("abc,b,c->a", vals, c1, c2)
        self._rows = np.array(rows)
        self._cols = np.array(cols)
        self._weights = weights

    def matrix(self, poly):
        """Assemble the truncated density matrix for a polynomial over the
        builder's support (upper triangle integrated, rest by Hermitian
        symmetry of the state)."""
        coeff = np.zeros(len(self._alpha_index), dtype=complex)
        for a, c in poly.items():
            idx = self._alpha_index.get(tuple(a))
            if idx is None:
                raise ValueError(f"monomial {a!r} outside the builder support")
            coeff[idx] = c
        upper = coeff @ self._weights
        d = self.n_trunc + 1
        elems = np.zeros((d * d, d * d), dtype=complex)
        elems[self._rows, self._cols] = upper
        lower = np.conj(upper)
        elems[self._cols, self._rows] = lower
        diag = self._rows == self._cols
        elems[self._rows[diag], self._cols[diag]] = upper[diag].real
        return FockDensityMatrix(self.n_trunc, elems)


def _check_normalized(state):
    tr = state.trace
    if abs(tr - 1.0) > TRACE_ONE_TOL:
        raise ValueError(f"state trace {tr} is not 1; normalize first")


def fock_element(state, i, j, k, l):
    """Single density matrix element rho_{ij,kl} of a normalized state."""
    _check_normalized(state)
    merged = {}
    d1 = _dagger_poly(i, k)
    d2 = _dagger_poly(j, l)
    for a, c in state.poly.items():
        for (a1, b1), c1 in d1.items():
            for (a2, b2), c2 in d2.items():
                key = (a[0] + a1, a[1] + b1, a[2] + a2, a[3] + b2)
                merged[key] = merged.get(key, 0j) + c * c1 * c2
    engine = MomentEngine(_augmented_kernel(state.kernel))
    return engine.integrate(merged)


def fock_matrix(state, n_trunc):
    """Truncated two-mode density matrix of a normalized state."""
    _check_normalized(state)
    builder = FockMatrixBuilder(state.kernel, n_trunc, state.poly.keys())
    return builder.matrix(state.poly)


# ---------------------------------------------------------------------------
# independent quadrature oracle

@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product Gauss-Legendre grid for the reconstruction oracle.

    half_width = None picks the box automatically: 6 standard deviations of
    the widest direction of the augmented kernel at degree zero, stretched
    with the polynomial degree of the integrand (a degree-d monomial against
    exp(-r^2/(2 sigma^2)) peaks at sigma sqrt(d), so the half-width grows like
    sigma sqrt(36 + 3.2 d) to keep the discarded tail negligible).
    """

    half_width: float | None = None
    points: int = 64


def _displacement_value(m, n, alpha):
    """<m|D(alpha)|n> evaluated numerically (vectorized over alpha)."""
    x = np.abs(alpha) ** 2
    if m >= n:
        pref = _sqrt_factorial_ratio(n, m)
        return pref * alpha ** (m - n) * eval_genlaguerre(n, m - n, x) * np.exp(-x / 2)
    pref = _sqrt_factorial_ratio(m, n)
    return (pref * (-np.conj(alpha)) ** (n - m)
            * eval_genlaguerre(m, n - m, x) * np.exp(-x / 2))


def _auto_half_width(state, degree):
    m = _augmented_kernel(state.kernel).real_form()
    sigma_max = 1.0 / math.sqrt(float(np.min(np.linalg.eigvalsh(m))))
    return sigma_max * math.sqrt(36.0 + 3.2 * degree)


def quadrature_fock_elements(state, indices, grid=QuadratureGrid()):
    """Brute-force quadrature of rho_{ij,kl} for a batch of index tuples.

    Evaluates the defining integral on a tensor Gauss-Legendre grid, with the
    displacement elements computed pointwise; shares nothing with the moment
    recursion.  Returns {(i, j, k, l): value}.
    """
    _check_normalized(state)
    indices = [tuple(int(x) for x in q) for q in indices]
    if not indices:
        return {}
    dmax = state.degree + max(i + k for i, _, k, _ in indices) \
        + max(j + l for _, j, _, l in indices)
    half = grid.half_width if grid.half_width is not None \
        else _auto_half_width(state, dmax)
    n = grid.points
    nodes, wts = np.polynomial.legendre.leggauss(n)
    x = half * nodes
    w = half * wts
    xi = (x[:, None] + 1j * x[None, :]).reshape(-1)
    w2 = np.outer(w, w).reshape(-1)

    kq = state.kernel.quad
    q1 = np.exp(-0.5 * (kq[0, 0] * xi ** 2 + 2 * kq[0, 1] * np.abs(xi) ** 2
                        + kq[1, 1] * np.conj(xi) ** 2))
    q2 = np.exp(-0.5 * (kq[2, 2] * xi ** 2 + 2 * kq[2, 3] * np.abs(xi) ** 2
                        + kq[3, 3] * np.conj(xi) ** 2))
    c1 = -(kq[0, 2] * xi + kq[0, 3] * np.conj(xi))
    c2 = -(kq[1, 2] * xi + kq[1, 3] * np.conj(xi))

    pairs1 = sorted({(i, k) for i, _, k, _ in indices})
    pairs2 = sorted({(j, l) for _, j, _, l in indices})
    mono1 = sorted({(a[0], a[1]) for a in state.poly})
    mono2 = sorted({(a[2], a[3]) for a in state.poly})
    p1_idx = {p: i for i, p in enumerate(pairs1)}
    p2_idx = {p: i for i, p in enumerate(pairs2)}
    m1_idx = {m: i for i, m in enumerate(mono1)}
    m2_idx = {m: i for i, m in enumerate(mono2)}

    def _side(pairs, monos, qfac):
        base = np.empty((len(pairs), xi.size), dtype=complex)
        for r, (mm, nn) in enumerate(pairs):
            base[r] = w2 * _displacement_value(mm, nn, -xi) * qfac
        mono_vals = np.empty((len(monos), xi.size), dtype=complex)
        for r, (a, b) in enumerate(monos):
            mono_vals[r] = xi ** a * np.conj(xi) ** b
        return (base[:, None, :] * mono_vals[None, :, :]).reshape(-1, xi.size)

    a_side = _side(pairs1, mono1, q1)
    b_side = _side(pairs2, mono2, q2)

    g = np.zeros((a_side.shape[0], b_side.shape[0]), dtype=complex)
    chunk = 512
    for lo in range(0, xi.size, chunk):
        hi = min(lo + chunk, xi.size)
        cross = np.exp(xi[lo:hi, None] * c1[None, :]
                       + np.conj(xi[lo:hi, None]) * c2[None, :])
        g += a_side[:, lo:hi] @ (cross @ b_side.T)

    g = g.reshape(len(pairs1), len(mono1), len(pairs2), len(mono2))
    out = {}
    for i, j, k, l in indices:
        val = 0j
        for a, c in state.poly.items():
            val += c * g[p1_idx[(i, k)], m1_idx[(a[0], a[1])],
                         p2_idx[(j, l)], m2_idx[(a[2], a[3])]]
        out[(i, j, k, l)] = val / math.pi ** 2
    return out


def quadrature_fock_element(state, i, j, k, l, grid=QuadratureGrid()):
    """Single-element version of the quadrature oracle."""
    return quadrature_fock_elements(state, [(i, j, k, l)], grid)[(i, j, k, l)]
