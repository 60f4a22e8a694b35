"""
Grids, oscillator basis functions, quadrature rules and the dense
non-symmetric eigendecomposition used throughout the package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.special as sps

from .errors import EigenSolveError, InvalidArgument

# numerical rank / conditioning thresholds
ILL_CONDITIONED = 1e12
INVERSE_LEFT_LIMIT = 1e8
REAL_TOL = 1e-6
FLUSH_RELATIVE = np.finfo(float).eps ** 2

_LOG_RESCALE = 1e100


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridSpec:
    """Uniform half-offset grid with nodes ``(j + 1/2) h`` for ``j = -N .. N-1``.

    No node sits on x = 0, which keeps coefficients like 1/x finite.
    """

    half_points: int
    spacing: float

    @property
    def size(self) -> int:
        return 2 * self.half_points

    @property
    def half_width(self) -> float:
        return self.half_points * self.spacing

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(-self.half_points, self.half_points)
        return (j + 0.5) * self.spacing


@dataclass(frozen=True)
class BasisSpec:
    """First ``size`` eigenfunctions of p^2 + w^2 x^2 (w = ``frequency``)."""

    size: int
    frequency: float = 1.0
    quadrature_points: int | None = None

    @property
    def quad(self) -> int:
        return self.quadrature_points or 2 * self.size


def make_grid(domain_half_width: float, half_points: int) -> GridSpec:
    """Half-offset grid covering (-L, L) with 2N nodes and spacing L/N."""
    L = float(domain_half_width)
    if not (L > 0) or not math.isfinite(L):
        raise InvalidArgument(f"domain half-width must be positive, got {domain_half_width!r}")
    if int(half_points) != half_points or half_points < 2:
        raise InvalidArgument(f"half_points must be an integer >= 2, got {half_points!r}")
    return GridSpec(int(half_points), L / int(half_points))


# ---------------------------------------------------------------------------
# Hermite functions

def hermite_functions(nmax: int, omega: float, x) -> np.ndarray:
    """Evaluate psi_0 .. psi_{nmax-1} of p^2 + omega^2 x^2 at points ``x``.

    Uses the normalized three-term recurrence. The Gaussian prefactor is
    kept in log form and the polynomial part is rescaled as it grows, so
    large |x| with large n neither overflows nor underflows prematurely.

    Returns
    -------
    ndarray, shape (nmax, len(x))
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((nmax, x.size))
    if nmax == 0:
        return out
    logscale = -0.5 * omega * x**2 + 0.25 * math.log(omega / math.pi)
    cur = np.ones_like(x)
    prev = np.zeros_like(x)
    out[0] = np.exp(logscale)
    s2w = math.sqrt(2.0 * omega)
    for n in range(nmax - 1):
        nxt = s2w / math.sqrt(n + 1) * x * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _LOG_RESCALE
        if big.any():
            cur[big] /= _LOG_RESCALE
            prev[big] /= _LOG_RESCALE
            logscale[big] += math.log(_LOG_RESCALE)
        out[n + 1] = cur * np.exp(logscale)
    return out


def hermite_function(n: int, omega: float, x):
    """L2-normalized oscillator eigenfunction psi_n(x) with energy omega(2n+1)."""
    if n < 0:
        raise InvalidArgument("n must be non-negative")
    if not omega > 0:
        raise InvalidArgument("omega must be positive")
    vals = hermite_functions(n + 1, omega, x)[n]
    return float(vals[0]) if np.ndim(x) == 0 else vals


# ---------------------------------------------------------------------------
# Quadrature

def gauss_hermite_rule(points: int, omega: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the weight exp(-omega x^2); exact to polynomial degree 2Q-1."""
    if int(points) != points or points < 1:
        raise InvalidArgument(f"quadrature needs at least one point, got {points!r}")
    if not omega > 0:
        raise InvalidArgument("omega must be positive")
    y, w = sps.roots_hermite(int(points))
    s = math.sqrt(omega)
    return y / s, w / s


def scaled_hermite_weights(points: int, omega: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights ``w_q exp(omega x_q^2)`` for integrating plain functions.

    The weights come from the Christoffel identity
    ``w_q exp(y_q^2) = 1 / sum_n psi_n(y_q)^2`` so they stay finite where the
    textbook weights underflow.
    """
    y, _ = sps.roots_hermite(int(points))
    F = hermite_functions(int(points), 1.0, y)
    sw = 1.0 / np.sum(F**2, axis=0)
    s = math.sqrt(omega)
    return y / s, sw / s


def _laguerre_nodes(count: int, alpha: float) -> np.ndarray:
    """Nodes of the generalized Gauss-Laguerre rule via the Jacobi matrix."""
    k = np.arange(count)
    diag = 2 * k + alpha + 1.0
    off = np.sqrt((k[:-1] + 1) * (k[:-1] + 1 + alpha))
    return sla.eigvalsh_tridiagonal(diag, off)


def _laguerre_christoffel(t: np.ndarray, alpha: float, count: int) -> np.ndarray:
    """Return ``lambda_i exp(t_i)`` for the Gauss rule of weight t^alpha e^-t."""
    logscale = -0.5 * t - 0.5 * sps.gammaln(alpha + 1.0)
    cur = np.ones_like(t)
    prev = np.zeros_like(t)
    total = np.exp(2 * logscale)
    for k in range(count - 1):
        a_k = math.sqrt((k + 1) * (k + 1 + alpha))
        a_km1 = math.sqrt(k * (k + alpha)) if k > 0 else 0.0
        nxt = ((2 * k + alpha + 1 - t) * cur - a_km1 * prev) / a_k
        prev, cur = cur, nxt
        big = np.abs(cur) > _LOG_RESCALE
        if big.any():
            cur[big] /= _LOG_RESCALE
            prev[big] /= _LOG_RESCALE
            logscale[big] += math.log(_LOG_RESCALE)
        total = total + (cur * np.exp(logscale)) ** 2
    return 1.0 / total


def half_line_power_integrals(size: int, omega: float, exponent: float) -> np.ndarray:
    """Matrix of integrals  int_0^inf x^s psi_m(x) psi_n(x) dx  for m, n < size.

    Exact (to rounding) for any real s > -1: with t = omega x^2 the integrand
    becomes t^((s+p-1)/2) e^-t times a polynomial in t, where p is the parity
    of m + n, and a generalized Gauss-Laguerre rule integrates that exactly.
    """
    s = float(exponent)
    if not s > -1:
        raise InvalidArgument(f"power {s} is not integrable at the origin")
    m = np.arange(size)
    parity = (m[:, None] + m[None, :]) % 2
    out = np.zeros((size, size))
    K = size + 2
    for p in (0, 1):
        alpha = 0.5 * (s + p - 1.0)
        t = _laguerre_nodes(K, alpha)
        scaled = _laguerre_christoffel(t, alpha, K)
        x = np.sqrt(t)
        F = hermite_functions(size, 1.0, x)
        wq = 0.5 * scaled / x**p
        block = (F * wq) @ F.T
        out = np.where(parity == p, block, out)
    return out * omega ** (-0.5 * s)


# ---------------------------------------------------------------------------
# Eigendecomposition

def is_real_eigenvalue(E, tol: float = REAL_TOL):
    """Realness classification: |Im E| <= max(tol, tol |Re E|)."""
    E = np.asarray(E)
    return np.abs(E.imag) <= np.maximum(tol, tol * np.abs(E.real))


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenpairs with a biorthonormal set of left vectors.

    ``right[:, n]`` is psi_n, ``left[:, n]`` is phi_n with phi_n^H psi_m = delta_nm.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residuals: np.ndarray
    basis_condition: float
    ill_conditioned: bool = False
    notes: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def real_mask(self) -> np.ndarray:
        return is_real_eigenvalue(self.eigenvalues)

    def subset(self, indices) -> "Spectrum":
        """Restrict to the given eigenpairs (keeps the given order)."""
        idx = np.asarray(indices, dtype=int)
        return Spectrum(
            _frozen(self.eigenvalues[idx]),
            _frozen(self.right[:, idx]),
            _frozen(self.left[:, idx]),
            _frozen(self.residuals[idx]),
            self.basis_condition,
            self.ill_conditioned,
            self.notes,
        )

    def biorthogonality_defect(self) -> float:
        G = self.left.conj().T @ self.right
        return float(np.max(np.abs(G - np.eye(G.shape[0], G.shape[1]))))


def sort_order(E: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Ascending real part, ties broken by ascending imaginary part.

    Real parts within ``rtol * max(1, max |E|)`` of their sorted neighbour
    count as tied, so conjugate pairs whose real parts differ by rounding
    still come out with the negative imaginary part first.
    """
    E = np.asarray(E)
    if E.size == 0:
        return np.arange(0)
    order = np.lexsort((E.imag, E.real))
    tol = rtol * max(1.0, float(np.max(np.abs(E))))
    gaps = np.diff(E.real[order]) > tol
    group = np.empty(E.size, dtype=int)
    group[order] = np.concatenate(([0], np.cumsum(gaps)))
    return np.lexsort((E.imag, group))


def _fix_phases(V: np.ndarray) -> np.ndarray:
    V = V / np.linalg.norm(V, axis=0)
    k = np.argmax(np.abs(V), axis=0)
    lead = V[k, np.arange(V.shape[1])]
    return V * (np.abs(lead) / lead)


def _eig_hermitian(A: np.ndarray) -> Spectrum:
    # zgeev can return a dependent set for degenerate Hermitian input; eigh cannot
    E, V = sla.eigh(A, check_finite=False)
    E = E.astype(complex)
    order = sort_order(E)
    E = E[order]
    V = _fix_phases(V[:, order])
    normA = np.linalg.norm(A) or 1.0
    res = np.linalg.norm(A @ V - V * E, axis=0) / normA
    cond = float(np.linalg.cond(V))
    return Spectrum(_frozen(E), _frozen(V), _frozen(V), _frozen(res), cond, False, ("hermitian",))


def eig_dense(A) -> Spectrum:
    """Full eigendecomposition of a dense complex square matrix.

    LAPACK's ``zgeev`` (balancing, Hessenberg reduction, shifted QR) supplies
    the eigenpairs. Right vectors are unit-normalized with their largest
    entry made real positive; left vectors come from inverting the right
    eigenvector matrix when it is well conditioned and from the left
    eigenvectors of the same decomposition otherwise. Exactly Hermitian
    input goes to the Hermitian solver instead and gets identical left and
    right vectors.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidArgument(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("matrix has non-finite entries")
    # balancing can amplify entries far below rounding level into O(1) errors
    mag = np.abs(A)
    negligible = (mag < FLUSH_RELATIVE * mag.max()) & (mag > 0)
    if negligible.any():
        A = np.where(negligible, 0, A)
    if np.array_equal(A, A.conj().T):
        return _eig_hermitian(A)
    try:
        E, V = sla.eig(A, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        try:
            partial = sla.eigvals(A, check_finite=False)
        except Exception:
            partial = None
        raise EigenSolveError(f"eigensolver did not converge: {exc}", partial) from exc

    order = sort_order(E)
    E = E[order]
    V = _fix_phases(V[:, order])
    cond = float(np.linalg.cond(V))
    notes = []
    if cond <= INVERSE_LEFT_LIMIT:
        W = np.linalg.inv(V).conj().T
    else:
        # left and right vectors must come from one call to share an ordering
        E, VL, VR = sla.eig(A, left=True, right=True, check_finite=False)
        order = sort_order(E)
        E = E[order]
        V = _fix_phases(VR[:, order])
        VL = VL[:, order]
        overlap = np.einsum("ij,ij->j", VL.conj(), V).conj()
        with np.errstate(divide="ignore", invalid="ignore"):
            W = VL / overlap
        notes.append("left vectors from adjoint decomposition")
        if np.any(overlap == 0):
            # exactly defective: no biorthogonal system exists
            cond = math.inf
            notes.append("non-diagonalizable")

    normA = np.linalg.norm(A)
    if normA == 0:
        normA = 1.0
    res = np.linalg.norm(A @ V - V * E, axis=0) / normA
    ill = cond > ILL_CONDITIONED
    if ill:
        warnings.warn(f"eigenvector basis is ill-conditioned (cond = {cond:.3g})", RuntimeWarning)
        notes.append("ill-conditioned eigenbasis")
    return Spectrum(_frozen(E), _frozen(V), _frozen(W), _frozen(res), cond, ill, tuple(notes))
