"""
Dense matrix representations of operator expressions on the half-offset
grid and in the oscillator basis, plus adjoints under general inner products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

import numpy as np
import scipy.linalg as sla

from .errors import AssemblyError, InvalidArgument, UnsupportedInBasis
from .expr import Node, OperatorExpr, evaluate, power_terms, to_text
from .numerics import (
    BasisSpec,
    GridSpec,
    Spectrum,
    _frozen,
    half_line_power_integrals,
    hermite_functions,
    scaled_hermite_weights,
)

Rep = Union[GridSpec, BasisSpec]

# a grid mode counts as resolved when its second difference is small
# compared with the mode itself (pure node-to-node oscillation gives 4)
RESOLVED_ROUGHNESS = 0.5


@dataclass(frozen=True)
class MatrixRep:
    """A dense complex matrix tied to the representation it lives on."""

    matrix: np.ndarray
    rep: Rep
    provenance: Any = None

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=complex)
        n = rep_size(self.rep)
        if A.shape != (n, n):
            raise InvalidArgument(f"matrix shape {A.shape} does not match representation size {n}")
        object.__setattr__(self, "matrix", _frozen(A))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def with_matrix(self, matrix, provenance=None) -> "MatrixRep":
        return MatrixRep(matrix, self.rep, provenance)


def rep_size(rep: Rep) -> int:
    if isinstance(rep, GridSpec):
        return rep.size
    if isinstance(rep, BasisSpec):
        return rep.size
    raise InvalidArgument(f"unknown representation {rep!r}")


# ---------------------------------------------------------------------------
# grid

def _difference_matrices(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    n, h = grid.size, grid.spacing
    off = np.ones(n - 1)
    d1 = (np.diag(off, 1) - np.diag(off, -1)) / (2 * h)
    d2 = (np.diag(off, 1) - 2 * np.eye(n) + np.diag(off, -1)) / h**2
    return d1, d2


def _grid_coefficient(node: Node, grid: GridSpec, order: int) -> np.ndarray:
    x = grid.nodes
    c = evaluate(node, x)
    bad = np.flatnonzero(~np.isfinite(c))
    if bad.size:
        j = bad[0]
        raise AssemblyError(
            f"coefficient {to_text(node)!r} of p^{order} is not finite at node {j} (x = {float(x[j])!r})"
        )
    return c


def assemble_grid(expr: OperatorExpr, grid: GridSpec) -> MatrixRep:
    """Central-difference matrix of ``expr`` with zero values beyond both ends.

    A term ``f(x) p^k`` becomes ``diag(f) @ P_k`` with ``P_1 = -i D1`` and
    ``P_2 = -D2`` (three-point stencils).
    """
    d1, d2 = _difference_matrices(grid)
    stencils = {0: None, 1: -1j * d1, 2: -d2}
    A = np.zeros((grid.size, grid.size), dtype=complex)
    for term in expr.terms:
        c = _grid_coefficient(term.coeff, grid, term.order)
        if term.order == 0:
            A[np.diag_indices_from(A)] += c
        else:
            A += c[:, None] * stencils[term.order]
    return MatrixRep(A, grid, expr)


# ---------------------------------------------------------------------------
# oscillator basis

def _ladder_x(size: int, omega: float) -> np.ndarray:
    off = np.sqrt(np.arange(1, size) / (2 * omega))
    return np.diag(off, 1) + np.diag(off, -1)


def _ladder_p(size: int, omega: float) -> np.ndarray:
    off = np.sqrt(omega * np.arange(1, size) / 2)
    return 1j * (np.diag(off, -1) - np.diag(off, 1))


def _probe_singular(node: Node) -> bool:
    eps = 1e-9
    near = evaluate(node, np.array([-eps, eps]))
    ref = evaluate(node, np.array([-1.0, 1.0]))
    scale = max(1.0, float(np.max(np.abs(ref))) if np.all(np.isfinite(ref)) else 1.0)
    return bool(np.any(~np.isfinite(near)) or np.any(np.abs(near) > 1e6 * scale))


def _coefficient_block(node: Node, basis: BasisSpec, cols: int, quad: int) -> np.ndarray:
    """Matrix ``int psi_m f psi_n dx`` for m < basis.size, n < cols."""
    M, w = basis.size, basis.frequency
    terms = power_terms(node)
    if terms is not None:
        singular = [s for s in terms if s <= -1]
        if singular:
            raise UnsupportedInBasis(
                f"coefficient {to_text(node)!r} behaves like |x|^{min(singular):g} at the origin "
                "and is not integrable in the oscillator basis; use a grid representation"
            )
        n = np.arange(cols)
        sign = (-1.0) ** (n[:, None] + n[None, :])
        out = np.zeros((cols, cols), dtype=complex)
        for s, (cp, cm) in terms.items():
            if cp == 0 and cm == 0:
                continue
            half = half_line_power_integrals(cols, w, s)
            out += (cp + cm * sign) * half
        return out[:M, :cols]
    if _probe_singular(node):
        raise UnsupportedInBasis(
            f"coefficient {to_text(node)!r} is singular at the origin; use a grid representation"
        )
    xq, wq = scaled_hermite_weights(quad, w)
    f = evaluate(node, xq)
    if not np.all(np.isfinite(f)):
        raise AssemblyError(f"coefficient {to_text(node)!r} is not finite at a quadrature node")
    F = hermite_functions(cols, w, xq)
    return (F[:M] * (wq * f)) @ F.T


def assemble_basis(expr: OperatorExpr, basis: BasisSpec, quadrature_points: int | None = None) -> MatrixRep:
    """Galerkin matrix ``<psi_m | expr | psi_n>`` in the oscillator basis.

    Powers of p act on the basis functions through the ladder relations, so
    only the coefficient functions are integrated. Coefficients that are
    sums of signed power laws (polynomials, ``ipow(x, nu) * x^k``, ...)
    are integrated exactly by a half-line Gauss rule; anything else uses a
    Gauss-Hermite rule with ``quadrature_points`` nodes (default 2M).

    Raises
    ------
    UnsupportedInBasis
        If a coefficient is not integrable near x = 0 (e.g. 1/x, 1/x^2).
    """
    M = basis.size
    Q = int(quadrature_points or basis.quad)
    if Q < 1:
        raise InvalidArgument("quadrature needs at least one point")
    cols = M + expr.max_order
    P = _ladder_p(cols, basis.frequency)
    A = np.zeros((M, M), dtype=complex)
    for term in expr.terms:
        F = _coefficient_block(term.coeff, basis, cols, Q)
        Pk = np.linalg.matrix_power(P, term.order)
        A += F @ Pk[:, :M]
    return MatrixRep(A, basis, expr)


def assemble(expr: OperatorExpr, rep: Rep, quadrature_points: int | None = None) -> MatrixRep:
    if isinstance(rep, GridSpec):
        return assemble_grid(expr, rep)
    return assemble_basis(expr, rep, quadrature_points)


def position_momentum_matrices(rep: Rep) -> tuple[MatrixRep, MatrixRep]:
    """The position and momentum matrices of a representation."""
    if isinstance(rep, GridSpec):
        d1, _ = _difference_matrices(rep)
        return MatrixRep(np.diag(rep.nodes), rep, "x"), MatrixRep(-1j * d1, rep, "p")
    if isinstance(rep, BasisSpec):
        return (
            MatrixRep(_ladder_x(rep.size, rep.frequency), rep, "x"),
            MatrixRep(_ladder_p(rep.size, rep.frequency), rep, "p"),
        )
    raise InvalidArgument(f"unknown representation {rep!r}")


# ---------------------------------------------------------------------------
# adjoints

def adjoint_matrix(A: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``G^-1 A^H G`` for a Hermitian positive-definite Gram matrix G."""
    B = A.conj().T @ G
    if np.count_nonzero(G - np.diag(np.diagonal(G))) == 0:
        return B / np.diagonal(G)[:, None]
    return sla.solve(G, B, assume_a="pos")


def adjoint_wrt(A: MatrixRep, ip) -> MatrixRep:
    """Adjoint of ``A`` with respect to ``(u, v) = u^H G v``.

    Raises
    ------
    MetricError
        If the Gram matrix of ``ip`` is not Hermitian positive definite.
    """
    from .hilbert import gram_matrix

    G = gram_matrix(ip, A.rep)
    return MatrixRep(adjoint_matrix(A.matrix, G), A.rep, ("adjoint", A.provenance))


# ---------------------------------------------------------------------------
# which eigenpairs the representation actually resolves

def resolved_modes(s: Spectrum, rep: Rep, roughness: float = RESOLVED_ROUGHNESS) -> np.ndarray:
    """Indices of eigenpairs that are approximations of continuum states.

    On a grid the test is the relative size of the second difference of the
    eigenvector; modes pinned to a few nodes (e.g. near a 1/x^2 singularity)
    fail it. In the oscillator basis an eigenvalue is kept when its modulus
    does not exceed the largest basis energy omega (2M + 1); larger ones are
    truncation artefacts.
    """
    if isinstance(rep, GridSpec):
        V = np.asarray(s.right)
        lap = V[2:] - 2 * V[1:-1] + V[:-2]
        rough = np.linalg.norm(lap, axis=0) / np.linalg.norm(V, axis=0)
        keep = rough <= roughness
    else:
        keep = np.abs(s.eigenvalues) <= rep.frequency * (2 * rep.size + 1)
    return np.flatnonzero(keep)


def lowest_resolved(s: Spectrum, rep: Rep, count: int | None = None) -> Spectrum:
    idx = resolved_modes(s, rep)
    if count is not None:
        idx = idx[:count]
    return s.subset(idx)


__all__ = [
    "MatrixRep",
    "assemble",
    "assemble_basis",
    "assemble_grid",
    "adjoint_matrix",
    "adjoint_wrt",
    "position_momentum_matrices",
    "resolved_modes",
    "lowest_resolved",
    "rep_size",
]
