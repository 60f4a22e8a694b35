"""
Inner products, metric operators and maps T with (u, v)_metric = (Tu, Tv)_L2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, InvalidArgument, MetricError, SingularMapError
from .expr import Node, evaluate, to_text
from .numerics import BasisSpec, GridSpec, Spectrum, _frozen
from .operators import MatrixRep, Rep, rep_size

PD_THRESHOLD = 1e-12
METRIC_CONDITION_LIMIT = 1e10

KINDS = ("flat", "weighted", "metric", "eigenbasis_delta")


@dataclass(frozen=True)
class InnerProduct:
    """One of four ways to pair vectors of a representation.

    Use the constructors :meth:`flat`, :meth:`weighted`, :meth:`from_metric`
    and :meth:`eigenbasis_delta` rather than filling the fields by hand.
    """

    kind: str
    weight: Node | None = None
    metric: np.ndarray | None = None
    spectrum: Spectrum | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown inner product kind {self.kind!r}")

    @classmethod
    def flat(cls) -> "InnerProduct":
        return cls("flat", label="L2")

    @classmethod
    def weighted(cls, weight) -> "InnerProduct":
        """Weight function w(x); ``weight`` is an expression node or text."""
        if isinstance(weight, str):
            from .parser import parse_scalar

            weight = parse_scalar(weight)
        return cls("weighted", weight=weight, label=f"w = {to_text(weight)}")

    @classmethod
    def from_metric(cls, eta, label: str = "metric") -> "InnerProduct":
        eta = np.asarray(eta, dtype=complex)
        if eta.ndim != 2 or eta.shape[0] != eta.shape[1]:
            raise InvalidArgument(f"metric must be square, got shape {eta.shape}")
        _check_positive(eta)
        return cls("metric", metric=_frozen(eta), label=label)

    @classmethod
    def eigenbasis_delta(cls, s: Spectrum) -> "InnerProduct":
        return cls("eigenbasis_delta", spectrum=s, label="eigenbasis")


def _check_positive(G: np.ndarray) -> None:
    scale = np.max(np.abs(G)) if G.size else 0.0
    if not np.all(np.isfinite(G)):
        raise MetricError("Gram matrix has non-finite entries")
    if np.max(np.abs(G - G.conj().T)) > 1e-12 * max(scale, 1e-300):
        raise MetricError("Gram matrix is not Hermitian")
    if np.count_nonzero(G - np.diag(np.diagonal(G))) == 0:
        lam = np.diagonal(G).real
    else:
        lam = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    if lam.size == 0 or not lam.min() > PD_THRESHOLD * lam.max():
        raise MetricError(
            f"Gram matrix is not positive definite (eigenvalues in [{lam.min():.3g}, {lam.max():.3g}])"
        )


def _rep_of(rep) -> Rep:
    return rep.rep if isinstance(rep, MatrixRep) else rep


def gram_matrix(ip: InnerProduct, rep) -> np.ndarray:
    """Hermitian positive-definite G with ``(u, v) = u^H G v`` on ``rep``.

    ``rep`` may be a GridSpec, a BasisSpec or a MatrixRep.

    Raises
    ------
    MetricError
        If G is not Hermitian positive definite.
    """
    rep = _rep_of(rep)
    n = rep_size(rep)
    if ip.kind == "flat":
        h = rep.spacing if isinstance(rep, GridSpec) else 1.0
        return h * np.eye(n, dtype=complex)
    if ip.kind == "weighted":
        if not isinstance(rep, GridSpec):
            raise InvalidArgument("weight-function products are defined on grids only")
        w = evaluate(ip.weight, rep.nodes)
        if not np.all(np.isfinite(w)):
            j = int(np.flatnonzero(~np.isfinite(w))[0])
            raise MetricError(f"weight is not finite at node {j} (x = {float(rep.nodes[j])!r})")
        G = np.diag(rep.spacing * w)
    elif ip.kind == "metric":
        G = np.asarray(ip.metric)
    else:
        G = _delta_gram(ip.spectrum)
    if G.shape != (n, n):
        raise InvalidArgument(f"inner product of size {G.shape[0]} used on a representation of size {n}")
    _check_positive(G)
    return G


def _delta_gram(s: Spectrum) -> np.ndarray:
    W = np.asarray(s.left)
    if W.shape[0] != W.shape[1]:
        raise InvalidArgument("the eigenbasis product needs the complete set of eigenpairs")
    G = W @ W.conj().T
    return 0.5 * (G + G.conj().T)


def hermiticity_residual(A: np.ndarray, G: np.ndarray) -> float:
    """``||G A - A^H G||_F / (||G||_F ||A||_F)``; zero iff A is G-Hermitian."""
    A = np.asarray(A)
    GA = G @ A
    num = np.linalg.norm(GA - GA.conj().T)
    den = np.linalg.norm(G) * np.linalg.norm(A)
    return float(num / den) if den > 0 else 0.0


def pseudo_hermiticity_residual(H: MatrixRep, ip: InnerProduct) -> float:
    """How far ``eta H = H^H eta`` is from holding, relative to the sizes involved."""
    return hermiticity_residual(H.matrix, gram_matrix(ip, H.rep))


# ---------------------------------------------------------------------------
# metrics from eigenbases

def metric_from_spectrum(s: Spectrum, normalization: InnerProduct | None = None,
                         rep=None) -> InnerProduct:
    """Metric making the eigenvectors orthonormal: ``eta = (Psi^-1)^H Psi^-1``.

    By default the eigenvectors are taken as stored (unit Euclidean norm).
    Passing ``normalization`` (and ``rep``) rescales each eigenvector to
    unit norm under that product first, which changes eta by a positive
    diagonal congruence in the eigenbasis.

    Raises
    ------
    ConditioningError
        If the eigenvector matrix has condition number above 1e10.
    """
    if s.basis_condition > METRIC_CONDITION_LIMIT:
        raise ConditioningError(
            f"eigenbasis condition {s.basis_condition:.3g} exceeds {METRIC_CONDITION_LIMIT:g}"
        )
    W = np.asarray(s.left)
    if W.shape[0] != W.shape[1]:
        raise InvalidArgument("a metric needs the complete set of eigenpairs")
    if normalization is not None:
        G = gram_matrix(normalization, rep)
        V = np.asarray(s.right)
        norms2 = np.real(np.einsum("ij,ij->j", V.conj(), G @ V))
        W = W * np.sqrt(norms2)
    eta = W @ W.conj().T
    eta = 0.5 * (eta + eta.conj().T)
    return InnerProduct.from_metric(eta, label="eigenbasis metric")


# ---------------------------------------------------------------------------
# maps

@dataclass(frozen=True)
class TransformMap:
    """Invertible map T with its inverse and condition number."""

    matrix: np.ndarray
    inverse: np.ndarray
    condition: float
    label: str = ""

    def __post_init__(self):
        T = np.asarray(self.matrix, dtype=complex)
        Ti = np.asarray(self.inverse, dtype=complex)
        if T.shape != Ti.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise InvalidArgument("map and inverse must be square matrices of equal size")
        object.__setattr__(self, "matrix", _frozen(T))
        object.__setattr__(self, "inverse", _frozen(Ti))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def inverse_defect(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.inverse - np.eye(self.size))))

    @classmethod
    def identity(cls, n: int) -> "TransformMap":
        eye = np.eye(n, dtype=complex)
        return cls(eye, eye, 1.0, "identity")

    def metric(self, base: np.ndarray) -> np.ndarray:
        """Pulled-back Gram matrix ``T^H base T``."""
        T = self.matrix
        return T.conj().T @ base @ T


def unitarizing_map(ip_metric: InnerProduct) -> TransformMap:
    """Positive square root ``T = eta^(1/2)``, so that ``T^H T = eta``.

    Raises
    ------
    MetricError
        If ``ip_metric`` is not of metric kind or eta is not positive definite.
    """
    if ip_metric.kind != "metric":
        raise MetricError(f"a unitarizing map needs a metric inner product, got {ip_metric.kind!r}")
    eta = np.asarray(ip_metric.metric)
    _check_positive(eta)
    lam, U = np.linalg.eigh(0.5 * (eta + eta.conj().T))
    if not lam.min() > 0:
        raise MetricError("metric is not positive definite")
    r = np.sqrt(lam)
    T = (U * r) @ U.conj().T
    Ti = (U / r) @ U.conj().T
    return TransformMap(T, Ti, float(r.max() / r.min()), "eta^(1/2)")


def diagonal_map(expr, grid: GridSpec) -> TransformMap:
    """``T = diag(f(x_j))`` for a scalar expression f (node or text).

    Raises
    ------
    SingularMapError
        If f vanishes (or is not finite) at a grid node.
    """
    if isinstance(expr, str):
        from .parser import parse_scalar

        expr = parse_scalar(expr)
    if not isinstance(grid, GridSpec):
        raise InvalidArgument("diagonal maps are defined on grids")
    x = grid.nodes
    d = evaluate(expr, x)
    mag = np.abs(d)
    bad = np.flatnonzero(~np.isfinite(d) | (mag <= 1e-14 * np.max(mag, initial=0.0)))
    if bad.size:
        j = int(bad[0])
        raise SingularMapError(f"map {to_text(expr)!r} is singular at node {j} (x = {float(x[j])!r})")
    return TransformMap(np.diag(d), np.diag(1.0 / d), float(mag.max() / mag.min()), to_text(expr))


# ---------------------------------------------------------------------------
# diagnostics

def orthonormality_defect(s: Spectrum, ip: InnerProduct, count: int, rep=None) -> float:
    """``max |G_nm - delta_nm|`` for the first ``count`` eigenvectors.

    Each vector is normalized in ``ip`` first, so only the off-diagonal
    overlaps contribute. ``rep`` is needed for the flat and weighted kinds.
    """
    if count > len(s):
        raise InvalidArgument(f"asked for {count} vectors, spectrum has {len(s)}")
    V = np.asarray(s.right)[:, :count]
    if rep is None and ip.kind in ("flat", "weighted"):
        raise InvalidArgument("flat and weighted products need the representation")
    G = gram_matrix(ip, rep if rep is not None else BasisSpec(V.shape[0]))
    S = V.conj().T @ G @ V
    d = np.sqrt(np.real(np.diagonal(S)))
    S = S / np.outer(d, d)
    return float(np.max(np.abs(S - np.eye(count))))


def metric_norms(states: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``sqrt(u^H G u)`` for each column u."""
    return np.sqrt(np.maximum(np.real(np.einsum("ij,ij->j", states.conj(), G @ states)), 0.0))

