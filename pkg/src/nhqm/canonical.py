"""
Similarity transforms, canonical position/momentum pairs and the residual
checks that go with them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, InvalidArgument
from .expr import OperatorExpr, evaluate_matrix
from .hilbert import InnerProduct, TransformMap, gram_matrix, hermiticity_residual
from .numerics import GridSpec, Spectrum
from .operators import MatrixRep, Rep, position_momentum_matrices

DEFAULT_TOLERANCE = {"algebraic": 1e-8, "grid": 1e-3}
EIGENMAP_CONDITION_LIMIT = 1e8

SELF_ADJOINT_NOTE = (
    "Matrix Hermiticity is necessary but not sufficient for self-adjointness of "
    "the underlying operators; domain questions are not decided by these checks."
)

TABLE_LABELS = ("H", "x", "p", "Hhat", "xc", "pc")

# verdicts (L2 side, H side) expected for a model whose map T is not
# L2-unitary; None means either verdict is acceptable
EXPECTED_PATTERN = {
    "H": (False, True),
    "x": (True, None),
    "p": (True, None),
    "Hhat": (True, False),
    "xc": (None, True),
    "pc": (None, True),
}


def similarity_transform(A: MatrixRep, T: TransformMap) -> MatrixRep:
    """``T^-1 A T``."""
    if T.size != A.size:
        raise InvalidArgument(f"map of size {T.size} applied to a matrix of size {A.size}")
    B = T.inverse @ A.matrix @ T.matrix
    return MatrixRep(B, A.rep, {"similarity": T.label, "condition": T.condition, "of": A.provenance})


# ---------------------------------------------------------------------------
# Hermiticity reports

@dataclass(frozen=True)
class HermiticityRow:
    label: str
    residual_l2: float
    residual_h: float
    hermitian_l2: bool
    hermitian_h: bool


@dataclass(frozen=True)
class HermiticityReport:
    rows: tuple[HermiticityRow, ...]
    tolerance: float
    footer: str = SELF_ADJOINT_NOTE

    def row(self, label: str) -> HermiticityRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def mismatches(self, expected: dict | None = None) -> list[str]:
        """Labels whose verdicts disagree with ``expected`` (None entries accept both)."""
        expected = EXPECTED_PATTERN if expected is None else expected
        bad = []
        for r in self.rows:
            want = expected.get(r.label)
            if want is None:
                continue
            for got, w in zip((r.hermitian_l2, r.hermitian_h), want):
                if w is not None and got != w:
                    bad.append(r.label)
                    break
        return bad

    def matches(self, expected: dict | None = None) -> bool:
        return not self.mismatches(expected)


def _report(ops: dict[str, np.ndarray], G_l2: np.ndarray, G_h: np.ndarray, tol: float) -> HermiticityReport:
    rows = []
    for label, A in ops.items():
        r1 = hermiticity_residual(A, G_l2)
        r2 = hermiticity_residual(A, G_h)
        rows.append(HermiticityRow(label, r1, r2, r1 <= tol, r2 <= tol))
    return HermiticityReport(tuple(rows), tol)


def _resolve_tolerance(route: str, tolerance: float | None) -> float:
    if tolerance is not None:
        return float(tolerance)
    if route not in DEFAULT_TOLERANCE:
        raise InvalidArgument(f"unknown assembly route {route!r}")
    return DEFAULT_TOLERANCE[route]


def hermiticity_table(H, xc, pc, Hhat, x, p, ip_l2: InnerProduct, ip_h: InnerProduct,
                      route: str = "algebraic", tolerance: float | None = None) -> HermiticityReport:
    """Residual ``||GA - A^H G||_F / (||G||_F ||A||_F)`` of six operators under two products.

    Verdicts use ``tolerance``, defaulting to 1e-8 for the algebraic route
    and 1e-3 for grid (stencil) assembly.
    """
    tol = _resolve_tolerance(route, tolerance)
    rep = H.rep
    G1 = gram_matrix(ip_l2, rep)
    G2 = gram_matrix(ip_h, rep)
    ops = {"H": H, "x": x, "p": p, "Hhat": Hhat, "xc": xc, "pc": pc}
    for k, A in ops.items():
        if A.size != H.size:
            raise InvalidArgument(f"operator {k} does not share the representation of H")
    return _report({k: A.matrix for k, A in ops.items()}, G1, G2, tol)


# ---------------------------------------------------------------------------
# canonical pairs

@dataclass(frozen=True)
class CanonicalPair:
    xc: MatrixRep
    pc: MatrixRep
    source: TransformMap
    report: HermiticityReport = field(default=None)

    @property
    def rep(self) -> Rep:
        return self.xc.rep

    def metric(self) -> np.ndarray:
        """Gram matrix ``T^H G_L2 T`` of the product in which the pair is Hermitian."""
        return self.source.metric(gram_matrix(InnerProduct.flat(), self.rep))


def canonical_pair(T: TransformMap, rep: Rep, route: str = "algebraic",
                   tolerance: float | None = None) -> CanonicalPair:
    """``xc = T^-1 x T`` and ``pc = T^-1 p T`` with a Hermiticity report.

    The report lists both operators under the flat product and under the
    pulled-back product ``T^H G_L2 T``.
    """
    x, p = position_momentum_matrices(rep)
    xc = similarity_transform(x, T)
    pc = similarity_transform(p, T)
    G1 = gram_matrix(InnerProduct.flat(), rep)
    G2 = T.metric(G1)
    report = _report({"xc": xc.matrix, "pc": pc.matrix}, G1, G2, _resolve_tolerance(route, tolerance))
    return CanonicalPair(xc, pc, T, report)


def _orthonormal_in(U: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Columns spanning range(U), orthonormal in ``u^H G v``."""
    S = U.conj().T @ G @ U
    S = 0.5 * (S + S.conj().T)
    lam, V = np.linalg.eigh(S)
    keep = lam > 1e-12 * lam.max()
    return (U @ V[:, keep]) / np.sqrt(lam[keep])


def probe_vectors(rep: Rep, count: int) -> np.ndarray:
    """Smooth probe vectors: centred Gaussians (grid) or leading basis vectors."""
    if isinstance(rep, GridSpec):
        x = rep.nodes
        widths = np.linspace(1.0, rep.half_width / 4, count)
        return np.exp(-0.5 * (x[:, None] / widths[None, :]) ** 2).astype(complex)
    return np.eye(rep.size, count, dtype=complex)


def commutator_residual(pair: CanonicalPair, modes: int) -> float:
    """Largest relative size of ``P([xc, pc] - i) u`` over ``modes`` probe vectors.

    The probes are the images ``T^-1 g`` of smooth vectors g. P is the
    projector onto their span, orthogonal in the pair's own product, and
    norms are taken in that product too.
    """
    n = pair.xc.size
    if modes < 1 or modes > n // 2:
        raise InvalidArgument(f"modes must lie in [1, {n // 2}]")
    X, P = pair.xc.matrix, pair.pc.matrix
    R = X @ P - P @ X - 1j * np.eye(n)
    G = pair.metric()
    U = pair.source.inverse @ probe_vectors(pair.rep, modes)
    Q = _orthonormal_in(U, G)
    # P R u expressed in the orthonormal basis Q of the probe span
    C = Q.conj().T @ G @ (R @ U)
    norms = np.sqrt(np.real(np.einsum("ij,ij->j", U.conj(), G @ U)))
    return float(np.max(np.linalg.norm(C, axis=0) / norms))


def template_matrix(template: OperatorExpr, pair: CanonicalPair) -> np.ndarray:
    """Substitute ``xc`` for x and ``pc`` for p, coefficients to the left."""
    X, P = pair.xc.matrix, pair.pc.matrix
    out = np.zeros_like(X)
    for term in template.terms:
        out = out + evaluate_matrix(term.coeff, X) @ np.linalg.matrix_power(P, term.order)
    return out


def canonical_form_residual(H: MatrixRep, pair: CanonicalPair, template: OperatorExpr) -> float:
    """``||H - template(xc, pc)||_F / ||H||_F``."""
    D = H.matrix - template_matrix(template, pair)
    return float(np.linalg.norm(D) / np.linalg.norm(H.matrix))


# ---------------------------------------------------------------------------
# eigenvector maps

def eigenmap_T(s_from: Spectrum, s_to: Spectrum, count: int) -> TransformMap:
    """Map sending the first ``count`` eigenvectors of one spectrum to another's.

    ``T = I + (Psi_to - Psi_from) Psi_from^+`` acts as the identity on the
    orthogonal complement of the source span; its inverse follows from the
    Woodbury identity.

    Raises
    ------
    ConditioningError
        If either set of eigenvectors has condition number above 1e8.
    """
    if count > len(s_from) or count > len(s_to):
        raise InvalidArgument("both spectra need at least `count` eigenpairs")
    A = np.asarray(s_from.right)[:, :count]
    B = np.asarray(s_to.right)[:, :count]
    if A.shape[0] != B.shape[0]:
        raise InvalidArgument("spectra live on representations of different size")
    for name, V in (("source", A), ("target", B)):
        c = np.linalg.cond(V)
        if not c <= EIGENMAP_CONDITION_LIMIT:
            raise ConditioningError(f"{name} eigenvectors have condition {c:.3g}")
    Ap = np.linalg.pinv(A)
    D = B - A
    n = A.shape[0]
    T = np.eye(n) + D @ Ap
    core = Ap @ B
    try:
        Ti = np.eye(n) - D @ np.linalg.solve(core, Ap)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("eigenvector map is not invertible") from exc
    cond = float(np.linalg.norm(T, 2) * np.linalg.norm(Ti, 2))
    if not np.isfinite(cond):
        raise ConditioningError("eigenvector map is not invertible")
    return TransformMap(T, Ti, cond, f"eigenmap[{count}]")
