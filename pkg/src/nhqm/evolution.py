"""
Time evolution by spectral expansion, with norms tracked in two inner products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .hilbert import InnerProduct, gram_matrix, metric_norms
from .numerics import BasisSpec, Spectrum, _frozen
from .operators import Rep

OVERLAP_TOL = 1e-6


@dataclass(frozen=True)
class EvolutionResult:
    """States ``psi(t) = sum_n c_n exp(-i E_n t) psi_n`` and their norms.

    ``h_norms`` is computed in the supplied inner product. When
    ``complex_spectrum`` is set, that norm is not expected to be conserved.
    """

    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    l2_norms: np.ndarray
    h_norms: np.ndarray
    coefficients: np.ndarray
    complex_spectrum: bool
    discarded_fraction: float

    def drift(self, norms: np.ndarray | None = None) -> float:
        """``max |n(t) - n(0)| / n(0)`` of the H norm (or of ``norms``)."""
        n = self.h_norms if norms is None else norms
        return float(np.max(np.abs(n - n[0])) / n[0])

    def relative_range(self, norms: np.ndarray | None = None) -> float:
        """``max / min - 1`` of the L2 norm (or of ``norms``)."""
        n = self.l2_norms if norms is None else norms
        return float(n.max() / n.min() - 1.0)


def spectral_propagate(s: Spectrum, psi0, times, ip: InnerProduct, rep: Rep | None = None,
                       coefficient_floor: float = 0.0) -> EvolutionResult:
    """Evolve ``psi0`` under the operator whose eigenpairs are ``s``.

    ``psi0`` is first projected onto the span of the right eigenvectors with
    coefficients ``c_n = phi_n^H psi0``; the part that does not lie in the
    span is reported as ``discarded_fraction`` (relative to ``||psi0||``),
    which also bounds how well ``psi(0)`` reproduces ``psi0``. L2 norms
    are Euclidean.

    Coefficients smaller than ``coefficient_floor * max |c_n|`` are set to
    zero before propagation (and counted as discarded). This keeps rounding
    noise on modes with Im E > 0 from growing exponentially.

    Raises
    ------
    InvalidArgument
        On empty ``times``, a zero state or a size mismatch.
    """
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    t = np.asarray(times, dtype=float).ravel()
    V = np.asarray(s.right)
    if t.size == 0:
        raise InvalidArgument("no time points given")
    if psi0.shape[0] != V.shape[0]:
        raise InvalidArgument(f"state has {psi0.shape[0]} components, eigenvectors have {V.shape[0]}")
    n0 = np.linalg.norm(psi0)
    if n0 == 0:
        raise InvalidArgument("initial state is zero")
    c = np.asarray(s.left).conj().T @ psi0
    if coefficient_floor > 0:
        c = np.where(np.abs(c) < coefficient_floor * np.max(np.abs(c)), 0.0, c)
    recon = V @ c
    discarded = float(np.linalg.norm(psi0 - recon) / n0)
    with np.errstate(over="ignore", invalid="ignore"):
        phases = np.exp(-1j * np.outer(t, s.eigenvalues))
    states = (phases * c) @ V.T
    if ip.kind == "eigenbasis_delta" and ip.spectrum is s:
        # the eigenvectors are orthonormal by declaration
        h = np.linalg.norm(phases * c, axis=1)
    else:
        if rep is None:
            if ip.kind == "weighted":
                raise InvalidArgument("a weighted product needs the grid it lives on")
            rep = BasisSpec(V.shape[0])  # only the size matters here
        h = metric_norms(states.T, gram_matrix(ip, rep))
    l2 = np.linalg.norm(states, axis=1)
    return EvolutionResult(
        times=_frozen(t),
        states=_frozen(states),
        l2_norms=_frozen(l2),
        h_norms=_frozen(h),
        coefficients=_frozen(c),
        complex_spectrum=bool(np.any(~s.real_mask)),
        discarded_fraction=discarded,
    )


def two_mode_state(s: Spectrum, candidates=None) -> tuple[np.ndarray, tuple[int, int]]:
    """Equal-weight mix of the lowest mode and the next mode that overlaps it in L2.

    For Hermitian problems no pair overlaps and the two lowest modes are used.
    ``candidates`` restricts the search to the given eigenpair indices.
    """
    idx = np.arange(len(s)) if candidates is None else np.asarray(candidates, dtype=int)
    if idx.size < 2:
        raise InvalidArgument("need at least two eigenpairs")
    V = np.asarray(s.right)
    a = idx[0]
    b = idx[1]
    for j in idx[1:]:
        if abs(np.vdot(V[:, a], V[:, j])) > OVERLAP_TOL:
            b = j
            break
    psi = V[:, a] + V[:, b]
    return psi / np.linalg.norm(psi), (int(a), int(b))


def two_mode_l2_norms(s: Spectrum, modes: tuple[int, int], coefficients, times) -> np.ndarray:
    """Closed-form Euclidean norm of ``c_a psi_a e^{-iE_a t} + c_b psi_b e^{-iE_b t}``."""
    a, b = modes
    V = np.asarray(s.right)
    G = V[:, [a, b]].conj().T @ V[:, [a, b]]
    ca, cb = coefficients
    Ea, Eb = s.eigenvalues[a], s.eigenvalues[b]
    t = np.asarray(times, dtype=float)
    xa = ca * np.exp(-1j * Ea * t)
    xb = cb * np.exp(-1j * Eb * t)
    sq = (np.abs(xa) ** 2 * G[0, 0].real + np.abs(xb) ** 2 * G[1, 1].real
          + 2 * np.real(np.conj(xa) * xb * G[0, 1]))
    return np.sqrt(sq)
