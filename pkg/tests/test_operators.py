import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nhqm.errors import AssemblyError, InvalidArgument, MetricError, UnsupportedInBasis
from nhqm.hilbert import InnerProduct
from nhqm.models import paper_example
from nhqm.numerics import BasisSpec, eig_dense, make_grid
from nhqm.operators import (
    MatrixRep,
    adjoint_matrix,
    adjoint_wrt,
    assemble,
    assemble_basis,
    assemble_grid,
    lowest_resolved,
    position_momentum_matrices,
    resolved_modes,
)
from nhqm.parser import parse_expression

SMALL = make_grid(1.0, 2)


class TestGridAssembly:
    def test_position(self):
        A = assemble_grid(parse_expression("x"), SMALL)
        np.testing.assert_array_equal(A.matrix, np.diag([-0.75, -0.25, 0.25, 0.75]))

    def test_second_derivative(self):
        A = assemble_grid(parse_expression("p^2"), SMALL).matrix
        h = 0.5
        expected = (2 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1)) / h**2
        np.testing.assert_allclose(A, expected, rtol=0, atol=1e-15)

    def test_first_derivative_sign(self):
        # p = -i d/dx on a linear function gives -i away from the ends
        g = make_grid(2.0, 10)
        p = assemble_grid(parse_expression("p"), g).matrix
        np.testing.assert_allclose((p @ g.nodes)[1:-1], -1j, atol=1e-13)

    def test_paper_example_by_hand(self):
        # the same stencil written out entry by entry, one loop per row
        omega = 1.0
        A = assemble_grid(paper_example(omega).expr, SMALL).matrix
        x, h = SMALL.nodes, SMALL.spacing
        ref = np.zeros((4, 4), dtype=complex)
        for j in range(4):
            ref[j, j] = 2 / h**2 - 2 / x[j] ** 2 + omega**2 * x[j] ** 2
            if j + 1 < 4:
                ref[j, j + 1] = -1 / h**2 + 1 / (x[j] * h)
            if j > 0:
                ref[j, j - 1] = -1 / h**2 - 1 / (x[j] * h)
        np.testing.assert_allclose(A, ref, rtol=1e-14, atol=1e-14)

    def test_paper_example_rows_at_production_size(self):
        g = make_grid(10.0, 400)
        A = assemble_grid(paper_example(1.0).expr, g).matrix
        x, h = g.nodes, g.spacing
        j = np.arange(1, g.size - 1)
        np.testing.assert_allclose(A[j, j], 2 / h**2 - 2 / x[j] ** 2 + x[j] ** 2, rtol=1e-13)
        np.testing.assert_allclose(A[j, j + 1], -1 / h**2 + 1 / (x[j] * h), rtol=1e-13)
        np.testing.assert_allclose(A[j, j - 1], -1 / h**2 - 1 / (x[j] * h), rtol=1e-13)
        assert np.count_nonzero(np.triu(A, 2)) == 0
        assert np.count_nonzero(np.tril(A, -2)) == 0

    def test_ordering_is_coefficient_after_derivative(self):
        # x*p: row j is -i x_j (v_{j+1} - v_{j-1}) / 2h
        A = assemble_grid(parse_expression("x*p"), SMALL).matrix
        np.testing.assert_allclose(A[1, 2], -1j * SMALL.nodes[1] / (2 * SMALL.spacing))
        np.testing.assert_allclose(A[2, 1], 1j * SMALL.nodes[2] / (2 * SMALL.spacing))

    def test_non_finite_coefficient_names_node(self):
        g = make_grid(1.0, 2)
        with pytest.raises(AssemblyError, match=r"node 2 \(x = 0.25\)"):
            assemble_grid(parse_expression("1/(x - 0.25)"), g)

    def test_provenance(self):
        e = parse_expression("p^2 + x^2")
        assert assemble_grid(e, SMALL).provenance == e


class TestBasisAssembly:
    def test_position(self):
        A = assemble_basis(parse_expression("x"), BasisSpec(3, 1.0)).matrix
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(A, [[0, r, 0], [r, 0, 1], [0, 1, 0]], atol=1e-14)

    def test_position_by_generic_quadrature(self):
        # exp(0*x)*x is not recognised as a power law and goes through Gauss-Hermite
        A = assemble_basis(parse_expression("exp(0*x)*x"), BasisSpec(3, 1.0)).matrix
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(A, [[0, r, 0], [r, 0, 1], [0, 1, 0]], atol=1e-13)

    @pytest.mark.parametrize("omega", [0.5, 1.0, 2.0])
    def test_oscillator_is_diagonal(self, omega):
        A = assemble_basis(parse_expression(f"p^2 + {omega**2!r}*x^2"), BasisSpec(4, omega)).matrix
        np.testing.assert_allclose(A, np.diag(omega * np.array([1, 3, 5, 7])), atol=1e-12)

    @pytest.mark.parametrize("text", ["1/x^2", "p^2 + 1/x^2", "(2i/x)*p", "1/x", "1/abs(x)"])
    def test_singular_coefficients_rejected(self, text):
        with pytest.raises(UnsupportedInBasis, match="grid"):
            assemble_basis(parse_expression(text), BasisSpec(6))

    def test_integrable_singularity_accepted(self):
        A = assemble_basis(parse_expression("ipow(x, -0.5)"), BasisSpec(4)).matrix
        assert np.all(np.isfinite(A))

    def test_cubic_potential_is_pt_symmetric(self):
        A = assemble_basis(parse_expression("p^2 + ipow(x, 1)*x^2"), BasisSpec(10)).matrix
        # (i x^3) couples states of opposite parity with purely imaginary entries
        n = np.arange(10)
        same = (n[:, None] + n[None, :]) % 2 == 0
        np.testing.assert_allclose(A[~same].real, 0, atol=1e-12)
        np.testing.assert_allclose(A[same].imag, 0, atol=1e-12)
        np.testing.assert_allclose(A, A.T, atol=1e-12)

    def test_exact_and_generic_quadrature_agree(self):
        M = 12
        exact = assemble_basis(parse_expression("x^4 - 2*x^2"), BasisSpec(M)).matrix
        generic = assemble_basis(parse_expression("exp(0*x)*(x^4 - 2*x^2)"), BasisSpec(M)).matrix
        np.testing.assert_allclose(generic, exact, atol=1e-11)

    def test_bad_quadrature_size(self):
        with pytest.raises(InvalidArgument):
            assemble_basis(parse_expression("exp(x)"), BasisSpec(3), quadrature_points=-1)


class TestPositionMomentum:
    def test_basis_two_states(self):
        x, p = position_momentum_matrices(BasisSpec(2, 1.0))
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(x.matrix, [[0, r], [r, 0]])
        np.testing.assert_allclose(p.matrix, [[0, -1j * r], [1j * r, 0]])

    def test_basis_matches_quadrature_of_derivative(self):
        # -i d/dx psi_n by differentiating the Hermite functions numerically
        from nhqm.numerics import gauss_hermite_rule, hermite_functions

        w = 1.7
        xq, wq = gauss_hermite_rule(60, w)
        F = hermite_functions(6, w, xq)
        eps = 1e-6
        dF = (hermite_functions(6, w, xq + eps) - hermite_functions(6, w, xq - eps)) / (2 * eps)
        ref = (F * wq * np.exp(w * xq**2)) @ (-1j * dF).T
        _, p = position_momentum_matrices(BasisSpec(6, w))
        np.testing.assert_allclose(p.matrix, ref, atol=1e-7)

    def test_grid(self):
        x, p = position_momentum_matrices(SMALL)
        np.testing.assert_array_equal(x.matrix, np.diag([-0.75, -0.25, 0.25, 0.75]))
        np.testing.assert_allclose(p.matrix, assemble_grid(parse_expression("p"), SMALL).matrix)

    @pytest.mark.parametrize("rep", [SMALL, make_grid(3.0, 17), BasisSpec(2), BasisSpec(9, 0.3)])
    def test_hermitian(self, rep):
        for A in position_momentum_matrices(rep):
            np.testing.assert_allclose(A.matrix, A.matrix.conj().T, atol=0)

    def test_grid_commutator_stencil_identity(self, rng):
        g = make_grid(4.0, 20)
        x, p = (A.matrix for A in position_momentum_matrices(g))
        v = rng.normal(size=g.size) + 1j * rng.normal(size=g.size)
        lhs = (x @ p - p @ x) @ v
        np.testing.assert_allclose(lhs[1:-1], 1j * (v[2:] + v[:-2]) / 2, atol=1e-12)

    @pytest.mark.parametrize("M", [2, 5, 40])
    def test_basis_commutator_truncation(self, M):
        x, p = (A.matrix for A in position_momentum_matrices(BasisSpec(M, 1.3)))
        C = x @ p - p @ x
        expected = 1j * np.eye(M)
        expected[-1, -1] = 1j * (1 - M)
        assert np.max(np.abs(C - expected)) <= 1e-12


class TestMatrixRep:
    def test_shape_checked(self):
        with pytest.raises(InvalidArgument):
            MatrixRep(np.eye(3), SMALL)

    def test_read_only(self):
        A = MatrixRep(np.eye(4), SMALL)
        with pytest.raises(ValueError):
            A.matrix[0, 0] = 2

    def test_assemble_dispatch(self):
        e = parse_expression("x")
        assert assemble(e, SMALL).rep is SMALL
        assert assemble(e, BasisSpec(3)).rep == BasisSpec(3)


class TestAdjoint:
    def test_hermitian_under_flat_product(self):
        x, p = position_momentum_matrices(SMALL)
        np.testing.assert_allclose(adjoint_wrt(p, InnerProduct.flat()).matrix, p.matrix)

    @settings(max_examples=40, deadline=None)
    @given(hnp.arrays(np.complex128, (5, 5), elements=st.complex_numbers(max_magnitude=5, allow_nan=False,
                                                                           allow_infinity=False)),
           hnp.arrays(np.float64, (5, 5), elements=st.floats(-1, 1)))
    def test_involution(self, A, B):
        G = B @ B.T + 0.5 * np.eye(5)
        back = adjoint_matrix(adjoint_matrix(A, G), G)
        assert np.max(np.abs(back - A)) <= 1e-12 * max(1.0, np.max(np.abs(A))) * np.linalg.cond(G)

    def test_involution_weighted(self):
        g = make_grid(10.0, 50)
        H = assemble_grid(paper_example(1.0).expr, g)
        ip = InnerProduct.weighted("1/x^2")
        back = adjoint_wrt(adjoint_wrt(H, ip), ip).matrix
        assert np.max(np.abs(back - H.matrix)) <= 1e-12 * np.max(np.abs(H.matrix))

    def test_non_positive_weight_rejected(self):
        x, _ = position_momentum_matrices(SMALL)
        with pytest.raises(MetricError):
            adjoint_wrt(x, InnerProduct.weighted("x"))

    @staticmethod
    def _momentum_adjoint_action(N):
        g = make_grid(10.0, N)
        x = g.nodes
        _, p = position_momentum_matrices(g)
        pa = adjoint_wrt(p, InnerProduct.weighted("1/x^2")).matrix
        target = p.matrix + np.diag(2j / x)
        rows = (np.abs(x) >= 1) & (np.abs(x) <= 9)
        dev = 0.0
        for c, s in [(3.0, 1.0), (-4.0, 0.7), (2.5, 1.5)]:
            f = np.exp(-((x - c) ** 2) / (2 * s**2))
            dev = max(dev, np.max(np.abs((pa - target) @ f)[rows]) / np.max(np.abs(f)))
        return dev

    def test_momentum_adjoint_on_smooth_vectors(self):
        assert self._momentum_adjoint_action(400) <= 1e-3

    def test_momentum_adjoint_entrywise_is_not_small(self):
        # the stencil only matches p + 2i/x when acting on smooth vectors
        g = make_grid(10.0, 400)
        _, p = position_momentum_matrices(g)
        pa = adjoint_wrt(p, InnerProduct.weighted("1/x^2")).matrix
        D = pa - p.matrix - np.diag(2j / g.nodes)
        assert np.max(np.abs(D[1:-1])) > 1.0

    def test_momentum_adjoint_converges_quadratically(self):
        d1, d2 = self._momentum_adjoint_action(400), self._momentum_adjoint_action(800)
        assert d1 < 5e-3
        assert 3.2 <= d1 / d2 <= 4.8

    def test_shifted_momentum_is_self_adjoint(self):
        g = make_grid(10.0, 400)
        x = g.nodes
        q = assemble_grid(parse_expression("p + i/x"), g)
        qa = adjoint_wrt(q, InnerProduct.weighted("1/x^2")).matrix
        rows = (np.abs(x) >= 1) & (np.abs(x) <= 9)
        f = np.exp(-((x - 3) ** 2) / 2)
        dev = np.max(np.abs((qa - q.matrix) @ f)[rows])
        assert dev <= 1e-3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@pytest.mark.parametrize(
    "potential",
    ["x^2", "x^4", "x^2 + 0.5*x^4", "0.5*x^2 + 0.1*x^3 + 0.2*x^4", "ipow(x, 1)*x^2", "x^4 - x^2"],
)
def test_grid_and_basis_agree(potential):
    e = parse_expression(f"p^2 + {potential}")
    g = make_grid(12.0, 600)
    sg = lowest_resolved(eig_dense(assemble_grid(e, g).matrix), g, 3)
    b = BasisSpec(80, 1.0, 160)
    sb = lowest_resolved(eig_dense(assemble_basis(e, b).matrix), b, 3)
    np.testing.assert_allclose(sg.eigenvalues, sb.eigenvalues, rtol=1e-3)


def test_resolved_filter_removes_pinned_modes(paper400):
    s = paper400.spectrum
    keep = resolved_modes(s, paper400.grid)
    assert len(keep) < len(s)
    assert np.all(s.eigenvalues.real[keep] > -1)
    assert np.min(s.eigenvalues.real) < -1000
