import numpy as np
import pytest

from nhqm.errors import InvalidArgument
from nhqm.evolution import spectral_propagate, two_mode_l2_norms, two_mode_state
from nhqm.hilbert import InnerProduct
from nhqm.numerics import BasisSpec, eig_dense
from nhqm.operators import resolved_modes

TIMES = np.linspace(0.0, 10.0, 201)


@pytest.fixture(scope="module")
def resolved(paper400):
    s = paper400.spectrum
    return s.subset(resolved_modes(s, paper400.grid))


@pytest.fixture(scope="module")
def paper_run(resolved):
    psi0, modes = two_mode_state(resolved)
    run = spectral_propagate(resolved, psi0, TIMES, InnerProduct.eigenbasis_delta(resolved))
    return run, modes


class TestHermitian:
    def test_l2_norm_constant(self, rng):
        A = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
        s = eig_dense(A + A.conj().T)
        psi0 = rng.normal(size=30) + 1j * rng.normal(size=30)
        run = spectral_propagate(s, psi0, TIMES, InnerProduct.flat(), BasisSpec(30))
        assert run.relative_range() <= 1e-10
        assert run.drift() <= 1e-10
        assert not run.complex_spectrum

    def test_oscillator_on_grid(self, oscillator400):
        s = oscillator400.lowest(20)
        psi0, modes = two_mode_state(s)
        assert modes == (0, 1)
        run = spectral_propagate(s, psi0, TIMES, InnerProduct.flat(), oscillator400.grid)
        assert run.relative_range() <= 1e-10


class TestPaperExample:
    def test_modes_overlap_in_l2(self, resolved, paper_run):
        _, (a, b) = paper_run
        V = np.asarray(resolved.right)
        assert a == 0
        assert abs(np.vdot(V[:, a], V[:, b])) > 1e-6

    def test_h_norm_conserved(self, paper_run):
        run, _ = paper_run
        assert not run.complex_spectrum
        assert run.drift() <= 1e-8

    def test_l2_norm_oscillates(self, paper_run):
        run, _ = paper_run
        assert run.relative_range() >= 1e-3

    def test_l2_norm_matches_closed_form(self, resolved, paper_run):
        run, modes = paper_run
        c = run.coefficients[list(modes)]
        ref = two_mode_l2_norms(resolved, modes, c, TIMES)
        np.testing.assert_allclose(run.l2_norms, ref, rtol=1e-10)

    def test_h_norm_matches_weighted_product(self, paper400, resolved, paper_run):
        # the eigenbasis product and the weight 1/x^2 agree up to normalization
        run, _ = paper_run
        w = spectral_propagate(resolved, run.states[0], TIMES, InnerProduct.weighted("1/x^2"), paper400.grid)
        assert w.drift() <= 1e-2

    def test_opposite_parity_pair_keeps_l2_norm(self, resolved):
        # psi_0 and psi_1 are L2-orthogonal by parity, so their mix shows no oscillation
        V = np.asarray(resolved.right)
        psi0 = V[:, 0] + V[:, 1]
        run = spectral_propagate(resolved, psi0, TIMES, InnerProduct.eigenbasis_delta(resolved))
        assert run.relative_range() <= 1e-8

    def test_no_discarded_part(self, paper_run):
        run, _ = paper_run
        assert run.discarded_fraction <= 1e-10


class TestProperties:
    def test_initial_state_reproduced(self, resolved, paper_run):
        run, _ = paper_run
        psi0, _ = two_mode_state(resolved)
        np.testing.assert_allclose(run.states[0], psi0, atol=1e-10)

    @pytest.mark.parametrize("t1, t2", [(1.0, 2.5), (3.3, 0.7), (0.0, 4.0)])
    def test_time_composition(self, resolved, t1, t2):
        psi0, _ = two_mode_state(resolved)
        ip = InnerProduct.eigenbasis_delta(resolved)
        mid = spectral_propagate(resolved, psi0, [t1], ip).states[0]
        two_step = spectral_propagate(resolved, mid, [t2], ip).states[0]
        direct = spectral_propagate(resolved, psi0, [t1 + t2], ip).states[0]
        assert np.linalg.norm(two_step - direct) <= 1e-10 * np.linalg.norm(direct)

    def test_state_outside_span_reported(self, rng):
        A = rng.normal(size=(6, 6))
        s = eig_dense(A).subset([0, 1, 2])
        psi0 = rng.normal(size=6)
        run = spectral_propagate(s, psi0, [0.0], InnerProduct.flat(), BasisSpec(6))
        assert run.discarded_fraction > 0.01

    def test_complex_spectrum_flagged(self):
        s = eig_dense(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        run = spectral_propagate(s, np.array([1.0, 0.0]), [0.0, 1.0], InnerProduct.flat(), BasisSpec(2))
        assert run.complex_spectrum

    def test_coefficient_floor(self):
        s = eig_dense(np.diag([1.0, 2.0]))
        run = spectral_propagate(s, np.array([1.0, 1e-12]), [0.0], InnerProduct.flat(), BasisSpec(2),
                                 coefficient_floor=1e-10)
        assert run.coefficients[1] == 0
        assert run.discarded_fraction == pytest.approx(1e-12)


class TestErrors:
    def test_empty_times(self, resolved):
        with pytest.raises(InvalidArgument):
            spectral_propagate(resolved, two_mode_state(resolved)[0], [], InnerProduct.eigenbasis_delta(resolved))

    def test_size_mismatch(self, resolved):
        with pytest.raises(InvalidArgument):
            spectral_propagate(resolved, np.ones(3), TIMES, InnerProduct.eigenbasis_delta(resolved))

    def test_zero_state(self, resolved):
        with pytest.raises(InvalidArgument):
            spectral_propagate(resolved, np.zeros(resolved.right.shape[0]), TIMES,
                               InnerProduct.eigenbasis_delta(resolved))

    def test_weighted_needs_grid(self, resolved):
        with pytest.raises(InvalidArgument):
            spectral_propagate(resolved, two_mode_state(resolved)[0], TIMES, InnerProduct.weighted("1/x^2"))

    def test_two_modes_needed(self):
        s = eig_dense(np.diag([1.0, 2.0])).subset([0])
        with pytest.raises(InvalidArgument):
            two_mode_state(s)
