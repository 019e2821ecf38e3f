import numpy as np
import pytest

from skinpontus import classical
from skinpontus.errors import (
    DimensionError,
    ExceptionalPointError,
    NonUniqueSteadyStateError,
    PositivityError,
    UndefinedWeightError,
)
from skinpontus.model import ChainParams, build_liouvillian, site_state
from skinpontus.spectral import (
    SpectralData,
    biorthonormality_error,
    decompose,
    edge_weight,
    eigen_residuals,
    overlap_coefficients,
    reconstruct,
    stationary_state,
)

from conftest import random_density_matrix


@pytest.fixture(scope="module")
def skin_spectrum():
    p = ChainParams(L=11, J=1.0, eps=0.0, J_R=1.0, J_L=0.5)
    return p, decompose(build_liouvillian(p))


@pytest.fixture(scope="module")
def symmetric_spectrum():
    p = ChainParams(L=11, J=1.0, eps=0.0, J_R=1.0, J_L=1.0)
    return p, decompose(build_liouvillian(p))


class TestDecompose:
    def test_ordering(self, skin_spectrum):
        _, sd = skin_spectrum
        w = sd.eigenvalues
        assert w.shape == (121,)
        assert abs(w[0]) < 1e-12
        assert np.all(np.diff(w[1:].real) <= 1e-9)
        assert np.all(w.real <= 1e-12)

    def test_slowest_rate(self, skin_spectrum):
        _, sd = skin_spectrum
        assert sd.eigenvalues[1].real == pytest.approx(-0.21576, abs=1e-5)
        assert sd.gap == pytest.approx(0.21576, abs=1e-5)

    def test_biorthonormal_and_residuals(self, skin_spectrum):
        p, sd = skin_spectrum
        assert biorthonormality_error(sd) < 1e-8
        right, left = eigen_residuals(build_liouvillian(p), sd)
        assert right < 1e-10 and left < 1e-10

    def test_first_left_mode_is_identity(self, skin_spectrum):
        _, sd = skin_spectrum
        assert np.abs(sd.left_modes[0] - np.eye(11)).max() < 1e-10

    def test_gauge(self, skin_spectrum):
        _, sd = skin_spectrum
        assert np.trace(sd.right_modes[0]).real == pytest.approx(1.0, abs=1e-14)
        norms = np.linalg.norm(sd.right_modes[1:], axis=(1, 2))
        assert np.allclose(norms, 1.0, atol=1e-12)

    def test_tie_break_by_imaginary_part(self, symmetric_spectrum):
        _, sd = symmetric_spectrum
        w = sd.eigenvalues[1:]
        tol = 1e-9 * sd.norm
        for a, b in zip(w[:-1], w[1:]):
            if abs(a.real - b.real) <= tol:
                assert a.imag <= b.imag

    def test_exceptional_point_reported(self):
        p = ChainParams(L=2, J=0.0, eps=0.0, J_R=1.0, J_L=1.0)
        with pytest.raises(ExceptionalPointError):
            decompose(build_liouvillian(p))

    def test_degenerate_spectrum_allowed_on_request(self):
        p = ChainParams(L=2, J=0.0, eps=0.0, J_R=1.0, J_L=1.0)
        sd = decompose(build_liouvillian(p), allow_degenerate=True)
        assert sd.near_degenerate
        assert np.allclose(np.sort(sd.eigenvalues.real), [-2, -1, -1, 0], atol=1e-12)
        assert biorthonormality_error(sd) < 1e-10

    def test_non_unique_steady_state(self):
        # purely coherent dynamics conserves every energy-eigenstate population
        with pytest.raises(NonUniqueSteadyStateError):
            decompose(build_liouvillian(ChainParams(L=3, J=1.0, J_R=0.0, J_L=0.0)))

    def test_shape_mismatch(self):
        S = build_liouvillian(ChainParams(L=3))
        with pytest.raises(DimensionError):
            decompose(type(S)(S.matrix, 4))


class TestStationaryState:
    def test_symmetric_rates_give_maximally_mixed(self, symmetric_spectrum):
        _, sd = symmetric_spectrum
        assert np.abs(stationary_state(sd) - np.eye(11) / 11).max() < 1e-10

    def test_incoherent_limit_geometric_profile(self):
        p = ChainParams(L=7, J=0.0, eps=0.0, J_R=1.0, J_L=0.5)
        sd = decompose(build_liouvillian(p), allow_degenerate=True)
        prof = 2.0 ** np.arange(7)
        assert np.abs(stationary_state(sd) - np.diag(prof / prof.sum())).max() < 1e-10

    def test_skin_case_has_coherences(self, skin_spectrum):
        _, sd = skin_spectrum
        rho = stationary_state(sd)
        off = rho - np.diag(np.diag(rho))
        assert np.abs(off).max() > 1e-3
        assert np.diag(rho).real[-1] > np.diag(rho).real[0]

    def test_positivity_violation(self, skin_spectrum):
        _, sd = skin_spectrum
        bad = SpectralData(sd.eigenvalues, sd.right_modes, sd.left_modes,
                           np.diag([1.5] + [-0.05] * 10).astype(complex), sd.norm)
        with pytest.raises(PositivityError):
            stationary_state(bad)


class TestOverlaps:
    def test_first_coefficient_is_trace(self, skin_spectrum, rng):
        _, sd = skin_spectrum
        c = overlap_coefficients(sd, random_density_matrix(rng, 11))
        assert abs(c[0] - 1) < 1e-10

    def test_reconstruction(self, skin_spectrum, rng):
        _, sd = skin_spectrum
        X = rng.normal(size=(11, 11)) + 1j * rng.normal(size=(11, 11))
        assert np.abs(reconstruct(sd, overlap_coefficients(sd, X)) - X).max() < 1e-8

    def test_mirror_symmetry_of_slow_overlap(self, symmetric_spectrum):
        _, sd = symmetric_spectrum
        c1 = overlap_coefficients(sd, site_state(11, 1))
        cL = overlap_coefficients(sd, site_state(11, 11))
        assert abs(abs(c1[1]) - abs(cL[1])) < 1e-8

    def test_skin_suppresses_far_edge_overlap(self, skin_spectrum):
        _, sd = skin_spectrum
        c1 = overlap_coefficients(sd, site_state(11, 1))
        cL = overlap_coefficients(sd, site_state(11, 11))
        assert abs(c1[1]) > 3 * abs(cL[1])

    def test_incoherent_limit_matches_birth_death(self):
        p = ChainParams(L=6, J=0.0, eps=0.0, J_R=1.0, J_L=0.5)
        sd = decompose(build_liouvillian(p), allow_degenerate=True)
        modes = classical.biorthogonal_modes(classical.BirthDeathModel.from_chain(p))
        c1 = overlap_coefficients(sd, site_state(6, 1))
        cL = overlap_coefficients(sd, site_state(6, 6))
        q = int(np.argmin(np.abs(sd.eigenvalues - modes.eigenvalues[1])))
        quantum = abs(c1[q] / cL[q])
        assert quantum == pytest.approx(classical.edge_coefficient_ratio(modes, 2), rel=1e-8)
        assert quantum == pytest.approx(2.0 ** 3, rel=1e-8)

    def test_shape_checked(self, skin_spectrum):
        _, sd = skin_spectrum
        with pytest.raises(DimensionError):
            overlap_coefficients(sd, np.eye(3))


class TestEdgeWeight:
    def test_identity_split(self):
        assert edge_weight(np.eye(4), "left") == pytest.approx(0.5)
        assert edge_weight(np.eye(5), "left") == pytest.approx(0.6)
        assert edge_weight(np.eye(5), "right") == pytest.approx(0.4)

    def test_corner(self):
        M = np.zeros((4, 4))
        M[3, 3] = 2.0
        assert edge_weight(M, "right") == 1.0 and edge_weight(M, "left") == 0.0

    def test_undefined_and_invalid(self):
        with pytest.raises(UndefinedWeightError):
            edge_weight(np.zeros((3, 3)), "left")
        with pytest.raises(ValueError):
            edge_weight(np.eye(3), "middle")
        with pytest.raises(DimensionError):
            edge_weight(np.ones((2, 3)), "left")

    def test_skin_modes_on_opposite_edges(self, skin_spectrum):
        _, sd = skin_spectrum
        R2, L2 = sd.right_modes[1], sd.left_modes[1]
        assert edge_weight(L2, "left") > 0.9
        assert edge_weight(R2, "left") < 0.35
        assert edge_weight(R2, "right") - edge_weight(L2, "right") > 0.5

    def test_symmetric_modes_balanced(self, symmetric_spectrum):
        _, sd = symmetric_spectrum
        for M in (sd.right_modes[1], sd.left_modes[1]):
            assert abs(edge_weight(M, "left") - edge_weight(M, "right")) < 0.15
