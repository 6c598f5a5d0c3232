"""Tests for Fock, coherent and cat states and the logical basis."""

import math

import numpy as np
import pytest

from catgate.errors import NormalizationError, ParameterError, TruncationError
from catgate.hilbert import SpaceSpec
from catgate.states import (
    CatSpec,
    LogicalAngles,
    Parity,
    cat_state,
    cat_tail_mass,
    coherent_state,
    density_from_pure,
    fock_state,
    ideal_output,
    logical_basis,
    logical_basis_cavities,
    logical_coefficients,
    logical_input,
    purity,
)


class TestFockAndCoherent:
    """Tests for Fock and coherent states."""

    def test_fock_state(self):
        """Test |n> is a unit vector at index n."""
        state = fock_state(2, 5)
        assert state[2] == 1.0
        assert np.linalg.norm(state) == 1.0

    def test_fock_state_out_of_range(self):
        """Test |n> beyond the truncation is rejected."""
        with pytest.raises(TruncationError):
            fock_state(5, 5)

    def test_coherent_state_poisson_weights(self):
        """Test |<n|alpha>|^2 follows the Poisson distribution."""
        alpha = 0.8
        state = coherent_state(alpha, 25)
        for n in range(6):
            expected = math.exp(-(alpha**2)) * alpha ** (2 * n) / math.factorial(n)
            assert abs(state[n]) ** 2 == pytest.approx(expected, rel=1e-12)
        assert np.linalg.norm(state) == pytest.approx(1.0, abs=1e-12)

    def test_coherent_state_zero_is_vacuum(self):
        """Test |0> for alpha = 0."""
        assert np.array_equal(coherent_state(0.0, 4), fock_state(0, 4))


class TestCatState:
    """Tests for even and odd cat states."""

    @pytest.mark.parametrize("parity", [Parity.EVEN, Parity.ODD])
    def test_parity_support(self, parity):
        """Test cat states vanish exactly on Fock states of the other parity."""
        state = cat_state(CatSpec(0.5, parity, 10))
        wrong = np.arange(10) % 2 != parity.offset
        assert np.all(state[wrong] == 0)
        assert np.all(state[~wrong].real > 0)
        assert np.linalg.norm(state) == pytest.approx(1.0, abs=1e-12)

    def test_matches_coherent_superposition(self):
        """Test the even cat equals normalized |alpha> + |-alpha>."""
        expected = coherent_state(0.5, 20) + coherent_state(-0.5, 20)
        expected /= np.linalg.norm(expected)
        assert np.allclose(cat_state(CatSpec(0.5, Parity.EVEN, 20)), expected, atol=1e-12)

    def test_even_and_odd_are_orthogonal(self):
        """Test <cat|~cat> = 0."""
        even = cat_state(CatSpec(1.0, Parity.EVEN, 16))
        odd = cat_state(CatSpec(1.0, Parity.ODD, 16))
        assert abs(np.vdot(even, odd)) < 1e-12

    def test_truncation_too_small(self):
        """Test a truncation that drops more than 1e-12 of the norm is refused."""
        assert cat_tail_mass(CatSpec(0.5, Parity.EVEN, 8)) > 1e-12
        with pytest.raises(TruncationError, match="truncation 8"):
            cat_state(CatSpec(0.5, Parity.EVEN, 8))

    def test_truncation_sufficient(self):
        """Test N2 = 10 holds both parities at alpha = 0.5."""
        for parity in Parity:
            assert cat_tail_mass(CatSpec(0.5, parity, 10)) < 1e-12

    def test_zero_amplitude_even_cat_is_vacuum(self):
        """Test the even cat at alpha = 0 is |0>."""
        assert np.allclose(cat_state(CatSpec(0.0, Parity.EVEN, 4)), fock_state(0, 4))

    def test_invalid_specs(self):
        """Test negative amplitudes and the odd vacuum cat are rejected."""
        with pytest.raises(ParameterError):
            CatSpec(-0.1)
        with pytest.raises(ParameterError):
            CatSpec(0.0, Parity.ODD)


class TestLogicalBasis:
    """Tests for the logical basis and gate inputs."""

    @pytest.fixture
    def space(self):
        return SpaceSpec(2, 10)

    def test_orthonormal(self, space):
        """Test the four logical kets are orthonormal."""
        basis = logical_basis(0.5, space)
        assert basis.shape == (space.dim, 4)
        assert np.allclose(basis.conj().T @ basis, np.eye(4), atol=1e-12)

    def test_qutrit_in_ground_state(self, space):
        """Test logical kets live in the |g> block."""
        basis = logical_basis(0.5, space)
        assert np.all(basis[space.cavity_dim :] == 0)
        cavities = logical_basis_cavities(0.5, space.n1_trunc, space.n2_trunc)
        assert np.array_equal(basis[: space.cavity_dim], cavities)

    def test_coefficients(self):
        """Test input and ideal CP output amplitudes."""
        angles = LogicalAngles(math.pi / 3, math.pi / 6)
        c = logical_coefficients(angles)
        ideal = logical_coefficients(angles, ideal=True)
        assert np.linalg.norm(c) == pytest.approx(1.0)
        assert np.allclose(ideal[:3], c[:3])
        assert ideal[3] == pytest.approx(-c[3])

    def test_input_and_ideal_output(self, space):
        """Test the ideal output differs from the input only on |1,~cat>."""
        angles = LogicalAngles(1.0, 2.0)
        psi_in = logical_input(angles, 0.5, space)
        psi_out = ideal_output(angles, 0.5, space)
        basis = logical_basis(0.5, space)
        assert np.linalg.norm(psi_in) == pytest.approx(1.0)
        delta = basis.conj().T @ (psi_out - psi_in)
        assert np.allclose(delta[:3], 0)
        assert delta[3] == pytest.approx(-2 * math.sin(1.0) * math.sin(2.0))

    def test_angles_range(self):
        """Test angles must lie in [0, 2 pi)."""
        with pytest.raises(ParameterError):
            LogicalAngles(2 * math.pi, 0.0)
        with pytest.raises(ParameterError):
            LogicalAngles(0.0, -0.1)


class TestDensity:
    """Tests for density matrices built from kets."""

    def test_pure_state_projector(self):
        """Test |psi><psi| is Hermitian with unit trace and purity."""
        psi = np.array([1.0, 1j]) / math.sqrt(2.0)
        rho = density_from_pure(psi)
        assert np.allclose(rho, rho.conj().T)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert purity(rho) == pytest.approx(1.0)

    def test_unnormalized_state(self):
        """Test unnormalized kets are rejected."""
        with pytest.raises(NormalizationError):
            density_from_pure(np.array([1.0, 1.0]))

    def test_mixed_state_purity(self):
        """Test purity of the maximally mixed qubit."""
        assert purity(np.eye(2) / 2) == pytest.approx(0.5)
