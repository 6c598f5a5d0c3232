"""Tests for the Hamiltonian hierarchy, dressed shifts and the closed-form gate."""

import math

import numpy as np
import pytest
import scipy.linalg

from catgate.errors import ParameterError
from catgate.hamiltonians import (
    CouplingEnvelope,
    DressedShifts,
    FrameCorrection,
    HamiltonianModel,
    HamiltonianTerm,
    PhaseProfile,
    TimeDependentHamiltonian,
    build_delta_h,
    build_h_eff_reduced,
    build_h_eff_stage1,
    build_h_eff_stage2,
    build_h_full,
    build_h_interaction,
    build_h_lab,
    build_model_hamiltonian,
    closed_form_gate_unitary,
    conditional_part,
    diagonal_levels,
    diagonal_shifts,
    dressed_levels,
    dressed_shifts,
    effective_two_mode_hamiltonian,
    frame_correction,
    ramp_nodes,
)
from catgate.hilbert import SpaceSpec, basis_index, excitation_number
from catgate.models import SystemParams, angular, derive, published_parameters


@pytest.fixture
def space():
    return SpaceSpec(3, 4)


@pytest.fixture
def params(space):
    return published_parameters(space=space)


def weak_params(space: SpaceSpec) -> SystemParams:
    return SystemParams.from_detunings(5.0, 7.5, 1.5, 1.65, 0.01, 0.01, space=space)


class TestTimeDependentHamiltonian:
    """Tests for the static-plus-oscillating representation."""

    def test_at_matches_explicit_sum(self):
        """Test H(t) = static + op e^{i w t} + h.c."""
        op = np.array([[0, 1], [0, 0]], dtype=complex)
        h = TimeDependentHamiltonian(
            static=np.diag([1.0, -1.0]).astype(complex), terms=(HamiltonianTerm(op, 2.0),)
        )
        t = 0.37
        value = op * np.exp(2j * t)
        expected = np.diag([1.0, -1.0]) + value + value.conj().T
        assert np.allclose(h.at(t), expected)
        assert h.max_phase_rate == 2.0
        assert not h.is_static

    def test_apply_matches_at(self, params):
        """Test apply(t, v) equals H(t) @ v."""
        h = build_h_full(params)
        rng = np.random.default_rng(3)
        vectors = rng.normal(size=(h.dim, 4)) + 1j * rng.normal(size=(h.dim, 4))
        assert np.allclose(h.apply(1.3, vectors), h.at(1.3) @ vectors)

    def test_term_shape_checked(self):
        """Test a term of the wrong shape is rejected."""
        with pytest.raises(ParameterError):
            TimeDependentHamiltonian(
                static=np.zeros((2, 2), dtype=complex),
                terms=(HamiltonianTerm(np.zeros((3, 3), dtype=complex), 1.0),),
            )

    def test_addition_concatenates_terms(self, params):
        """Test H_I + delta H has all four couplings."""
        total = build_h_interaction(params) + build_delta_h(params)
        assert len(total.terms) == 4
        assert np.allclose(total.at(0.8), build_h_full(params).at(0.8))


class TestInteractionHamiltonians:
    """Tests for H_I, delta H and their lab-frame origin."""

    @pytest.mark.parametrize(
        "model", [HamiltonianModel.FULL, HamiltonianModel.INTERACTION, HamiltonianModel.STAGE1]
    )
    def test_hermitian_at_random_times(self, params, model):
        """Test every evaluated Hamiltonian is Hermitian."""
        h = build_model_hamiltonian(model, params)
        rng = np.random.default_rng(11)
        for t in rng.uniform(0.0, 400.0, size=50):
            assert h.is_hermitian_at(float(t))

    @pytest.mark.parametrize(
        "model", [HamiltonianModel.FULL, HamiltonianModel.INTERACTION, HamiltonianModel.STAGE1]
    )
    def test_excitation_number_conserved(self, params, space, model):
        """Test [H(t), N] = 0 for the couplings and the exchange term."""
        h = build_model_hamiltonian(model, params)
        n = excitation_number(space)
        for t in (0.0, 0.7, 123.4):
            ht = h.at(t)
            assert np.max(np.abs(ht @ n - n @ ht)) < 1e-12

    def test_phase_rates(self, params):
        """Test the fastest rate is the largest detuning in rad/ns."""
        assert build_h_interaction(params).max_phase_rate == pytest.approx(angular(1.65))
        assert build_h_full(params).max_phase_rate == pytest.approx(angular(6.65))

    def test_interaction_picture_of_lab_hamiltonian(self, params):
        """Test e^{i H0 t} V e^{-i H0 t} = H_I(t) + delta H(t)."""
        h_lab = build_h_lab(params)
        h0 = np.diag(np.diag(h_lab))
        coupling = h_lab - h0
        t = 2.3
        rotate = np.exp(1j * np.real(np.diag(h0)) * t)
        rotated = rotate[:, None] * coupling * rotate.conj()[None, :]
        assert np.allclose(rotated, build_h_full(params).at(t), atol=1e-12)


class TestEffectiveHamiltonians:
    """Tests for the stage-1, stage-2 and reduced Hamiltonians."""

    def test_stage2_is_diagonal(self, params):
        """Test stage 2 has no off-diagonal entries."""
        h = build_h_eff_stage2(params)
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 0

    def test_stage1_static_part_is_diagonal(self, params):
        """Test stage 1 is Stark shifts plus one oscillating exchange."""
        h = build_h_eff_stage1(params)
        assert np.count_nonzero(h.static - np.diag(np.diag(h.static))) == 0
        assert len(h.terms) == 1
        assert h.max_phase_rate == pytest.approx(angular(params.big_delta))

    def test_reduced_is_ground_block(self, params, space):
        """Test the reduced Hamiltonian lives on |g> and matches -eta n1 - chi n1 n2."""
        derived = derive(params)
        reduced = build_h_eff_reduced(params)
        block = space.cavity_dim
        assert np.count_nonzero(reduced[block:, :]) == 0
        two_mode = effective_two_mode_hamiltonian(derived, space.n1_trunc, space.n2_trunc)
        assert np.allclose(reduced[:block, :block], two_mode, atol=1e-12)

    def test_closed_form_matches_exponential(self, params, space):
        """Test the diagonal gate unitary equals expm(-i H_eff t)."""
        derived = derive(params)
        h = effective_two_mode_hamiltonian(derived, space.n1_trunc, space.n2_trunc)
        t = derived.t_gate / 3
        expected = scipy.linalg.expm(-1j * h * t)
        assert np.allclose(closed_form_gate_unitary(derived, space, t), expected, atol=1e-12)

    def test_closed_form_at_gate_time(self, params, space):
        """Test the gate imprints (-1)^(n1 n2) at t = pi/chi."""
        derived = derive(params)
        diagonal = np.diag(closed_form_gate_unitary(derived, space, derived.t_gate))
        n1 = np.repeat(np.arange(space.n1_trunc), space.n2_trunc)
        n2 = np.tile(np.arange(space.n2_trunc), space.n1_trunc)
        assert np.allclose(diagonal, (-1.0) ** (n1 * n2), atol=1e-9)

    def test_closed_form_rejects_negative_time(self, params, space):
        """Test evolution time must be non-negative."""
        with pytest.raises(ParameterError):
            closed_form_gate_unitary(derive(params), space, -1.0)

    def test_constant_models(self, params):
        """Test stage-2 and reduced models are static."""
        for model in (HamiltonianModel.STAGE2, HamiltonianModel.REDUCED):
            h = build_model_hamiltonian(model, params)
            assert h.is_static
            assert h.max_phase_rate == 0.0


class TestShifts:
    """Tests for dressed and diagonal energy shifts."""

    def test_from_levels(self):
        """Test single-mode and cross shifts from four levels."""
        shifts = DressedShifts.from_levels(0.5, 1.0, 2.0, 3.0)
        assert (shifts.mode1, shifts.mode2, shifts.cross) == (0.5, 1.5, 0.5)

    def test_conditional_gate_time(self):
        """Test the conditional phase reaches pi at pi/|cross|."""
        assert DressedShifts(0.0, 0.0, -0.5).conditional_gate_time == pytest.approx(2 * math.pi)
        with pytest.raises(ParameterError):
            DressedShifts(0.0, 0.0, 0.0).conditional_gate_time

    def test_stage2_shifts(self, params, space):
        """Test stage 2 gives mode1 = -eta, mode2 = 0 and cross = -chi."""
        derived = derive(params)
        shifts = diagonal_shifts(build_h_eff_stage2(params), space)
        assert shifts.mode1 == pytest.approx(-angular(derived.eta))
        assert shifts.mode2 == pytest.approx(0.0, abs=1e-15)
        assert shifts.cross == pytest.approx(-angular(derived.chi))
        assert shifts.conditional_gate_time == pytest.approx(derived.t_gate)

    def test_weak_coupling_stark_shifts(self):
        """Test exact shifts approach -g1^2/delta1 and -g2~^2/delta2~ at weak coupling."""
        space = SpaceSpec(3, 3)
        params = weak_params(space)
        wanted = dressed_shifts(params, space, include_unwanted=False)
        assert wanted.mode1 == pytest.approx(-angular(0.01**2 / 1.5), rel=1e-2)
        assert wanted.mode2 == pytest.approx(0.0, abs=1e-10)
        full = dressed_shifts(params, space)
        assert full.mode2 == pytest.approx(-angular(0.01**2 / params.delta2_tilde), rel=1e-2)

    def test_dressed_levels_match_shifts(self, params, space):
        """Test the level table carries the logical shifts and an unshifted vacuum."""
        levels = dressed_levels(params, space)
        assert levels.shape == (space.n1_trunc, space.n2_trunc)
        assert levels[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert DressedShifts.from_table(levels) == dressed_shifts(params, space)

    def test_dressed_levels_vanish_without_coupling(self, params, space):
        """Test a zero coupling scale leaves every bare level in place."""
        assert np.allclose(dressed_levels(params, space, scale=0.0), 0.0, atol=1e-9)

    def test_diagonal_levels(self, params, space):
        """Test the stage-2 table is -eta n1 - chi n1 n2 on |g>."""
        derived = derive(params)
        levels = diagonal_levels(build_h_eff_stage2(params), space)
        n1 = np.arange(space.n1_trunc)[:, None]
        n2 = np.arange(space.n2_trunc)[None, :]
        expected = -angular(derived.eta) * n1 - angular(derived.chi) * n1 * n2
        assert np.allclose(levels, expected, atol=1e-12)


class TestFrameCorrection:
    """Tests for the post-gate cavity phase corrections."""

    def test_linear(self, space):
        """Test the linear correction imprints exp(i (s1 n1 + s2 n2) t) on every level."""
        n1 = np.arange(space.n1_trunc)[:, None]
        n2 = np.arange(space.n2_trunc)[None, :]
        phases = 0.7 + 2.0 * (0.3 * n1 - 0.2 * n2) + 0.05 * n1 * n2
        correction = frame_correction(phases, space, FrameCorrection.LINEAR)
        expected = np.exp(1j * (0.3 - 0.4) * 2.0)
        for level in range(3):
            index = basis_index(space, level, 1, 2)
            assert correction[index, index] == pytest.approx(expected)
        assert np.allclose(correction, np.diag(np.diag(correction)))

    def test_dressed_leaves_conditional_phase(self, space):
        """Test the dressed correction leaves exp(-i (phi00 + n1 n2 phi_x)) only."""
        rng = np.random.default_rng(3)
        phases = rng.uniform(-5.0, 5.0, size=(space.n1_trunc, space.n2_trunc))
        correction = np.diag(frame_correction(phases, space, FrameCorrection.DRESSED))
        corrected = np.exp(-1j * phases).ravel() * correction[: space.cavity_dim]
        n1 = np.arange(space.n1_trunc)[:, None]
        n2 = np.arange(space.n2_trunc)[None, :]
        cross = conditional_part(phases)
        expected = np.exp(-1j * (phases[0, 0] + n1 * n2 * cross)).ravel()
        assert np.allclose(corrected, expected, atol=1e-12)
        assert np.allclose(np.abs(correction), 1.0)

    def test_none_is_identity(self, space):
        """Test no correction leaves the state alone."""
        phases = np.ones((space.n1_trunc, space.n2_trunc))
        assert np.allclose(frame_correction(phases, space, FrameCorrection.NONE), np.eye(space.dim))

    def test_table_shape_checked(self, space):
        """Test a phase table of the wrong shape is rejected."""
        with pytest.raises(ParameterError):
            frame_correction(np.zeros((2, 2)), space)


class TestCouplingEnvelope:
    """Tests for the sin^2 coupling ramp."""

    def test_shape(self):
        """Test the envelope rises, holds and falls symmetrically."""
        envelope = CouplingEnvelope(10.0, 50.0)
        assert envelope(0.0) == 0.0
        assert envelope(5.0) == pytest.approx(0.5)
        assert envelope(10.0) == 1.0
        assert envelope(25.0) == 1.0
        assert envelope(45.0) == pytest.approx(0.5)
        assert envelope(50.0) == 0.0

    def test_sharp_switch(self):
        """Test a zero rise is a constant coupling."""
        assert CouplingEnvelope(0.0, 10.0)(0.0) == 1.0

    @pytest.mark.parametrize("rise, duration", [(-1.0, 10.0), (6.0, 10.0)])
    def test_invalid(self, rise, duration):
        """Test negative rises and gates shorter than both ramps are rejected."""
        with pytest.raises(ParameterError):
            CouplingEnvelope(rise, duration)

    def test_ramp_nodes(self):
        """Test the ramp quadrature integrates sin^2 and sin^8 across one ramp."""
        scales, weights = ramp_nodes()
        assert weights.sum() == pytest.approx(1.0)
        assert np.dot(weights, scales) == pytest.approx(0.5)
        assert np.dot(weights, scales**4) == pytest.approx(35.0 / 128.0, rel=1e-9)

    def test_envelope_scales_terms(self, params, space):
        """Test the envelope multiplies the couplings and nothing else."""
        bare = build_h_full(params, space)
        ramped = bare.with_envelope(CouplingEnvelope(10.0, 50.0))
        assert np.allclose(ramped.at(0.0), 0.0)
        assert np.allclose(ramped.at(5.0), 0.5 * bare.at(5.0))
        assert np.allclose(ramped.at(20.0), bare.at(20.0))
        stage1 = build_h_eff_stage1(params, space).with_envelope(CouplingEnvelope(10.0, 50.0))
        assert np.allclose(stage1.at(0.0), stage1.static)


class TestPhaseProfile:
    """Tests for phases accumulated across the ramps and the plateau."""

    @pytest.fixture
    def base(self):
        return np.array([[0.0, 0.2], [-0.3, -0.2]])

    def test_constant(self, base):
        """Test a profile without ramps grows linearly in time."""
        profile = PhaseProfile.constant(base)
        assert np.allclose(profile.at(4.0), 4.0 * base)
        assert profile.shifts == DressedShifts.from_table(base)

    def test_ramped_accumulation(self, base):
        """Test quadratic levels pick up 3/8 of the plateau rate across each ramp."""
        profile = PhaseProfile.ramped(lambda s: s**2 * base, 10.0)
        assert np.allclose(profile.ramps, 20.0 * 3.0 / 8.0 * base)
        assert np.allclose(profile.at(50.0), profile.ramps + 30.0 * base)
        with pytest.raises(ParameterError):
            profile.at(15.0)

    def test_conditional_gate_time_with_ramps(self, base):
        """Test a fourth-power cross shift needs pi/|x| plus the ramps' shortfall."""
        profile = PhaseProfile.ramped(lambda s: s**4 * base, 10.0)
        cross = abs(conditional_part(base))
        expected = math.pi / cross + 20.0 * (1 - 35.0 / 128.0)
        assert profile.conditional_gate_time() == pytest.approx(expected, rel=1e-9)

    def test_ramps_exceeding_pi(self):
        """Test ramps that alone overshoot the conditional phase are rejected."""
        base = np.array([[0.0, 0.0], [0.0, -1.0]])
        profile = PhaseProfile.ramped(lambda s: s**4 * base, 10.0)
        with pytest.raises(ParameterError):
            profile.conditional_gate_time()

    def test_no_cross_shift(self):
        """Test a vanishing cross shift has no gate time."""
        with pytest.raises(ParameterError):
            PhaseProfile.constant(np.zeros((2, 2))).conditional_gate_time()
