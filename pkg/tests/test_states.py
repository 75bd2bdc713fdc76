import numpy as np
import pytest
from scipy.stats import poisson

from kerrlattice.fock import LatticeSpec
from kerrlattice.oracles import beamsplitter_output_state, kerr_evolution_exact
from kerrlattice.states import (
    AmplitudeCutoffError,
    ReferenceKind,
    coherent_branch_superposition,
    coherent_state,
    ecs_reference,
    generalized_coherent,
    kerr_cat_reference,
    normal_mode_coherent,
)


class TestCoherentState:
    def test_zero_amplitude_is_vacuum(self):
        s = coherent_state(0.0, 8)
        expected = np.zeros(9)
        expected[0] = 1.0
        assert np.allclose(s.amplitudes, expected)

    def test_low_fock_weight_at_alpha_sq_10(self):
        # sum_{n<=4} |<n|alpha>|^2 <= 0.03 is what makes |alpha|^2 >= 10 enough
        s = coherent_state(np.sqrt(10), 20)
        low = np.sum(np.abs(s.amplitudes[:5]) ** 2)
        assert low <= 0.03
        # against the independent Poisson cdf
        assert low == pytest.approx(poisson.cdf(4, 10) / poisson.cdf(20, 10), rel=1e-6)

    def test_mean_occupation(self):
        # oracle: truncated Poisson mean, summed directly
        lam = 10.0
        pmf = poisson.pmf(np.arange(21), lam)
        expected = np.sum(np.arange(21) * pmf) / np.sum(pmf)
        s = coherent_state(np.sqrt(lam), 20)
        mean_n = np.sum(np.arange(21) * np.abs(s.amplitudes) ** 2)
        assert mean_n == pytest.approx(expected, rel=1e-9)
        assert mean_n == pytest.approx(lam, rel=5e-3)

    def test_amplitude_guard(self):
        with pytest.raises(AmplitudeCutoffError):
            coherent_state(4.0, 20)  # 16 > 0.6*20


class TestKerrCat:
    def test_vacuum_limit(self):
        s = kerr_cat_reference(0.0, 6)
        assert abs(s.amplitudes[0]) == pytest.approx(1.0)

    def test_normalized(self):
        s = kerr_cat_reference(np.sqrt(10), 20)
        assert s.norm() == pytest.approx(1.0, abs=1e-9)

    def test_matches_kerr_pi_pulse(self):
        cat = kerr_cat_reference(2.0, 16)
        evolved = kerr_evolution_exact(2.0, np.pi, 16)
        assert abs(cat.overlap(evolved)) >= 1.0 - 1e-8


class TestEcsReference:
    def test_wecs_vacuum_amplitude(self):
        lat = LatticeSpec(2, 4)
        s = ecs_reference(ReferenceKind.W_ECS, 0.0, lat)
        assert abs(s.amplitudes[0]) == pytest.approx(1.0)

    def test_w_state(self):
        lat = LatticeSpec(3, 2)
        s = ecs_reference(ReferenceKind.W_STATE, 0.0, lat, n_quanta=1)
        expected = np.zeros(27, dtype=complex)
        for occ in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
            expected[lat.basis_index(occ)] = 1 / np.sqrt(3)
        assert np.allclose(s.amplitudes, expected)

    def test_branch_overlaps(self):
        # single-site blocks: <branch_l | branch_m> = e^{-|alpha|^2} for l != m
        # (tolerance set by the truncated tail, ~1.6e-3 relative at lam=10)
        for lam in (1.0, 4.0, 10.0):
            alpha = np.sqrt(lam)
            lat = LatticeSpec(2, 20)
            b1 = coherent_branch_superposition([(1.0, (alpha, 0.0))], lat)
            b2 = coherent_branch_superposition([(1.0, (0.0, alpha))], lat)
            assert abs(b1.overlap(b2)) == pytest.approx(np.exp(-lam), rel=3e-3)

    def test_ghz_requires_single_block(self):
        lat = LatticeSpec(2, 12)
        with pytest.raises(ValueError):
            ecs_reference(ReferenceKind.GHZ_ECS, 1.0, lat, blocks=[[1], [2]])
        s = ecs_reference(ReferenceKind.GHZ_ECS, 2.0, lat, blocks=[[1, 2]])
        assert s.norm() == pytest.approx(1.0, abs=1e-9)

    def test_invalid_partition(self):
        lat = LatticeSpec(3, 4)
        with pytest.raises(ValueError):
            ecs_reference(ReferenceKind.W_ECS, 1.0, lat, blocks=[[1], [3]])
        with pytest.raises(ValueError):
            ecs_reference(ReferenceKind.W_ECS, 1.0, lat, blocks=[[1, 3], [2]])

    def test_block_normal_mode_amplitude(self):
        # one two-site block: branch is |a/sqrt(2)> x |a/sqrt(2)>
        lat = LatticeSpec(2, 12)
        s = ecs_reference(ReferenceKind.W_ECS, 2.0, lat, blocks=[[1, 2]])
        m = normal_mode_coherent(2.0, lat)
        assert abs(s.overlap(m)) == pytest.approx(1.0, abs=1e-9)

    def test_matches_beamsplitter_target(self):
        # the two-site entangled cat from the analytic Kerr+beamsplitter
        # construction equals a W-ECS with per-branch phases exp(+-i pi/4)
        # and per-site amplitude rotations, exactly.  A plain W-ECS gets
        # close (the branch phase can be traded against a small amplitude
        # rotation at cost e^{-lam(1-cos d)}) but not all the way to 1.
        alpha_loc = np.sqrt(5)
        lam = 2 * alpha_loc**2  # branch |amplitude|^2 = 10
        lat = LatticeSpec(2, 20)
        cat_in = [
            (np.exp(-1j * np.pi / 4) / np.sqrt(2), (1j * alpha_loc, -alpha_loc)),
            (np.exp(1j * np.pi / 4) / np.sqrt(2), (-1j * alpha_loc, -alpha_loc)),
        ]
        target = beamsplitter_output_state(cat_in, np.pi / 4, lat)
        branch_amp = np.sqrt(lam)
        # actual output branches: (e^{+i pi/4}, (-i A, 0)) and (e^{-i pi/4}, (0, -A))
        ref = ecs_reference(
            ReferenceKind.W_ECS,
            branch_amp,
            lat,
            branch_phases=(np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)),
        )
        d = lat.local_dim
        n1 = np.repeat(np.arange(d), d)
        n2 = np.tile(np.arange(d), d)
        # site rotations aligning amplitudes: A -> -iA on site 1, A -> -A on site 2
        rot = np.exp(1j * (-np.pi / 2) * n1) * np.exp(1j * np.pi * n2)
        rotated = ref.amplitudes * rot
        assert abs(np.vdot(target.amplitudes, rotated)) >= 1.0 - 1e-9

        plain = ecs_reference(ReferenceKind.W_ECS, branch_amp, lat)
        best = 0.0
        for p1 in np.linspace(-np.pi / 2 - 0.3, -np.pi / 2 + 0.3, 31):
            for p2 in np.linspace(np.pi - 0.3, np.pi + 0.3, 31):
                r = np.exp(1j * p1 * n1) * np.exp(1j * p2 * n2)
                best = max(best, abs(np.vdot(target.amplitudes, plain.amplitudes * r)))
        assert 0.95 <= best < 1.0 - 1e-3


class TestNormalModeCoherent:
    def test_per_site_occupation(self):
        lat = LatticeSpec(2, 20)
        s = normal_mode_coherent(np.sqrt(10), lat)
        d = lat.local_dim
        probs = np.abs(s.amplitudes.reshape(d, d)) ** 2
        n1 = np.sum(np.arange(d)[:, None] * probs)
        n2 = np.sum(np.arange(d)[None, :] * probs)
        assert n1 == pytest.approx(5.0, rel=5e-3)
        assert n2 == pytest.approx(5.0, rel=5e-3)
        assert n1 + n2 == pytest.approx(10.0, rel=5e-3)

    def test_site_amplitude_guard(self):
        with pytest.raises(AmplitudeCutoffError):
            normal_mode_coherent(np.sqrt(30), LatticeSpec(2, 20))


class TestGeneralizedCoherent:
    def test_zero_phases_is_coherent(self):
        s = generalized_coherent(1.3, np.zeros(13), 12)
        c = coherent_state(1.3, 12)
        assert abs(s.overlap(c)) == pytest.approx(1.0, abs=1e-12)

    def test_linear_phase_is_rotation(self):
        theta = 0.7
        phases = theta * np.arange(13)
        s = generalized_coherent(1.3, phases, 12)
        c = coherent_state(1.3 * np.exp(1j * theta), 12)
        assert abs(s.overlap(c)) == pytest.approx(1.0, abs=1e-12)

    def test_kerr_phases_give_cat(self):
        n = np.arange(17)
        phases = np.pi * n * (n - 1) / 2.0
        s = generalized_coherent(2.0, phases, 16)
        cat = kerr_cat_reference(2.0, 16)
        assert abs(s.overlap(cat)) >= 1.0 - 1e-10

    def test_full_revival_at_two_pi(self):
        n = np.arange(21)
        phases = 2 * np.pi * n * (n - 1) / 2.0
        s = generalized_coherent(np.sqrt(10), phases, 20)
        c = coherent_state(np.sqrt(10), 20)
        assert abs(s.overlap(c)) >= 1.0 - 1e-8

    def test_phase_length_checked(self):
        with pytest.raises(ValueError):
            generalized_coherent(1.0, np.zeros(5), 12)
