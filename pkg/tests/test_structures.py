"""Structure layer: generated families against a scipy oracle, taming
diagnostics against countable constructions, coframes against the flat
closed form, and the type decomposition's partition of unity."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cyframe import forms
from cyframe.grid import GridSpec, sup_norm, trig_field
from cyframe.structures import (
    AlmostComplexStructure,
    HermitianMetric,
    TwoForm,
    build_acs,
    build_unitary_coframe,
    check_taming,
    classify,
    fundamental_form,
    metric_from_taming,
    nijenhuis_frame_block,
    nijenhuis_real,
    pq_project,
    standard_complex_structure,
    standard_symplectic_form,
)

GRID = GridSpec(n=2, N=16)
GRID1 = GridSpec(n=1, N=16)

# generator mode tables used across the module; entries are
# (row, col, wavevector, amplitude, cos|sin)
MODES4 = (
    (0, 1, (1, 0, 0, 0), 1.0, "cos"),
    (1, 2, (0, 1, 0, 0), 0.7, "sin"),
    (2, 3, (0, 0, 1, 0), 0.5, "cos"),
    (0, 3, (0, 1, 1, 0), 0.4, "sin"),
)
MODES2 = (
    (0, 0, (1, 0), 1.0, "cos"),
    (0, 1, (0, 1), 0.6, "sin"),
)


@pytest.fixture(scope="module")
def j_symplectic():
    return build_acs(GRID, "symplectic", 0.3, MODES4)


@pytest.fixture(scope="module")
def j_generic():
    return build_acs(GRID, "generic", 0.1, MODES4)


class TestStandardStructures:
    def test_j0_frozen_entries(self):
        acs = standard_complex_structure(GRID)
        J = acs.J[..., 0, 0, 0, 0]
        want = np.zeros((4, 4))
        want[0, 1] = want[2, 3] = -1.0
        want[1, 0] = want[3, 2] = 1.0
        assert np.array_equal(J, want)

    def test_j0_rotates_first_to_second_axis(self):
        acs = standard_complex_structure(GRID1)
        e1 = np.zeros((2,) + GRID1.shape)
        e1[0] = 1.0
        je1 = acs.apply(e1)
        assert np.array_equal(je1[1], np.ones(GRID1.shape))
        assert np.array_equal(je1[0], np.zeros(GRID1.shape))

    def test_omega0_frozen_entries_and_closed(self):
        om = standard_symplectic_form(GRID)
        assert om.omega[0, 1, 0, 0, 0, 0] == 1.0
        assert om.omega[2, 3, 0, 0, 0, 0] == 1.0
        assert om.closedness_defect() == 0.0

    def test_flat_pair_is_compatible_with_unit_metric(self):
        om = standard_symplectic_form(GRID)
        acs = standard_complex_structure(GRID)
        rep = check_taming(om, acs)
        assert rep.tamed and rep.compatible
        assert abs(rep.min_eigenvalue - 1.0) < 1e-14
        assert rep.invariance_residual < 1e-14
        assert rep.failing_points == 0
        g = metric_from_taming(om, acs)
        eye = np.eye(4).reshape(4, 4, 1, 1, 1, 1)
        assert sup_norm(g.g - eye) < 1e-14


def _generator_oracle(grid, family, eps, modes):
    # independent reassembly of the documented generator formula
    d = grid.dim
    H = np.zeros((d, d) + grid.shape)
    for (i, j, kvec, amp, kind) in modes:
        wave = trig_field(grid, [(kvec, amp, kind)])
        H[i, j] += wave
        if family == "symplectic" and i != j:
            H[j, i] += wave
    if family == "symplectic":
        om0 = np.zeros((d, d))
        for k in range(grid.n):
            om0[2 * k, 2 * k + 1] = 1.0
            om0[2 * k + 1, 2 * k] = -1.0
        H = np.einsum("ab,bc...->ac...", np.linalg.inv(om0), H)
    return eps * H


class TestGeneratedFamilies:
    @pytest.mark.parametrize("family,eps", [("symplectic", 0.3),
                                            ("generic", 0.1)])
    def test_matches_scipy_exponential_pointwise(self, family, eps):
        acs = build_acs(GRID, family, eps, MODES4)
        H = _generator_oracle(GRID, family, eps, MODES4)
        J0 = np.zeros((4, 4))
        J0[0, 1] = J0[2, 3] = -1.0
        J0[1, 0] = J0[3, 2] = 1.0
        rng = np.random.default_rng(1)
        for _ in range(6):
            idx = tuple(rng.integers(0, GRID.N, size=4))
            Hp = H[(slice(None), slice(None)) + idx]
            E = scipy.linalg.expm(Hp)
            want = E @ J0 @ np.linalg.inv(E)
            got = acs.J[(slice(None), slice(None)) + idx]
            assert np.abs(got - want).max() < 1e-13

    def test_symplectic_family_keeps_omega0_compatible(self, j_symplectic):
        om = standard_symplectic_form(GRID)
        rep = check_taming(om, j_symplectic)
        assert rep.tamed and rep.compatible
        assert rep.invariance_residual < 1e-13
        assert rep.min_eigenvalue > 0.3

    def test_generic_family_tames_without_compatibility(self, j_generic):
        om = standard_symplectic_form(GRID)
        rep = check_taming(om, j_generic)
        assert rep.tamed and not rep.compatible
        assert rep.invariance_residual > 1e-3
        assert rep.min_eigenvalue > 0.5

    def test_family_and_epsilon_zero_reduce_to_flat(self):
        acs = build_acs(GRID, "generic", 0.0, MODES4)
        flat = standard_complex_structure(GRID)
        assert sup_norm(acs.J - flat.J) < 1e-15

    def test_rejects_unknown_family_and_bad_entry(self):
        with pytest.raises(ValueError):
            build_acs(GRID, "conformal", 0.1, MODES4)
        with pytest.raises(ValueError):
            build_acs(GRID, "generic", 0.1, [(0, 7, (1, 0, 0, 0), 1.0, "cos")])


class TestTamingDiagnostics:
    def test_failing_point_count_matches_direct_count(self):
        # conformally scaled flat form: taming fails exactly where the
        # factor is non-positive
        factor = 1.0 + 2.0 * trig_field(GRID1, [((1, 0), 1.0, "cos")])
        om0 = standard_symplectic_form(GRID1)
        om = TwoForm(GRID1, om0.omega * factor)
        acs = standard_complex_structure(GRID1)
        rep = check_taming(om, acs)
        assert not rep.tamed
        assert rep.failing_points == int(np.count_nonzero(factor <= 0.0))
        assert abs(rep.min_eigenvalue - factor.min()) < 1e-14

    def test_metric_constructor_rejects_non_taming_pair(self):
        factor = 1.0 + 2.0 * trig_field(GRID1, [((1, 0), 1.0, "cos")])
        om0 = standard_symplectic_form(GRID1)
        om = TwoForm(GRID1, om0.omega * factor)
        acs = standard_complex_structure(GRID1)
        with pytest.raises(ValueError, match="not positive"):
            metric_from_taming(om, acs)

    def test_induced_metric_is_j_invariant_even_for_taming_only(
            self, j_generic):
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, j_generic)
        pulled = forms.pullback_two_form(g.g, j_generic.J)
        assert sup_norm(pulled - g.g) < 1e-13

    def test_fundamental_form_roundtrip_on_compatible_pair(
            self, j_symplectic):
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, j_symplectic)
        om_f = fundamental_form(g, j_symplectic)
        assert sup_norm(om_f.omega - om.omega) < 1e-13

    def test_fundamental_form_differs_for_taming_only_pair(self, j_generic):
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, j_generic)
        om_f = fundamental_form(g, j_generic)
        assert sup_norm(om_f.omega - om.omega) > 1e-3


class TestUnitaryCoframe:
    def test_flat_closed_form(self):
        om = standard_symplectic_form(GRID)
        acs = standard_complex_structure(GRID)
        cof = build_unitary_coframe(metric_from_taming(om, acs), acs)
        assert cof.pivots == (0, 2)
        s = 1.0 / np.sqrt(2.0)
        want0 = np.zeros((4,) + GRID.shape, dtype=complex)
        want0[0] = s
        want0[1] = 1j * s
        want1 = np.zeros((4,) + GRID.shape, dtype=complex)
        want1[2] = s
        want1[3] = 1j * s
        assert sup_norm(cof.P[0] - want0) < 1e-15
        assert sup_norm(cof.P[1] - want1) < 1e-15
        assert abs(cof.condition - 1.0) < 1e-12

    @pytest.mark.parametrize("fixture", ["j_symplectic", "j_generic"])
    def test_frame_identities(self, fixture, request):
        acs = request.getfixturevalue(fixture)
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, acs)
        cof = build_unitary_coframe(g, acs)
        ginv = g.inverse()
        eye = np.eye(2).reshape(2, 2, 1, 1, 1, 1)
        unit = np.einsum("ia...,ab...,jb...->ij...", cof.P, ginv,
                         np.conj(cof.P))
        assert sup_norm(unit - eye) < 1e-12
        pj = np.einsum("ib...,ba...->ia...", cof.P, acs.J)
        assert sup_norm(pj - 1j * cof.P) < 1e-12
        recon = 2.0 * np.real(np.einsum("ia...,ib...->ab...",
                                        np.conj(cof.P), cof.P))
        assert sup_norm(recon - g.g) < 1e-12
        dual = np.einsum("ia...,ja...->ij...", cof.P, cof.Q)
        assert sup_norm(dual - eye) < 1e-12
        # (1,0) frame vectors carry J-eigenvalue +i
        qj = np.einsum("ab...,ib...->ia...", acs.J, cof.Q)
        assert sup_norm(qj - 1j * cof.Q) < 1e-11

    def test_condition_abort(self, j_symplectic):
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, j_symplectic)
        with pytest.raises(ValueError, match="condition"):
            build_unitary_coframe(g, j_symplectic, max_condition=1.0 + 1e-9)


class TestTypeProjection:
    def _coframe(self, acs):
        om = standard_symplectic_form(GRID)
        return build_unitary_coframe(metric_from_taming(om, acs), acs)

    def test_partition_of_unity_two_form(self, j_generic):
        cof = self._coframe(j_generic)
        rng = np.random.default_rng(2)
        gamma = rng.standard_normal((4, 4) + GRID.shape)
        gamma = gamma - np.swapaxes(gamma, 0, 1)
        total = sum(pq_project(gamma, cof, p, 2 - p) for p in range(3))
        assert sup_norm(total - gamma) < 1e-12

    def test_partition_of_unity_three_form(self, j_symplectic):
        cof = self._coframe(j_symplectic)
        rng = np.random.default_rng(3)
        raw = rng.standard_normal((4, 4, 4) + GRID.shape)
        gamma = np.zeros_like(raw)
        # antisymmetrize over the three slots
        for sign, perm in [(1, (0, 1, 2)), (-1, (0, 2, 1)), (-1, (1, 0, 2)),
                           (1, (1, 2, 0)), (1, (2, 0, 1)), (-1, (2, 1, 0))]:
            gamma += sign * np.transpose(raw, perm + (3, 4, 5, 6))
        gamma /= 6.0
        total = sum(pq_project(gamma, cof, p, 3 - p) for p in range(4))
        assert sup_norm(total - gamma) < 1e-12

    def test_idempotence(self, j_generic):
        cof = self._coframe(j_generic)
        rng = np.random.default_rng(4)
        gamma = rng.standard_normal((4, 4) + GRID.shape)
        gamma = gamma - np.swapaxes(gamma, 0, 1)
        once = pq_project(gamma, cof, 1, 1)
        twice = pq_project(once, cof, 1, 1)
        assert sup_norm(twice - once) < 1e-12
        assert sup_norm(pq_project(once, cof, 2, 0)) < 1e-12

    def test_flat_omega0_is_pure_1_1(self):
        acs = standard_complex_structure(GRID)
        cof = self._coframe(acs)
        om = standard_symplectic_form(GRID).omega
        assert sup_norm(pq_project(om, cof, 1, 1) - om) < 1e-14
        assert sup_norm(pq_project(om, cof, 2, 0)) < 1e-14
        assert sup_norm(pq_project(om, cof, 0, 2)) < 1e-14


class TestNijenhuis:
    def test_flat_structure_is_integrable(self):
        acs = standard_complex_structure(GRID)
        assert sup_norm(nijenhuis_real(acs)) == 0.0

    def test_constant_conjugation_stays_integrable(self):
        # a constant change of frame cannot create non-integrability
        E = scipy.linalg.expm(np.array([[0.0, 0.3, 0.1, 0.0],
                                        [-0.2, 0.0, 0.0, 0.1],
                                        [0.0, 0.1, 0.0, 0.4],
                                        [0.1, 0.0, -0.3, 0.0]]))
        J0 = np.zeros((4, 4))
        J0[0, 1] = J0[2, 3] = -1.0
        J0[1, 0] = J0[3, 2] = 1.0
        Jc = E @ J0 @ np.linalg.inv(E)
        J = np.broadcast_to(Jc.reshape(4, 4, 1, 1, 1, 1),
                            (4, 4) + GRID.shape).copy()
        acs = AlmostComplexStructure(GRID, J)
        assert sup_norm(nijenhuis_real(acs)) < 1e-12

    def test_families_are_non_integrable(self, j_symplectic, j_generic):
        assert sup_norm(nijenhuis_real(j_symplectic)) > 1e-2
        assert sup_norm(nijenhuis_real(j_generic)) > 1e-3

    def test_tensor_symmetries(self, j_symplectic):
        nj = nijenhuis_real(j_symplectic)
        assert sup_norm(nj + np.swapaxes(nj, 1, 2)) < 1e-12
        # N(JX, Y) = -J N(X, Y) needs the product rule on J^2 = -id, which
        # sampled spectral derivatives satisfy only to aliasing level
        J = j_symplectic.J
        lhs = np.einsum("ea...,ceb...->cab...", J, nj)
        rhs = -np.einsum("ce...,eab...->cab...", J, nj)
        assert sup_norm(lhs - rhs) < 1e-7

    def test_frame_block_antisymmetry(self, j_generic):
        om = standard_symplectic_form(GRID)
        g = metric_from_taming(om, j_generic)
        cof = build_unitary_coframe(g, j_generic)
        blk = nijenhuis_frame_block(j_generic, cof)
        assert sup_norm(blk + np.swapaxes(blk, 1, 2)) < 1e-12
        assert sup_norm(blk) > 1e-4


class TestClassification:
    def test_flat_is_kahler(self):
        om = standard_symplectic_form(GRID)
        acs = standard_complex_structure(GRID)
        rep = classify(om, acs)
        assert rep.label == "kahler"
        assert rep.nijenhuis < 1e-12 and rep.d_omega < 1e-12

    def test_symplectic_family_is_almost_kahler(self, j_symplectic):
        om = standard_symplectic_form(GRID)
        rep = classify(om, j_symplectic)
        assert rep.label == "almost_kahler"
        assert rep.nijenhuis > 1e-2
        assert rep.d_omega < 1e-12

    def test_generic_family_is_general(self, j_generic):
        om = standard_symplectic_form(GRID)
        rep = classify(om, j_generic)
        assert rep.label == "general"
        assert rep.d_omega_mixed > 1e-4


class TestValidation:
    def test_two_form_rejects_symmetric_part(self):
        bad = np.zeros((2, 2) + GRID1.shape)
        bad[0, 0] = 1.0
        with pytest.raises(ValueError, match="antisymmetric"):
            TwoForm(GRID1, bad)

    def test_acs_rejects_non_square_root(self):
        J = np.zeros((2, 2) + GRID1.shape)
        J[0, 1] = -1.0
        J[1, 0] = 0.5
        with pytest.raises(ValueError, match="J"):
            AlmostComplexStructure(GRID1, J)

    def test_metric_rejects_indefinite(self):
        g = np.zeros((2, 2) + GRID1.shape)
        g[0, 0] = 1.0
        g[1, 1] = -1.0
        with pytest.raises(ValueError, match="positive"):
            HermitianMetric(GRID1, g)


@settings(max_examples=25, deadline=None)
@given(
    eps=st.floats(0.02, 0.35),
    family=st.sampled_from(["symplectic", "generic"]),
    entries=st.lists(
        st.tuples(st.integers(0, 1), st.integers(0, 1),
                  st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                  st.floats(-1.0, 1.0), st.sampled_from(["cos", "sin"])),
        min_size=1, max_size=3),
)
def test_property_family_structures_are_coherent(eps, family, entries):
    """Any generated structure squares to -id, keeps the induced metric
    symmetric and J-invariant, and carries a unitary coframe."""
    grid = GridSpec(n=1, N=8)
    acs = build_acs(grid, family, eps, entries)
    jj = np.einsum("ac...,cb...->ab...", acs.J, acs.J)
    eye = np.eye(2).reshape(2, 2, 1, 1)
    assert sup_norm(jj + eye) < 1e-12
    om = standard_symplectic_form(grid)
    rep = check_taming(om, acs)
    if rep.tamed:
        g = metric_from_taming(om, acs)
        assert sup_norm(g.g - np.swapaxes(g.g, 0, 1)) < 1e-13
        pulled = forms.pullback_two_form(g.g, acs.J)
        assert sup_norm(pulled - g.g) < 1e-12
        cof = build_unitary_coframe(g, acs)
        unit = np.einsum("ia...,ab...,jb...->ij...", cof.P, g.inverse(),
                         np.conj(cof.P))
        assert sup_norm(unit - np.ones((1, 1, 1, 1))) < 1e-11
