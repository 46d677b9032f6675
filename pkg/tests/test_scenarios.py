"""Scenario registry: frozen hashes and diagnostics for every shipped
config, the text format's round trips, and its rejection paths."""

from dataclasses import replace

import numpy as np
import pytest

from cyframe import scenarios as scen
from cyframe.grid import sup_norm

ALL_NAMES = (
    "almost_kahler_eps05",
    "almost_kahler_eps10",
    "estimate_family",
    "flat",
    "kahler_pair",
    "manufactured_solve",
    "mixed_pair",
    "quasi_kahler",
    "taming_only",
)

# scenarios whose structure equations have nonzero residuals at N=16
LIVE = ("almost_kahler_eps05", "almost_kahler_eps10", "mixed_pair",
        "quasi_kahler", "taming_only")

# frozen diagnostics at the declared N=16 grids: values regenerate from
# the registry alone, so any drift in the construction chain shows up
FROZEN_CLASS = {
    "almost_kahler_eps05": ("almost_kahler", 5.082047e-02),
    "almost_kahler_eps10": ("almost_kahler", 1.076650e-01),
    "estimate_family": ("kahler", 0.0),
    "flat": ("kahler", 0.0),
    "kahler_pair": ("kahler", 0.0),
    "manufactured_solve": ("kahler", 0.0),
    "mixed_pair": ("general", 1.076650e-01),
    "quasi_kahler": ("almost_kahler", 1.298392e-01),
    "taming_only": ("general", 4.622401e-02),
}
FROZEN_TORSION = {
    "almost_kahler_eps05": (2.489190e-15, 9.635127e-03),
    "almost_kahler_eps10": (4.683033e-13, 1.957846e-02),
    "estimate_family": (0.0, 0.0),
    "flat": (0.0, 0.0),
    "kahler_pair": (0.0, 0.0),
    "manufactured_solve": (0.0, 0.0),
    "mixed_pair": (9.016764e-04, 1.985322e-02),
    "quasi_kahler": (1.554193e-15, 2.417086e-02),
    "taming_only": (1.111808e-02, 1.017702e-02),
}


class TestRegistry:
    def test_names(self):
        assert tuple(sorted(scen.REGISTRY)) == ALL_NAMES

    def test_unknown_name_lists_registry(self):
        with pytest.raises(scen.ScenarioError, match="registry:.*flat"):
            scen.get_scenario("nope")

    def test_common_shape(self):
        for sc in scen.REGISTRY.values():
            assert sc.n == 2
            assert sc.grid_points == 16
            assert sc.suites

    def test_fingerprints_frozen(self):
        # one pinned in full; every member's prefix
        assert scen.fingerprint(scen.get_scenario("flat")) == (
            "79995b022427f2129b7ebbbf6a273e6c"
            "2bd62184bd962ef6d049668391da3807")
        prefixes = {name: scen.fingerprint(sc)[:16]
                    for name, sc in scen.REGISTRY.items()}
        assert prefixes == {
            "almost_kahler_eps05": "95505376c3ccd94d",
            "almost_kahler_eps10": "719cc874e3f74fe6",
            "estimate_family": "c5c76210bbb2b273",
            "flat": "79995b022427f212",
            "kahler_pair": "4e7ebb886c5834fb",
            "manufactured_solve": "d82ea78679191307",
            "mixed_pair": "6284758ccc499e0e",
            "quasi_kahler": "0553aec064bf6f5f",
            "taming_only": "1cbf768cd6f19a90",
        }

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_canonical_text_round_trip(self, name):
        sc = scen.get_scenario(name)
        again = scen.parse_scenario(scen.canonical_text(sc))
        assert again == sc
        assert scen.fingerprint(again) == scen.fingerprint(sc)

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_shipped_file_matches_registry(self, name):
        path = scen.registry_file(name)
        sc = scen.load_scenario(path, check_geometry=False)
        assert sc == scen.get_scenario(name)

    def test_grid_override(self):
        sc = scen.get_scenario("flat")
        assert sc.grid().N == 16
        assert sc.grid(32).N == 32
        with pytest.raises(ValueError):
            sc.grid(12)


class TestFrozenDiagnostics:
    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_classification(self, name):
        rep = scen.classify_scenario(scen.get_scenario(name))
        label, nj = FROZEN_CLASS[name]
        assert rep.label == label
        if nj == 0.0:
            assert rep.nijenhuis == 0.0
            assert rep.d_omega == 0.0
        else:
            assert rep.nijenhuis == pytest.approx(nj, rel=1e-6)

    def test_general_class_values(self):
        rep = scen.classify_scenario(scen.get_scenario("taming_only"))
        assert rep.d_omega == pytest.approx(2.464800e-02, rel=1e-6)
        assert rep.d_omega_mixed == pytest.approx(3.215891e-02, rel=1e-6)
        rep = scen.classify_scenario(scen.get_scenario("mixed_pair"))
        assert rep.d_omega == pytest.approx(2.595436e-03, rel=1e-6)

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_torsion_sups(self, name, bundle_at):
        b = bundle_at(name)
        supT, supN = FROZEN_TORSION[name]
        gotT = sup_norm(b.conn.torsion)
        gotN = sup_norm(b.conn.anti_torsion)
        if supT == 0.0:
            assert gotT == 0.0 and gotN == 0.0
        else:
            assert gotT == pytest.approx(supT, rel=1e-6)
            assert gotN == pytest.approx(supN, rel=1e-6)

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_structure_residuals_certified(self, name, structure_report_at):
        st = structure_report_at(name)
        if name in LIVE:
            assert 0.0 < st.first_normalized < 1e-8
            assert 0.0 < st.second_normalized < 1e-8
        else:
            assert st.first_normalized == 0.0
            assert st.second_normalized == 0.0
        assert st.raw_residual < 1e-13


class TestTamingGate:
    def test_failure_message_frozen(self):
        sc = replace(scen.get_scenario("taming_only"), epsilon=2.5)
        with pytest.raises(scen.ScenarioError) as err:
            scen.scenario_metric(sc, sc.grid())
        assert str(err.value) == (
            "scenario 'taming_only': taming fails at 6520 of 65536 grid "
            "points (min eigenvalue -1.345e+00, epsilon 2.5)")

    def test_generic_family_tames_up_to_moderate_epsilon(self):
        sc = replace(scen.get_scenario("taming_only"), epsilon=1.5)
        scen.scenario_metric(sc, sc.grid())  # no raise

    def test_recheck_can_be_skipped_but_positivity_cannot(self):
        sc = replace(scen.get_scenario("taming_only"), epsilon=2.5)
        with pytest.raises(ValueError):
            scen.scenario_metric(sc, sc.grid(), check=False)


class TestParseErrors:
    def test_duplicate_key(self):
        with pytest.raises(scen.ScenarioError, match=r"<string>:3: .*duplicate"):
            scen.parse_scenario("name a\ngrid 16\ngrid 32\n")

    def test_unknown_key(self):
        with pytest.raises(scen.ScenarioError, match=r"cfg:2: unknown key"):
            scen.parse_scenario("name a\nresolution 16\n", origin="cfg")

    def test_unknown_table(self):
        with pytest.raises(scen.ScenarioError, match=r":2: unknown table"):
            scen.parse_scenario("name a\n[foo]\n")

    def test_duplicate_table(self):
        text = "name a\n[j_modes]\n\n[j_modes]\n"
        with pytest.raises(scen.ScenarioError, match=r":4: duplicate table"):
            scen.parse_scenario(text)

    def test_bad_row_width(self):
        text = "name a\nn 2\n[j_modes]\n0 1 1 0 0 0.5 cos\n"
        with pytest.raises(scen.ScenarioError, match=r":4: j_modes row"):
            scen.parse_scenario(text)

    def test_bad_wave_kind(self):
        text = "name a\nn 2\n[j_modes]\n0 1 1 0 0 0 0.5 tan\n"
        with pytest.raises(scen.ScenarioError, match=r":4: .*not cos/sin"):
            scen.parse_scenario(text)

    def test_non_numeric_amplitude(self):
        text = "name a\nn 2\n[j_modes]\n0 1 1 0 0 0 big cos\n"
        with pytest.raises(scen.ScenarioError, match=r":4: .*non-numeric"):
            scen.parse_scenario(text)

    def test_missing_name(self):
        with pytest.raises(scen.ScenarioError, match="missing required key"):
            scen.parse_scenario("n 2\ngrid 16\n")

    def test_unterminated_section(self):
        with pytest.raises(scen.ScenarioError, match=r":1: unterminated"):
            scen.parse_scenario("[j_modes\n")

    def test_comments_and_blank_lines_ignored(self):
        sc = scen.parse_scenario(
            "# header\nname a  # trailing\n\nn 2\n")
        assert sc.name == "a"
        assert sc.n == 2


class TestValidation:
    def base(self, **kw):
        sc = scen.parse_scenario(
            "name probe\nn 2\ngrid 16\nfamily symplectic\nepsilon 0.05\n"
            "[j_modes]\n0 1 1 0 0 0 0.4 cos\n")
        return replace(sc, **kw) if kw else sc

    def test_valid_passes(self):
        scen.validate_scenario(self.base(), check_geometry=False)

    def test_unknown_family(self):
        with pytest.raises(scen.ScenarioError, match="unknown family"):
            scen.validate_scenario(self.base(family="spherical"),
                                   check_geometry=False)

    def test_flat_rejects_generator(self):
        with pytest.raises(scen.ScenarioError, match="no generator"):
            scen.validate_scenario(self.base(family="flat"),
                                   check_geometry=False)

    def test_generated_family_needs_generator(self):
        with pytest.raises(scen.ScenarioError, match="needs a generator"):
            scen.validate_scenario(self.base(j_modes=()),
                                   check_geometry=False)

    def test_negative_epsilon(self):
        with pytest.raises(scen.ScenarioError, match="negative epsilon"):
            scen.validate_scenario(self.base(epsilon=-0.1),
                                   check_geometry=False)

    def test_nyquist_guard(self):
        bad = ((0, 1, (8, 0, 0, 0), 0.4, "cos"),)
        with pytest.raises(scen.ScenarioError, match="aliasing index 8"):
            scen.validate_scenario(self.base(j_modes=bad),
                                   check_geometry=False)

    def test_wave_vector_length(self):
        bad = ((0, 1, (1, 0), 0.4, "cos"),)
        with pytest.raises(scen.ScenarioError, match="needs 4 entries"):
            scen.validate_scenario(self.base(j_modes=bad),
                                   check_geometry=False)

    def test_potential_tilde_needs_flat_structure(self):
        with pytest.raises(scen.ScenarioError, match="needs the flat"):
            scen.validate_scenario(self.base(tilde="potential"),
                                   check_geometry=False)

    def test_potential_tilde_needs_modes(self):
        sc = self.base(family="flat", epsilon=0.0, j_modes=(),
                       tilde="potential")
        with pytest.raises(scen.ScenarioError, match="without a potential"):
            scen.validate_scenario(sc, check_geometry=False)

    def test_pair_suite_needs_second_metric(self):
        with pytest.raises(scen.ScenarioError, match="needs a second metric"):
            scen.validate_scenario(self.base(suites=("pair",)),
                                   check_geometry=False)

    def test_unknown_suite(self):
        with pytest.raises(scen.ScenarioError, match="unknown suite"):
            scen.validate_scenario(self.base(suites=("identities", "zap")),
                                   check_geometry=False)

    def test_bad_grid(self):
        with pytest.raises(scen.ScenarioError, match="power of two"):
            scen.validate_scenario(self.base(grid_points=12),
                                   check_geometry=False)

    def test_geometry_check_runs_taming(self):
        sc = replace(scen.get_scenario("taming_only"), epsilon=2.5)
        with pytest.raises(scen.ScenarioError, match="taming fails"):
            scen.validate_scenario(sc)


class TestManufacturedFields:
    def test_potential_and_density_fields(self):
        sc = scen.get_scenario("manufactured_solve")
        grid = sc.grid()
        pot = scen.scenario_potential(sc, grid)
        assert pot.shape == grid.shape
        assert sup_norm(pot) > 0.0
        assert np.allclose(scen.scenario_potential(sc, grid, scale=2.0),
                           2.0 * pot)
        fam = scen.get_scenario("estimate_family")
        dens = scen.scenario_density(fam, fam.grid())
        assert sup_norm(dens) > 0.0

    def test_fields_default_to_zero(self):
        sc = scen.get_scenario("flat")
        grid = sc.grid()
        assert sup_norm(scen.scenario_potential(sc, grid)) == 0.0
        assert sup_norm(scen.scenario_density(sc, grid)) == 0.0
