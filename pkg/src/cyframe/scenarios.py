"""Frozen scenario registry and the plain-text scenario format.

A scenario pins everything a run depends on: the grid, the structure
family with its generator coefficient table, the taming form as the
standard symplectic form plus an exact perturbation ``d(alpha)``, an
optional second metric (induced compatible metric or manufactured
potential), density or potential coefficients for solves, the exponents
for the integral probes, and the suite selection.  All fields are
truncated Fourier tables with explicit integer mode vectors; there is no
expression language, so a scenario file canonicalizes to a unique text
form and a content fingerprint that is stable across platforms.

The registry below is frozen: tests and reports refer to members by name
so residuals stay comparable across versions.  The same members are
shipped as ``data/*.scn`` files in the documented text format, and
``load_scenario`` round-trips them to the registry values.

Format of a ``.scn`` file: one ``key value`` pair per line, then one
``[table]`` section per coefficient table with one mode per row.  ``#``
starts a comment.  Keys must precede tables and may not repeat.  Mode
rows hold, in order: any leading integer indices (matrix entry for the
generator table, component index for the one-form table), one integer
per axis for the wave vector, the amplitude, and ``cos`` or ``sin``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from cyframe import forms
from cyframe.grid import GridSpec, trig_field
from cyframe.identities import ConnectionBundle, build_bundle
from cyframe.structures import (
    AlmostComplexStructure,
    HermitianMetric,
    TwoForm,
    build_acs,
    check_taming,
    classify,
    metric_from_taming,
    standard_complex_structure,
    standard_symplectic_form,
)

FAMILIES = ("flat", "symplectic", "generic")
TILDE_KINDS = ("none", "induced", "potential")
SUITE_NAMES = ("identities", "pair", "solve", "estimates", "scan-r")

_WAVE_KINDS = ("cos", "sin")
_TABLE_KEYS = ("j_modes", "omega_modes", "potential_modes", "density_modes")


class ScenarioError(ValueError):
    """Rejected scenario configuration (parse or validation failure)."""


@dataclass(frozen=True)
class Scenario:
    """Complete, immutable description of one run configuration.

    Parameters
    ----------
    name : str
        Registry identifier, also the stem of the shipped file.
    n, grid_points : int
        Complex dimension and points per axis of the declared grid.
    family : {"flat", "symplectic", "generic"}
        Structure family; ``"flat"`` is the integrable reference structure
        and takes no generator table.
    epsilon : float
        Generator amplitude for the non-flat families.
    tilde : {"none", "induced", "potential"}
        Second metric for pair suites: ``"induced"`` takes the metric of
        the unperturbed base form (compatible, hence with vanishing
        symmetric torsion), ``"potential"`` builds it from
        ``potential_modes`` on the flat structure.
    j_modes : tuple of (i, j, kvec, amplitude, kind)
        Generator coefficient table.
    omega_modes : tuple of (component, kvec, amplitude, kind)
        One-form table for the exact perturbation of the taming form.
    potential_modes, density_modes : tuple of (kvec, amplitude, kind)
        Scalar tables: manufactured potential and solve density.
    family_scales : tuple of float
        Escalating amplitude multipliers for the estimate probes; each
        scale multiplies the density table.
    alphas : tuple of float
        Exponents for the integral probes.
    suites : tuple of str
        Subset of ``SUITE_NAMES`` this scenario is meant to run.
    """

    name: str
    description: str = ""
    n: int = 2
    grid_points: int = 16
    family: str = "flat"
    epsilon: float = 0.0
    tilde: str = "none"
    j_modes: tuple = ()
    omega_modes: tuple = ()
    potential_modes: tuple = ()
    density_modes: tuple = ()
    family_scales: tuple = ()
    alphas: tuple = (0.5, 1.0, 2.0)
    suites: tuple = ("identities",)

    def grid(self, grid_points: int = None) -> GridSpec:
        """Declared grid, or the same torus at an overridden resolution."""
        return GridSpec(n=self.n, N=self.grid_points if grid_points is None
                        else int(grid_points))


# ---------------------------------------------------------------------------
# geometry builders


def scenario_structure(sc: Scenario, grid: GridSpec) -> AlmostComplexStructure:
    """The scenario's almost-complex structure on ``grid``."""
    if sc.family == "flat":
        return standard_complex_structure(grid)
    return build_acs(grid, sc.family, sc.epsilon, sc.j_modes)


def scenario_taming_form(sc: Scenario, grid: GridSpec) -> TwoForm:
    """Base symplectic form plus the exact perturbation ``d(alpha)``."""
    om = standard_symplectic_form(grid).omega
    if sc.omega_modes:
        alpha = np.zeros((grid.dim,) + grid.shape)
        for (comp, kvec, amp, kind) in sc.omega_modes:
            alpha[int(comp)] += trig_field(grid, [(kvec, amp, kind)])
        om = om + forms.exterior_derivative(alpha, grid)
    return TwoForm(grid, om)


def scenario_metric(sc: Scenario, grid: GridSpec,
                    acs: AlmostComplexStructure = None,
                    check: bool = True) -> HermitianMetric:
    """Metric induced by the taming form; hard error when taming fails.

    ``check=False`` skips the explicit pointwise taming report (positivity
    is still enforced by the metric constructor), for refinement reruns of
    a scenario already validated at its declared grid.
    """
    if acs is None:
        acs = scenario_structure(sc, grid)
    form = scenario_taming_form(sc, grid)
    if check:
        report = check_taming(form, acs)
        if not report.tamed:
            raise ScenarioError(
                f"scenario {sc.name!r}: taming fails at "
                f"{report.failing_points} of {grid.N ** grid.dim} grid "
                f"points (min eigenvalue {report.min_eigenvalue:.3e}, "
                f"epsilon {sc.epsilon})")
    return metric_from_taming(form, acs)


def scenario_bundle(sc: Scenario, grid_points: int = None,
                    recheck_taming: bool = True) -> ConnectionBundle:
    """Coframe, connection and curvature of the scenario's primary metric."""
    grid = sc.grid(grid_points)
    acs = scenario_structure(sc, grid)
    return build_bundle(scenario_metric(sc, grid, acs, check=recheck_taming),
                        acs)


def scenario_potential(sc: Scenario, grid: GridSpec,
                       scale: float = 1.0) -> np.ndarray:
    """Manufactured potential field from the scenario table."""
    if not sc.potential_modes:
        return np.zeros(grid.shape)
    return scale * trig_field(grid, sc.potential_modes)


def scenario_density(sc: Scenario, grid: GridSpec,
                     scale: float = 1.0) -> np.ndarray:
    """Solve density field from the scenario table."""
    if not sc.density_modes:
        return np.zeros(grid.shape)
    return scale * trig_field(grid, sc.density_modes)


def tilde_metric(sc: Scenario, grid: GridSpec,
                 acs: AlmostComplexStructure = None) -> HermitianMetric:
    """Second metric of a pair scenario.

    ``"induced"`` pairs the structure with the unperturbed base form, so
    the result is compatible and its fundamental form is closed;
    ``"potential"`` adds the invariant part of the coordinate Hessian of
    the manufactured potential to the flat metric.
    """
    if sc.tilde == "none":
        raise ScenarioError(
            f"scenario {sc.name!r} declares no second metric")
    if acs is None:
        acs = scenario_structure(sc, grid)
    if sc.tilde == "induced":
        return metric_from_taming(standard_symplectic_form(grid), acs)
    from cyframe.solver import potential_metric

    return potential_metric(scenario_potential(sc, grid), acs)


# ---------------------------------------------------------------------------
# frozen registry

# Shared generator table: entries mix all four axes so no discrete symmetry
# accidentally cancels a torsion or curvature component.  Amplitudes are
# sized so the sampled exponentials are resolved at 16 points per axis
# (structure-equation truncation stays below 1e-8 normalized).
_GEN4 = (
    (0, 1, (1, 0, 0, 0), 0.54, "cos"),
    (0, 2, (0, 1, 0, 1), 0.36, "sin"),
    (1, 3, (0, 0, 1, 0), 0.48, "cos"),
    (2, 3, (1, 0, 0, 1), 0.3, "sin"),
    (0, 0, (0, 1, 1, 0), 0.42, "cos"),
)

# Independent table for the second compatible member.
_GEN4_ALT = (
    (0, 3, (0, 1, 0, 0), 0.64, "sin"),
    (1, 2, (1, 0, 1, 0), 0.56, "cos"),
    (0, 1, (0, 0, 0, 1), 0.48, "sin"),
    (2, 2, (1, 1, 0, 0), 0.4, "cos"),
)

# Exact one-form perturbation used by the mixed pair member; small enough
# to keep the perturbed form taming every registry structure.
_ALPHA4 = (
    (0, (0, 1, 0, 0), 0.05, "cos"),
    (2, (0, 0, 0, 1), 0.04, "sin"),
)

_POT4 = (
    ((1, 0, 0, 0), 0.2, "cos"),
    ((0, 1, 1, 0), 0.12, "sin"),
)

_DENS4 = (
    ((1, 0, 0, 0), 1.0, "cos"),
    ((0, 1, 1, 0), 0.5, "sin"),
)


def _freeze(sc: Scenario) -> Scenario:
    return replace(sc, j_modes=tuple(sc.j_modes),
                   omega_modes=tuple(sc.omega_modes),
                   potential_modes=tuple(sc.potential_modes),
                   density_modes=tuple(sc.density_modes),
                   family_scales=tuple(sc.family_scales),
                   alphas=tuple(sc.alphas), suites=tuple(sc.suites))


REGISTRY = {sc.name: _freeze(sc) for sc in (
    Scenario(
        name="flat",
        description="integrable reference structure, every field constant",
        tilde="induced",
        suites=SUITE_NAMES,
    ),
    Scenario(
        name="almost_kahler_eps05",
        description="compatible non-integrable structure, amplitude 0.05",
        family="symplectic",
        epsilon=0.05,
        j_modes=_GEN4,
    ),
    Scenario(
        name="almost_kahler_eps10",
        description="compatible non-integrable structure, amplitude 0.1",
        family="symplectic",
        epsilon=0.1,
        j_modes=_GEN4,
    ),
    Scenario(
        name="quasi_kahler",
        description="second compatible member on an independent generator "
                    "table (symmetric torsion vanishes; in complex "
                    "dimension two that already closes the fundamental "
                    "form)",
        family="symplectic",
        epsilon=0.08,
        j_modes=_GEN4_ALT,
    ),
    Scenario(
        name="taming_only",
        description="unconstrained generator: the base form tames but is "
                    "not invariant, both torsion components survive",
        family="generic",
        epsilon=0.1,
        j_modes=_GEN4,
        suites=("identities", "scan-r"),
    ),
    Scenario(
        name="kahler_pair",
        description="flat primary metric against a manufactured potential "
                    "metric on the same structure",
        tilde="potential",
        potential_modes=_POT4,
        suites=("pair",),
    ),
    Scenario(
        name="mixed_pair",
        description="taming-only primary metric (perturbed form) against "
                    "the induced compatible metric",
        family="symplectic",
        epsilon=0.1,
        j_modes=_GEN4,
        omega_modes=_ALPHA4,
        tilde="induced",
        suites=("pair", "scan-r"),
    ),
    Scenario(
        name="manufactured_solve",
        description="flat-structure solve with a known potential of "
                    "amplitude 0.2",
        tilde="potential",
        potential_modes=_POT4,
        suites=("solve",),
    ),
    Scenario(
        name="estimate_family",
        description="escalating-density solve family for the integral "
                    "probes",
        tilde="induced",
        density_modes=_DENS4,
        family_scales=(0.1, 0.2, 0.4),
        suites=("solve", "estimates"),
    ),
)}


def get_scenario(name: str) -> Scenario:
    """Registry member by name."""
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise ScenarioError(f"unknown scenario {name!r} (registry: {known})")


# ---------------------------------------------------------------------------
# validation


def _check_mode_row(sc: Scenario, table: str, kvec, amp, kind) -> None:
    axes = 2 * sc.n
    if len(kvec) != axes:
        raise ScenarioError(
            f"scenario {sc.name!r}: {table} wave vector {kvec} needs "
            f"{axes} entries")
    nyq = sc.grid_points // 2
    if any(abs(int(k)) >= nyq for k in kvec):
        raise ScenarioError(
            f"scenario {sc.name!r}: {table} wave vector {kvec} reaches the "
            f"aliasing index {nyq} at {sc.grid_points} points per axis")
    if kind not in _WAVE_KINDS:
        raise ScenarioError(
            f"scenario {sc.name!r}: {table} kind {kind!r} is not cos/sin")
    float(amp)


def validate_scenario(sc: Scenario, check_geometry: bool = True) -> Scenario:
    """Field-level validation, then the taming check on the declared grid.

    Returns the scenario unchanged so loaders can validate-and-pass-through.
    ``check_geometry=False`` skips the grid-sized taming evaluation (field
    checks only), for callers that build the geometry themselves right away.
    """
    if not sc.name or not sc.name.replace("_", "").isalnum():
        raise ScenarioError(f"scenario name {sc.name!r} is not an identifier")
    if sc.family not in FAMILIES:
        raise ScenarioError(
            f"scenario {sc.name!r}: unknown family {sc.family!r}")
    if sc.tilde not in TILDE_KINDS:
        raise ScenarioError(
            f"scenario {sc.name!r}: unknown tilde kind {sc.tilde!r}")
    try:
        sc.grid()
    except ValueError as exc:
        raise ScenarioError(f"scenario {sc.name!r}: {exc}")
    if sc.family == "flat":
        if sc.j_modes or sc.epsilon != 0.0:
            raise ScenarioError(
                f"scenario {sc.name!r}: the flat family takes no generator")
    elif not sc.j_modes:
        raise ScenarioError(
            f"scenario {sc.name!r}: family {sc.family!r} needs a generator "
            f"table")
    if sc.epsilon < 0.0:
        raise ScenarioError(f"scenario {sc.name!r}: negative epsilon")
    if sc.tilde == "potential" and sc.family != "flat":
        raise ScenarioError(
            f"scenario {sc.name!r}: a potential metric needs the flat "
            f"structure")
    if sc.tilde == "potential" and not sc.potential_modes:
        raise ScenarioError(
            f"scenario {sc.name!r}: tilde 'potential' without a potential "
            f"table")
    if not sc.suites:
        raise ScenarioError(f"scenario {sc.name!r}: empty suite selection")
    for suite in sc.suites:
        if suite not in SUITE_NAMES:
            raise ScenarioError(
                f"scenario {sc.name!r}: unknown suite {suite!r}")
    if "pair" in sc.suites and sc.tilde == "none":
        raise ScenarioError(
            f"scenario {sc.name!r}: the pair suite needs a second metric")
    for a in sc.alphas:
        if not float(a) > 0.0:
            raise ScenarioError(
                f"scenario {sc.name!r}: exponents must be positive")
    for s in sc.family_scales:
        if not float(s) > 0.0:
            raise ScenarioError(
                f"scenario {sc.name!r}: family scales must be positive")
    for (i, j, kvec, amp, kind) in sc.j_modes:
        if not (0 <= int(i) < 2 * sc.n and 0 <= int(j) < 2 * sc.n):
            raise ScenarioError(
                f"scenario {sc.name!r}: generator entry ({i}, {j}) out of "
                f"range")
        _check_mode_row(sc, "j_modes", kvec, amp, kind)
    for (comp, kvec, amp, kind) in sc.omega_modes:
        if not 0 <= int(comp) < 2 * sc.n:
            raise ScenarioError(
                f"scenario {sc.name!r}: one-form component {comp} out of "
                f"range")
        _check_mode_row(sc, "omega_modes", kvec, amp, kind)
    for (kvec, amp, kind) in sc.potential_modes:
        _check_mode_row(sc, "potential_modes", kvec, amp, kind)
    for (kvec, amp, kind) in sc.density_modes:
        _check_mode_row(sc, "density_modes", kvec, amp, kind)
    if check_geometry:
        grid = sc.grid()
        scenario_metric(sc, grid)
    return sc


# ---------------------------------------------------------------------------
# text format


def _fmt(x: float) -> str:
    return repr(float(x))


def canonical_text(sc: Scenario) -> str:
    """Unique text form: every scalar key echoed, tables in stored order."""
    lines = ["# scenario (canonical form)"]
    lines.append(f"name {sc.name}")
    if sc.description:
        lines.append(f"description {sc.description}")
    lines.append(f"n {sc.n}")
    lines.append(f"grid {sc.grid_points}")
    lines.append(f"family {sc.family}")
    lines.append(f"epsilon {_fmt(sc.epsilon)}")
    lines.append(f"tilde {sc.tilde}")
    lines.append("alphas " + " ".join(_fmt(a) for a in sc.alphas))
    if sc.family_scales:
        lines.append("family_scales "
                      + " ".join(_fmt(s) for s in sc.family_scales))
    lines.append("suites " + " ".join(sc.suites))

    def kv(kvec):
        return " ".join(str(int(k)) for k in kvec)

    if sc.j_modes:
        lines.append("")
        lines.append("[j_modes]")
        for (i, j, kvec, amp, kind) in sc.j_modes:
            lines.append(f"{int(i)} {int(j)} {kv(kvec)} {_fmt(amp)} {kind}")
    if sc.omega_modes:
        lines.append("")
        lines.append("[omega_modes]")
        for (comp, kvec, amp, kind) in sc.omega_modes:
            lines.append(f"{int(comp)} {kv(kvec)} {_fmt(amp)} {kind}")
    if sc.potential_modes:
        lines.append("")
        lines.append("[potential_modes]")
        for (kvec, amp, kind) in sc.potential_modes:
            lines.append(f"{kv(kvec)} {_fmt(amp)} {kind}")
    if sc.density_modes:
        lines.append("")
        lines.append("[density_modes]")
        for (kvec, amp, kind) in sc.density_modes:
            lines.append(f"{kv(kvec)} {_fmt(amp)} {kind}")
    return "\n".join(lines) + "\n"


def fingerprint(sc: Scenario) -> str:
    """Content hash of the canonical form."""
    return hashlib.sha256(canonical_text(sc).encode("utf-8")).hexdigest()


def parse_scenario(text: str, origin: str = "<string>") -> Scenario:
    """Parse the documented text format; errors carry line numbers.

    Returns the scenario exactly as written (defaults applied, nothing
    validated beyond syntax); run ``validate_scenario`` on the result.
    """
    scalars = {}
    tables = {key: [] for key in _TABLE_KEYS}
    section = None
    seen_sections = set()

    def fail(lineno, msg):
        raise ScenarioError(f"{origin}:{lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                fail(lineno, f"unterminated section header {line!r}")
            section = line[1:-1].strip()
            if section not in _TABLE_KEYS:
                fail(lineno, f"unknown table {section!r}")
            if section in seen_sections:
                fail(lineno, f"duplicate table {section!r}")
            seen_sections.add(section)
            continue
        if section is None:
            key, _, value = line.partition(" ")
            value = value.strip()
            if key not in ("name", "description", "n", "grid", "family",
                           "epsilon", "tilde", "alphas", "family_scales",
                           "suites"):
                fail(lineno, f"unknown key {key!r}")
            if key in scalars:
                fail(lineno, f"duplicate key {key!r}")
            if not value:
                fail(lineno, f"key {key!r} has no value")
            scalars[key] = (lineno, value)
        else:
            tables[section].append((lineno, line.split()))

    if "name" not in scalars:
        raise ScenarioError(f"{origin}: missing required key 'name'")

    def intval(key, default):
        if key not in scalars:
            return default
        lineno, value = scalars[key]
        try:
            return int(value)
        except ValueError:
            fail(lineno, f"key {key!r} needs an integer, got {value!r}")

    def floatval(key, default):
        if key not in scalars:
            return default
        lineno, value = scalars[key]
        try:
            return float(value)
        except ValueError:
            fail(lineno, f"key {key!r} needs a number, got {value!r}")

    def floatlist(key, default):
        if key not in scalars:
            return default
        lineno, value = scalars[key]
        try:
            return tuple(float(v) for v in value.split())
        except ValueError:
            fail(lineno, f"key {key!r} needs numbers, got {value!r}")

    n = intval("n", 2)
    axes = 2 * n

    def parse_row(table, lineno, cols, leading):
        want = leading + axes + 2
        if len(cols) != want:
            fail(lineno, f"{table} row needs {want} columns "
                         f"({leading} indices, {axes} wave entries, "
                         f"amplitude, kind), got {len(cols)}")
        try:
            head = tuple(int(c) for c in cols[:leading])
            kvec = tuple(int(c) for c in cols[leading:leading + axes])
            amp = float(cols[leading + axes])
        except ValueError:
            fail(lineno, f"{table} row has non-numeric entries: "
                         f"{' '.join(cols)!r}")
        kind = cols[-1]
        if kind not in _WAVE_KINDS:
            fail(lineno, f"{table} kind {kind!r} is not cos/sin")
        return head + (kvec, amp, kind)

    sc = Scenario(
        name=scalars["name"][1],
        description=scalars.get("description", (0, ""))[1],
        n=n,
        grid_points=intval("grid", 16),
        family=scalars.get("family", (0, "flat"))[1],
        epsilon=floatval("epsilon", 0.0),
        tilde=scalars.get("tilde", (0, "none"))[1],
        j_modes=tuple(parse_row("j_modes", ln, cols, 2)
                      for ln, cols in tables["j_modes"]),
        omega_modes=tuple(parse_row("omega_modes", ln, cols, 1)
                          for ln, cols in tables["omega_modes"]),
        potential_modes=tuple(parse_row("potential_modes", ln, cols, 0)
                              for ln, cols in tables["potential_modes"]),
        density_modes=tuple(parse_row("density_modes", ln, cols, 0)
                            for ln, cols in tables["density_modes"]),
        family_scales=floatlist("family_scales", ()),
        alphas=floatlist("alphas", (0.5, 1.0, 2.0)),
        suites=tuple(scalars["suites"][1].split()) if "suites" in scalars
        else ("identities",),
    )
    return sc


def load_scenario(path, check_geometry: bool = True) -> Scenario:
    """Read, parse and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return validate_scenario(parse_scenario(text, origin=str(path)),
                             check_geometry=check_geometry)


def registry_file(name: str):
    """Path of the shipped file for a registry member."""
    from importlib.resources import files

    return files("cyframe.data").joinpath(f"{name}.scn")


def classify_scenario(sc: Scenario, grid_points: int = None):
    """Structure class of the scenario's primary pair."""
    grid = sc.grid(grid_points)
    return classify(scenario_taming_form(sc, grid), scenario_structure(sc, grid))
