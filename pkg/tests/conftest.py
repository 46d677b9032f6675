"""Shared fixtures: memoized scenario geometry at the declared grids.

Building a bundle costs more than any single check run on it, so tests
share one bundle per (scenario, resolution).  Only the declared N=16
grids are cached; refinement tests build their doubled grids locally and
drop them (a cached N=32 bundle of every scenario would not fit in
memory alongside the rest of the suite).
"""

import pytest

from cyframe import scenarios as scen
from cyframe.connection import structure_equation_residuals

_BUNDLES = {}
_STRUCTURE = {}


def _bundle(name, grid_points=None):
    key = (name, grid_points)
    if key not in _BUNDLES:
        sc = scen.get_scenario(name)
        _BUNDLES[key] = scen.scenario_bundle(sc, grid_points)
    return _BUNDLES[key]


def _structure_report(name, grid_points=None):
    key = (name, grid_points)
    if key not in _STRUCTURE:
        _STRUCTURE[key] = structure_equation_residuals(
            _bundle(name, grid_points).conn)
    return _STRUCTURE[key]


@pytest.fixture(scope="session")
def bundle_at():
    """Memoized ``(scenario name, grid override) -> ConnectionBundle``."""
    return _bundle


@pytest.fixture(scope="session")
def structure_report_at():
    """Memoized structure-equation residuals for a cached bundle."""
    return _structure_report


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile every hot kernel on a small grid before timed sections."""
    from cyframe.identities import run_identity_suite

    sc = scen.get_scenario("almost_kahler_eps10")
    b = scen.scenario_bundle(sc, grid_points=8)
    run_identity_suite(b, structure_report=structure_equation_residuals(
        b.conn))
    return True
