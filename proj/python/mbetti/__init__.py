"""Betti numbers of simplicial 3-manifolds from boundary data of the Maxwell/Dirac system."""

import json
from pathlib import Path

from ._core import (
    BoundaryInnerProducts,
    Complex,
    Dataset,
    DiracSystem,
    Materials,
    MbettiError,
    ball,
    beta2_from_boundary,
    betti,
    load_mesh,
    simulate,
    single_tet,
    solid_torus,
    tunneled_box,
)
from . import _core

__all__ = [
    "BoundaryInnerProducts",
    "Complex",
    "Dataset",
    "DiracSystem",
    "Materials",
    "MbettiError",
    "ball",
    "beta1_physical",
    "beta2_from_boundary",
    "betti",
    "betti_from_dirac",
    "load_mesh",
    "run_scenario",
    "simulate",
    "single_tet",
    "solid_torus",
    "tunneled_box",
    "verify_scenario",
]


def betti_from_dirac(bip, initial_sources=4, threads=1):
    """Recovery report (dict) from a complete-Dirac dataset."""
    return json.loads(_core._betti_from_dirac(bip, initial_sources, threads))


def beta1_physical(bip, initial_sources=4, threads=1):
    """Recovery report (dict) from a physical-Maxwell dataset; includes beta_2 from the boundary."""
    return json.loads(_core._beta1_physical(bip, initial_sources, threads))


def _scenario_text(scenario):
    if isinstance(scenario, (str, Path)) and Path(scenario).is_file():
        return Path(scenario).read_text()
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    raise TypeError("scenario must be a dict or a path to a JSON file")


def run_scenario(scenario, out, threads=1):
    """Runs a scenario and returns the oracle comparison (dict); artifacts go to `out`."""
    return json.loads(_core._run_scenario(_scenario_text(scenario), str(out), threads))


def verify_scenario(scenario, out):
    """Invariant checklist (dict) for a scenario."""
    return json.loads(_core._verify_scenario(_scenario_text(scenario), str(out)))
