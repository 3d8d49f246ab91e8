"""Quantum-jump simulation of lattice fermions under global light scattering."""

import json
from pathlib import Path

import numpy as np

from . import _core
from ._core import (
    CapacityError,
    ConfigError,
    NumericalError,
    __version__,
    basis_states,
    min_efficiency,
    mode_partition,
    momentum_profile,
    one_body_density,
    profile,
    sector_dimension,
    structure_factor,
)

__all__ = [
    "CapacityError",
    "ConfigError",
    "NumericalError",
    "__version__",
    "basis_states",
    "describe_geometry",
    "ground_state",
    "hubbard",
    "jump_operator",
    "load_config",
    "min_efficiency",
    "mode_partition",
    "momentum_profile",
    "one_body_density",
    "profile",
    "run",
    "run_meanfield",
    "run_trajectory",
    "sector_dimension",
    "structure_factor",
]


def _text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, Path) or not str(config).lstrip().startswith("{"):
        return Path(config).read_text()
    return str(config)


def _sparse(parts):
    from scipy.sparse import csr_matrix

    data, indices, indptr, shape = parts
    return csr_matrix((data, indices, indptr), shape=shape)


def load_config(config):
    """Validated configuration (dict, JSON text or file path) with defaults filled in."""
    return json.loads(_core.normalize_config(_text(config)))


def hubbard(sites, n_up, n_down, J=1.0, U=0.0, boundary="open"):
    """Sector Hamiltonian as a scipy CSR matrix."""
    return _sparse(_core.hubbard(sites, n_up, n_down, J, U, boundary))


def jump_operator(sites, n_up, n_down, profile, polarization="linear-x", gamma=1.0):
    """Jump operator sqrt(2 gamma) sum_i J_i (w_up n_up + w_down n_down) as a scipy CSR matrix."""
    return _sparse(_core.jump_operator(sites, n_up, n_down, list(np.asarray(profile, dtype=complex)), polarization, gamma))


def ground_state(sites, n_up, n_down, J=1.0, U=0.0, boundary="open"):
    return _core.ground_state(sites, n_up, n_down, J, U, boundary)


def run_trajectory(config, seed=1, index=0):
    """One quantum-jump trajectory; `values` holds one row per snapshot under `columns`."""
    return _core.run_trajectory(_text(config), seed, index)


def run_meanfield(config, seed=1, index=0):
    return _core.run_meanfield(_text(config), seed, index)


def run(config):
    """Runs the configured mode and writes artifacts under output.directory."""
    return _core.run(_text(config))


def describe_geometry(config):
    return _core.describe_geometry(_text(config))
