"""Shared fixtures and independent oracles.

The matrix exponential oracle below uses scaling-and-squaring with a
plain Taylor series, so it shares no code path with the eigh-based
exponentials inside the package.
"""

from __future__ import annotations

import numpy as np
import pytest

from adiabatic_continuum import (
    AngleSchedule,
    BandPartition,
    KGrid,
    build_model,
    linear_dispersion,
    nearest_neighbor_rotation,
)

N = 16
THETA_MAX = 0.4
J0 = 1
M = 2


def taylor_expm(a: np.ndarray, terms: int = 40) -> np.ndarray:
    """exp(a) by scaling-and-squaring over a truncated Taylor series."""
    a = np.asarray(a, dtype=complex)
    norm = float(np.abs(a).sum(axis=1).max())
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0)
    b = a / (2.0**squarings)
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ b / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def make_model(theta_max: float = THETA_MAX, kind: str = "cubic_ramp", n: int = N,
               dispersion=None):
    grid = KGrid(1.0, 2.0, n)
    schedule = AngleSchedule(kind, theta_max)
    dispersion = dispersion if dispersion is not None else linear_dispersion()
    return build_model(grid, dispersion, nearest_neighbor_rotation(n, schedule))


@pytest.fixture(scope="session")
def default_model():
    return make_model()


@pytest.fixture(scope="session")
def default_part():
    return BandPartition(N, M)


@pytest.fixture(scope="session")
def frozen_model():
    return make_model(theta_max=0.0)


DEFAULT_CFG_TEXT = """\
[grid]
k_min = 1.0
k_max = 2.0
N = 16

[dispersion]
family = linear
params = 1.0, 1.0

[rotation]
builder = nearest_neighbor
theta_max = 0.4
schedule = cubic_ramp

[bands]
m = 2

[run]
T = 100.0
steps = 4000
scheme = midpoint_exponential
variant = kato_state

[analysis]
j0 = 1
s_samples = 129
margin = 1.0
threshold = 0.1

[output]
directory = out
formats = json,csv
"""


@pytest.fixture
def write_config(tmp_path):
    """Write DEFAULT_CFG_TEXT with per-section key overrides; returns the path.

    Overrides map section -> {key: value}; a value of None deletes the key,
    a section value of None deletes the whole section.
    """

    def _write(overrides=None, name="exp.cfg"):
        import configparser

        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(DEFAULT_CFG_TEXT)
        for section, keys in (overrides or {}).items():
            if keys is None:
                parser.remove_section(section)
                continue
            if not parser.has_section(section):
                parser.add_section(section)
            for key, value in keys.items():
                if value is None:
                    parser.remove_option(section, key)
                else:
                    parser.set(section, key, str(value))
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as handle:
            parser.write(handle)
        return path

    return _write
