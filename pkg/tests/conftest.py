"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fanomode.spectral import FanoModel


def random_lindblad_model(rng: np.random.Generator, resonant: bool = True) -> FanoModel:
    """Random model inside the Lindblad-valid parameter box (kappa = 1)."""
    return FanoModel(
        gamma=float(rng.uniform(0.01, 1.0)),
        kappa=1.0,
        g_abs=float(rng.uniform(0.0, 2.0)),
        eta=float(rng.uniform(0.0, 1.0)),
        omega_A=0.0 if resonant else float(rng.uniform(-2.0, 2.0)),
        omega_C=0.0,
        phi=float(rng.uniform(0.0, 2.0 * np.pi)),
        theta_A=float(rng.uniform(0.0, 2.0 * np.pi)),
        theta_C=float(rng.uniform(0.0, 2.0 * np.pi)),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
