"""pytest fixtures for sicsep."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parents[1]
SRC_DIR = ROOT_DIR / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from sicsep.povm import Povm, resolve_povms
from sicsep.states import DensityState, build_named_state

DATA_DIR = ROOT_DIR / "data" / "states"


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture()
def sic3() -> list[Povm]:
    """Renormalized qubit SIC on each of three qubits."""
    return resolve_povms("sic2", (2, 2, 2), normalization="renormalized")


@pytest.fixture()
def example1_rho() -> DensityState:
    return build_named_state("example1_rho")


@pytest.fixture()
def maximally_mixed_3q() -> DensityState:
    return build_named_state("maximally_mixed", {"n": 3, "d": 2})


@pytest.fixture()
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep SICSEP_* settings from the developer shell out of the tests."""
    import os

    for name in list(os.environ):
        if name.startswith("SICSEP_"):
            monkeypatch.delenv(name, raising=False)
