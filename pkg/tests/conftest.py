from __future__ import annotations

import numpy as np
import pytest

from cosym.forms import Chart, DifferentialForm
from cosym.structures import CosymplecticStructure


@pytest.fixture
def r3() -> Chart:
    return Chart("R3", ("x", "y", "z"))


@pytest.fixture
def std3(r3) -> CosymplecticStructure:
    return CosymplecticStructure(r3, DifferentialForm.basis(r3, "z"), DifferentialForm.basis(r3, "x", "y"), name="STD3")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
