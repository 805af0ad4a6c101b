"""Symbolic verification of cosymplectic manifolds, groupoids, actions, reduction and Morita bimodules."""
from __future__ import annotations

from .forms import Chart, DifferentialForm, SmoothMap, VectorField
from .manifest import Manifest, ManifestError, load_manifest, run_checks
from .report import Report, Status
from .structures import CosymplecticStructure
from .symbolic import SamplePolicy

__all__ = ["Chart", "CosymplecticStructure", "DifferentialForm", "Manifest", "ManifestError", "Report",
           "SamplePolicy", "SmoothMap", "Status", "VectorField", "load_manifest", "run_checks"]
__version__ = "0.1.0"
