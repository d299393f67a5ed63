"""Intrinsic Lipschitz approximation of almost-minimizing boundaries in H^n.

Layers, bottom up: `core` (group algebra and quasi-distances), `graph`
(grids on the vertical hyperplane, intrinsic gradients, cone extension),
`surface` (boundary clouds, perimeter, excess), `optimize` (graph area
minimization), `maximal` (covering and maximal-function lemmas), `approx`
(the approximation and truncation pipelines), `generators` / `fileio` /
`cli` (instances, formats, driver).
"""

from .approx import PipelineConfig, lipschitz_approximation, truncate
from .graph import GridFunction, GridSpec
from .surface import BoundaryCloud, excess_cloud, hperimeter, sample_graph_boundary

__all__ = [
    "PipelineConfig",
    "lipschitz_approximation",
    "truncate",
    "GridFunction",
    "GridSpec",
    "BoundaryCloud",
    "excess_cloud",
    "hperimeter",
    "sample_graph_boundary",
]

__version__ = "0.1.0"
