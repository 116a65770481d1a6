"""Local capacity of wireless ad hoc networks.

Computes the average information rate at a randomly located receiver
(local capacity c = lambda * sigma) for six medium-access models: the
three regular transmitter grids, slotted ALOHA, distance coloring and
carrier-sense admission.  Reception areas come from exact SIR level-set
tracing; coloring/CSMA capacities from Monte Carlo over node samples.
"""

from .area_tracer import (BoundaryTrace, TracerConfig, area_from_trace,
                          newton_seed, rasterization_area, save_trace_csv,
                          trace_boundary)
from .capacity import (CapacityEstimate, ProtocolSpec, SweepRow,
                       aloha_capacity, aloha_sigma, coverage_capacity,
                       grid_capacity,
                       grid_density, monte_carlo_capacity, protocol_capacity,
                       ratios_to_triangular, sweep, write_capacity_csv,
                       write_ratio_csv)
from .kernels import BACKEND as kernel_backend
from .optimality import (DeformationReport, deformation_matrices,
                         grad_sigma_wrt_transmitter, write_deformation_csv)
from .point_processes import (GridKind, MapExtent, NodeSet, Point,
                              TransmitterSet, density, generate_grid,
                              load_points_csv, origin_index, sample_coloring,
                              sample_csma, sample_poisson,
                              sample_uniform_nodes, save_points_csv)
from .sir_field import (FieldContext, SirParams, count_successful, g_value,
                        sir_at, sir_gradient)

__version__ = "0.1.0"

__all__ = [
    "BoundaryTrace", "CapacityEstimate", "DeformationReport", "FieldContext",
    "GridKind", "MapExtent", "NodeSet", "Point", "ProtocolSpec", "SirParams",
    "SweepRow", "TracerConfig", "TransmitterSet", "aloha_capacity",
    "aloha_sigma", "area_from_trace", "count_successful",
    "coverage_capacity",
    "deformation_matrices", "density", "g_value", "generate_grid",
    "grad_sigma_wrt_transmitter", "grid_capacity", "grid_density",
    "kernel_backend",
    "load_points_csv", "monte_carlo_capacity", "newton_seed", "origin_index",
    "protocol_capacity", "rasterization_area", "ratios_to_triangular",
    "sample_coloring", "sample_csma", "sample_poisson",
    "sample_uniform_nodes", "save_points_csv", "save_trace_csv", "sir_at",
    "sir_gradient", "sweep", "trace_boundary", "write_capacity_csv",
    "write_deformation_csv", "write_ratio_csv",
]
