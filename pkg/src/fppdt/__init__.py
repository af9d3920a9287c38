"""First-passage percolation on Delaunay triangulations of planar point
processes: geometry, edge-weight models, passage times, bond percolation on
the Voronoi dual, renormalization boxes, path statistics, and a campaign CLI.
"""

from .geometry import (
    BoxGrid,
    DelaunayGraph,
    GeometryError,
    Point,
    PointSet,
    VoronoiDiagram,
    Window,
    build_delaunay,
    build_voronoi_dual,
    load_points,
    locate_tile,
    nearest_vertex,
    sample_poisson,
    save_points,
    truncated_process,
)
from .weights import (
    EdgeWeights,
    WeightDistribution,
    WeightError,
    assign_weights,
    load_weights,
    save_weights,
    threshold_indicator,
    truncate_weights,
)
from .fpp import (
    FPPError,
    PassageResult,
    ReachedSet,
    concentration_profile,
    coupled_edge_weights,
    estimate_time_constant,
    first_passage_time,
    geodesic_uniqueness_probe,
    point_passage_time,
    reached_set,
    shape_deviation,
    subadditivity_check,
    truncation_gap,
    variance_scaling,
)
from .percolation import (
    BondConfiguration,
    CrossingSpec,
    PercolationError,
    circuit_certificate,
    circuit_exists,
    classify_good_boxes,
    crossing_event,
    estimate_eta,
    estimate_pc_delaunay,
    estimate_pc_star,
    open_bonds,
)
from .renorm import (
    Animal,
    BoxCircuit,
    FullBoxPrecondition,
    RenormError,
    SiteField,
    animal_growth_scan,
    circuit_separation_check,
    good_box_density_probe,
    greedy_animal,
    is_full_box,
    load_field,
    open_density,
    save_field,
)
from .paths import (
    DegenerateQueryError,
    PathAnimal,
    PathError,
    VertexPath,
    cheapest_long_path,
    count_self_avoiding,
    kappa_table,
    min_animal_scan,
    path_animal,
    segment_walk,
    walk_length_scan,
)
from .experiment import ExperimentResult, derive_seed, thread_count

__version__ = "0.1.0"

__all__ = [
    "Animal",
    "BondConfiguration",
    "BoxCircuit",
    "BoxGrid",
    "CrossingSpec",
    "DegenerateQueryError",
    "DelaunayGraph",
    "EdgeWeights",
    "ExperimentResult",
    "FPPError",
    "FullBoxPrecondition",
    "GeometryError",
    "PassageResult",
    "PathAnimal",
    "PathError",
    "PercolationError",
    "Point",
    "PointSet",
    "ReachedSet",
    "RenormError",
    "SiteField",
    "VertexPath",
    "VoronoiDiagram",
    "WeightDistribution",
    "WeightError",
    "Window",
    "animal_growth_scan",
    "assign_weights",
    "build_delaunay",
    "build_voronoi_dual",
    "cheapest_long_path",
    "circuit_certificate",
    "circuit_exists",
    "circuit_separation_check",
    "classify_good_boxes",
    "concentration_profile",
    "count_self_avoiding",
    "coupled_edge_weights",
    "crossing_event",
    "derive_seed",
    "estimate_eta",
    "estimate_pc_delaunay",
    "estimate_pc_star",
    "estimate_time_constant",
    "first_passage_time",
    "geodesic_uniqueness_probe",
    "good_box_density_probe",
    "greedy_animal",
    "is_full_box",
    "kappa_table",
    "load_field",
    "load_points",
    "load_weights",
    "locate_tile",
    "min_animal_scan",
    "nearest_vertex",
    "open_bonds",
    "open_density",
    "path_animal",
    "point_passage_time",
    "reached_set",
    "sample_poisson",
    "save_field",
    "save_points",
    "save_weights",
    "segment_walk",
    "shape_deviation",
    "subadditivity_check",
    "thread_count",
    "threshold_indicator",
    "truncated_process",
    "truncate_weights",
    "truncation_gap",
    "variance_scaling",
    "walk_length_scan",
    "__version__",
]
