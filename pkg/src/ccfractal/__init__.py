"""Step-2 Carnot group arithmetic, extremal fractal constructions, and
dimension-comparison diagnostics."""

from .group import (
    GroupSpec,
    Point,
    AffinePlane,
    StrataProfile,
    bracket_polynomial,
    multiply,
    invert,
    dilate,
    identity,
    dist_homogeneous,
    dist_euclidean,
    dist_koranyi,
    heisenberg_spec,
    horizontal_plane,
    dist_to_plane,
    beta_minus,
    beta_plus,
    c_r_bound,
    calibrate_metric_constant,
    empirical_ball_constant,
    spec_to_json,
    spec_from_json,
)
from .fractal import (
    Slab,
    Example1Schedule,
    Example2Schedule,
    CustomSchedule,
    subdivide,
    schedule_params,
    build_construction,
    SlabConstruction,
    moran_branch_sequence,
    ifs_map_apply,
    attractor_box,
    enumerate_cylinders,
    MoranSet,
    vertical_factor_set,
)
from .dimlab import (
    ScaleSeries,
    DimensionEstimate,
    ExcisionSpec,
    box_count_euclidean,
    box_count_homogeneous,
    fit_dimension,
    covering_measure,
    plane_offset,
    excision_ratio,
    density_ratio,
    dimension_comparison_report,
)

__version__ = "0.1.0"
