"""Numerical toolkit for Lorentzian 3-space of constant curvature -1.

Builds maximal spacelike surfaces spanning circle-homeomorphism graphs,
measures convex-hull width and cross-ratio norms, constructs the associated
minimal Lagrangian extension of the disk, and cross-checks the quantitative
relations between these objects on meshes.
"""

from .errors import (
    AdsmaxError,
    AllUmbilical,
    ChartSingularity,
    ClassificationAmbiguous,
    ConfigInvalid,
    CurvatureAtOne,
    DegenerateFrame,
    DegenerateQuadruple,
    DegenerateTangentPlane,
    InsufficientData,
    IoError,
    LightlikeDirection,
    MaxItersExceeded,
    NonConvergent,
    NotMonotone,
    NotSpacelike,
    NotTimelike,
    OutOfRange,
    PlaneIntersectsSurface,
    RootNotBracketed,
    SearchBudgetExceeded,
    SingularParallel,
    TooFewPoints,
    UmbilicalRegion,
)
from .lorentz import (
    AdSPoint,
    CylCoords,
    Geodesic,
    Isometry,
    Plane,
    TangentVector,
    ads_point,
    causal_type,
    cyl_coords,
    cyl_embed,
    dual_plane,
    dual_point,
    geodesic,
    geodesic_eval,
    inner,
    point_plane_distance,
    separation,
)
from .mobius import Mobius, Quadruple, cross_ratio, symmetric_quadruple
from .homeo import (
    CircleHomeo,
    ComposeHomeo,
    MobiusHomeo,
    PowerHomeo,
    SampledHomeo,
    ShearHomeo,
    boundary_height,
    homeo_eval,
    homeo_inverse,
    identity_homeo,
)
from .norm import NormEstimate, SearchConfig, cross_ratio_norm
from .sl2 import (
    apply_psl_pair,
    from_matrix_model,
    isometry_from_psl_pair,
    plane_boundary_mobius,
    to_matrix_model,
)
from .hull import (
    BoundaryCurve,
    BoundaryPoint,
    ConvexHull3,
    boundary_from_graph,
    classify_facets,
    convex_hull,
    graph_samples,
    identity_curve,
    load_curve,
    save_curve,
)
from .width import (
    WidthConfig,
    WidthEstimate,
    support_plane_disjoint,
    transform_curve,
    width_estimate,
)
from .mesh import (
    GeometryFields,
    PolarGrid,
    SurfaceMesh,
    equidistant_height_field,
    gauss_curvature,
    geometry_fields,
    hull_containment,
    lambda_sup,
    plane_height_field,
    save_mesh_table,
    trim_rim,
)
from .stencils import PolarStencils
from .solver import SolverConfig, solve_maximal
from .surface_checks import (
    GRAD_BOUND,
    Residuals,
    check_linear_pde,
    check_quasilinear_pde,
    grad_norm_squared,
    lipschitz_v,
)
from .parallel import ParallelForms, parallel_forms, parallel_surface
from .lines import line_fields, trace_curvature_line
from .extension import (
    DilatationField,
    RulingIsometry,
    SampledMap,
    area_jacobian,
    boundary_trace,
    dilatation,
    ml_map,
    ruling_isometry,
    save_map_table,
)
from .experiment import (
    ConstantFit,
    ExperimentConfig,
    Report,
    ReportRow,
    emit,
    fit_constants,
    load_config,
    load_report,
    make_homeo,
    run_experiment,
    verify_inequalities,
)

__version__ = "0.1.0"
