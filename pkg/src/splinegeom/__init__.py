"""Exact input-space geometry of piecewise-linear networks.

Networks built from ReLU-family activations compute affine splines:
their input space tessellates into convex tiles and the network is a
single affine map on each.  This package evaluates those networks,
computes the exact tessellation of bounded 2D slices, measures local
complexity and hyperplane alignment, reweights piecewise-affine
generators by their volume distortion, and probes the piecewise
quadratic structure of the squared loss.
"""

__version__ = "0.1.0"

from .complexity import (
    DensityGrid,
    LcConfig,
    dataset_lc,
    default_lc_radius,
    hyperplane_density,
    local_complexity,
    mean_signed_distance,
    neuron_distances,
    tls_distance,
)
from .errors import (
    CapacityError,
    DegeneratePoolError,
    DivergenceError,
    GeometryError,
    RangeError,
    RegionTooSmallError,
    ShapeError,
    SplineGeomError,
    ValidationError,
)
from .geometry import (
    clip_line_to_polygon,
    point_in_polygon,
    polygon_area,
    polygon_centroid,
    rect_polygon,
    split_polygon_by_line,
)
from .landscape import (
    ArchitectureComparison,
    RegionProbe,
    SpectrumReport,
    compare_architectures,
    layer_hessian,
    quadraticity_check,
    spectrum,
)
from .network import (
    ActivationPattern,
    AffineMap,
    BatchNormState,
    Dataset,
    Layer,
    Network,
    activation_pattern,
    activation_patterns_batch,
    batchnorm_update,
    forward,
    forward_batch,
    frozen_affine_batch,
    hidden_states_batch,
    local_affine,
    random_mlp,
    squared_loss,
    with_layer_params,
)
from .sampler import (
    LatentDomain,
    PolarityPoint,
    SamplePool,
    build_pool,
    jacobian_volume,
    jacobian_volumes_batch,
    polarity_sweep,
    resample,
)
from .serialize import (
    canonical_json,
    load_dataset,
    load_network,
    load_slice,
    save_dataset,
    save_network,
    save_slice,
)
from .tessellation import (
    DecisionBoundary,
    Edge,
    Slice,
    SliceTessellation,
    Tile,
    decision_boundary,
    locate_tile,
    network_fingerprint,
    region_key,
    subdivide,
    tessellation_stats,
)
from .training import TrainConfig, parameter_gradients, train_sgd
