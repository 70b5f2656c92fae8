"""Spatial moment pooling: windowed means and central moments with gradients."""

from .grad import (
    GradCheckReport,
    finite_diff_check,
    gradient_magnitude_profile,
    smp_backward,
)
from .moments import MomentVector, central_moments, moment_gradients
from .normalize import (
    BatchNormState,
    batch_norm,
    batch_norm_backward,
    layer_norm,
    layer_norm_backward,
    max_norm,
    max_norm_backward,
    norm_backward,
)
from .rng import Xoshiro256pp
from .smp import MomentSpec, OpCostReport, op_cost, sap_forward, smp_forward
from .synth import checkerboard, make_pattern, ramp, solid, uniform_noise
from .tensor import (
    Tensor,
    TensorFileError,
    has_nonfinite,
    tensor_read,
    tensor_write,
)
from .toytrain import ToyTrainConfig, ToyTrainReport, run_toytrain
from .windows import (
    GeometryError,
    PoolSpec,
    WindowMatrix,
    col2im_accumulate,
    im2col,
    output_dims,
)

__all__ = [
    "BatchNormState",
    "GeometryError",
    "GradCheckReport",
    "MomentSpec",
    "MomentVector",
    "OpCostReport",
    "PoolSpec",
    "Tensor",
    "TensorFileError",
    "ToyTrainConfig",
    "ToyTrainReport",
    "WindowMatrix",
    "Xoshiro256pp",
    "batch_norm",
    "batch_norm_backward",
    "central_moments",
    "checkerboard",
    "col2im_accumulate",
    "finite_diff_check",
    "gradient_magnitude_profile",
    "has_nonfinite",
    "im2col",
    "layer_norm",
    "layer_norm_backward",
    "make_pattern",
    "max_norm",
    "max_norm_backward",
    "moment_gradients",
    "norm_backward",
    "op_cost",
    "output_dims",
    "ramp",
    "run_toytrain",
    "sap_forward",
    "smp_backward",
    "smp_forward",
    "solid",
    "tensor_read",
    "tensor_write",
    "uniform_noise",
]

__version__ = "0.1.0"
