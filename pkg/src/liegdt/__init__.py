"""Left-invariant Riemannian geometry on the unit-determinant homography
group, with a geodesic-distance training loss and a desk-scale trainer.

The core objects are :class:`Homography` (a 3x3 unit-determinant matrix),
the exponential/logarithm pair built from the left-invariant metric
(:func:`riem_log_identity`, :func:`geodesic_between`), the exact geodesic
loss (:func:`gdt_loss_exact`, :func:`gdt_exact_grad`), and an
SO(3)-projection surrogate (:func:`surrogate_loss`) whose analytic
gradient powers the trainer in :mod:`liegdt.train`.
"""

from .bridge import LossRequest, LossResponse, eval_loss, eval_loss_batch, eval_loss_flat
from .errors import (
    DegenerateProjectionError,
    IllConditionedError,
    LieGdtError,
    MatExpRangeError,
    NoConvergenceError,
    SingularMatrixError,
    TrainingDivergedError,
)
from .geometry import (
    GdtResult,
    GeodesicCurve,
    Homography,
    Rotation3,
    TangentVector,
    gdt_exact_grad,
    gdt_loss_exact,
    geodesic_between,
    geodesic_point,
    mse_loss,
    normalize_unit_det,
    project_so3,
    riem_exp_identity,
    riem_exp_jacobian,
    riem_log_identity,
    riem_log_matrix,
    rotation_angle,
    surrogate_loss,
    surrogate_loss_grad,
)
from .linalg import dexp_frechet, dexp_jacobian, mat_exp, rot_log, unvec, vec
from .sampler import (
    GrayImage,
    Rng,
    TransformParams,
    dump_sample,
    make_synthetic_image,
    params_to_homography,
    read_pgm,
    sample_params,
    to_unit_frame,
    warp_image,
    write_pgm,
)
from .train import (
    AdamState,
    ModelWeights,
    TrainConfig,
    TrainReport,
    decoder_output_to_homography,
    evaluate_angle_error,
    init_weights,
    load_train_config,
    loss_head_grad,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "DegenerateProjectionError",
    "GdtResult",
    "GeodesicCurve",
    "GrayImage",
    "Homography",
    "IllConditionedError",
    "LieGdtError",
    "LossRequest",
    "LossResponse",
    "MatExpRangeError",
    "ModelWeights",
    "NoConvergenceError",
    "Rng",
    "Rotation3",
    "SingularMatrixError",
    "TangentVector",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "TransformParams",
    "decoder_output_to_homography",
    "dexp_frechet",
    "dexp_jacobian",
    "dump_sample",
    "eval_loss",
    "eval_loss_batch",
    "eval_loss_flat",
    "evaluate_angle_error",
    "gdt_exact_grad",
    "gdt_loss_exact",
    "geodesic_between",
    "geodesic_point",
    "init_weights",
    "load_train_config",
    "loss_head_grad",
    "make_synthetic_image",
    "mat_exp",
    "mse_loss",
    "normalize_unit_det",
    "params_to_homography",
    "project_so3",
    "read_pgm",
    "riem_exp_identity",
    "riem_exp_jacobian",
    "riem_log_identity",
    "riem_log_matrix",
    "rot_log",
    "rotation_angle",
    "sample_params",
    "surrogate_loss",
    "surrogate_loss_grad",
    "to_unit_frame",
    "train",
    "unvec",
    "vec",
    "warp_image",
    "write_pgm",
]
