"""vidsolve: video inverse problems solved with per-frame image denoisers.

The solver alternates per-frame Tweedie denoising, multi-step conjugate
gradient data consistency over the whole spatio-temporal volume, and
noise-synchronized stochastic renoising; blind temporal deblurring, classical
baselines, metrics, file formats, and an external-denoiser protocol round out
the toolbox.
"""

from .baselines import AdmmConfig, admm_tv, soft_threshold, standalone_cg, tv_objective
from .denoiser import (
    BridgeClient,
    EpsModel,
    ExternalEps,
    OracleGaussianEps,
    SmootherEps,
    ZeroEps,
    external_predict,
)
from .krylov import CgReport, cg_data_consistency, gd_data_consistency
from .metrics import MetricReport, inter_batch_diff, psnr, report, residual, ssim
from .operators import (
    LinearOp,
    PsfSpec,
    avgpool_sr,
    compose,
    degrade,
    identity_op,
    infer_in_shape,
    parse_op,
    random_mask,
    spatial_gaussian_blur,
    temporal_psf,
)
from .sampler import (
    SolveTrace,
    SolverConfig,
    StepRecord,
    blind_deblur,
    estimate_psf,
    solve,
    unconditional_sample,
)
from .schedule import (
    NoiseSchedule,
    StepPlan,
    default_schedule,
    make_linear_schedule,
    renoise,
    subsample_steps,
    tweedie,
)
from .video import (
    VideoMeta,
    VideoTensor,
    load_svtf,
    preprocess,
    resize_bilinear,
    save_ppm_frames,
    save_svtf,
    synth_video,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "BridgeClient",
    "CgReport",
    "EpsModel",
    "ExternalEps",
    "LinearOp",
    "MetricReport",
    "NoiseSchedule",
    "OracleGaussianEps",
    "PsfSpec",
    "SmootherEps",
    "SolveTrace",
    "SolverConfig",
    "StepPlan",
    "StepRecord",
    "VideoMeta",
    "VideoTensor",
    "ZeroEps",
    "admm_tv",
    "avgpool_sr",
    "blind_deblur",
    "cg_data_consistency",
    "compose",
    "default_schedule",
    "degrade",
    "estimate_psf",
    "external_predict",
    "gd_data_consistency",
    "identity_op",
    "infer_in_shape",
    "inter_batch_diff",
    "load_svtf",
    "make_linear_schedule",
    "parse_op",
    "preprocess",
    "psnr",
    "random_mask",
    "renoise",
    "report",
    "residual",
    "resize_bilinear",
    "save_ppm_frames",
    "save_svtf",
    "soft_threshold",
    "solve",
    "spatial_gaussian_blur",
    "ssim",
    "standalone_cg",
    "subsample_steps",
    "synth_video",
    "temporal_psf",
    "tv_objective",
    "tweedie",
    "unconditional_sample",
]
