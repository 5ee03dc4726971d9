"""Fixed-length discriminative encodings for sets of instance vectors."""

from ._kernels import BACKEND, NUMBA_ENABLED
from .classify import LinearModel, accuracy, fit_linear_ovr, predict
from .codebook import (SIGMA_FLOOR, Codebook, GmmModel, InstanceSet, assign,
                       cluster_statistics, gmm_posteriors, train_gmm_em,
                       train_kmeans)
from .diagnostics import (MiReport, mi_report, mutual_information,
                          quantize_2bit, write_mi_csv, write_quantile_csv)
from .distdist import (Gaussian1D, MpmSolution, dtvd_closed_form,
                       misclassification_area, mpm_closed_form,
                       std_normal_cdf, tvd_numeric)
from .encoders import (DimensionPlan, Encoding, encode_d3, encode_fv,
                       encode_hybrid, encode_vlad, plan_dimensions)
from .errors import (DegenerateBoundaryError, FormatError,
                     InsufficientDataError, NumericError, SetencError,
                     TrainingDegenerateError, ValidationError)
from .io import (load_entities, load_manifest, read_codebook, read_gmm,
                 read_svec, save_manifest, write_codebook, write_gmm,
                 write_svec)
from .synthetic import MODES, generate_entities, write_corpus

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "SIGMA_FLOOR",
    "Codebook",
    "DegenerateBoundaryError",
    "DimensionPlan",
    "Encoding",
    "FormatError",
    "Gaussian1D",
    "GmmModel",
    "InsufficientDataError",
    "InstanceSet",
    "LinearModel",
    "MODES",
    "MiReport",
    "MpmSolution",
    "NumericError",
    "SetencError",
    "TrainingDegenerateError",
    "ValidationError",
    "accuracy",
    "assign",
    "cluster_statistics",
    "dtvd_closed_form",
    "encode_d3",
    "encode_fv",
    "encode_hybrid",
    "encode_vlad",
    "fit_linear_ovr",
    "generate_entities",
    "gmm_posteriors",
    "load_entities",
    "load_manifest",
    "mi_report",
    "misclassification_area",
    "mpm_closed_form",
    "mutual_information",
    "plan_dimensions",
    "predict",
    "quantize_2bit",
    "read_codebook",
    "read_gmm",
    "read_svec",
    "save_manifest",
    "std_normal_cdf",
    "train_gmm_em",
    "train_kmeans",
    "tvd_numeric",
    "write_codebook",
    "write_corpus",
    "write_gmm",
    "write_mi_csv",
    "write_quantile_csv",
    "write_svec",
]
