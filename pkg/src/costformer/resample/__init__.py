"""Class-imbalance resampling: SVM-SMOTE oversampling and repeated ENN."""

from ._backend import BACKEND
from .enn import enn_marks, enn_pass, repeated_enn
from .knn import NeighborIndex, knn_query
from .smote import ResampleReport, svm_smote
from .svm import ConvergenceWarning, LinearSvmModel, dual_objective, fit_linear_svm

__all__ = [
    "BACKEND", "ConvergenceWarning", "LinearSvmModel", "NeighborIndex", "ResampleReport", "dual_objective",
    "enn_marks", "enn_pass", "fit_linear_svm", "knn_query", "repeated_enn", "svm_smote",
]
