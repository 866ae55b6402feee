"""Opinion spam detection with cumulative relative frequency features."""

from .classifiers import DEFAULT_SPECS, ClassifierSpec, fit_model, parse_spec, parse_specs, predict_labels, predict_scores
from .data import FEATURE_NAMES, Dataset, LabeledMatrix, Review, ReviewerProfile, BusinessStats, validate_dataset
from .evaluation import compare_feature_sets, cross_validate, cross_validate_matrix
from .features import build_matrix
from .ingest import derive_business_stats, load_dataset, tag_reviewers, write_dataset
from .kernels import BACKEND
from .transform import eval_crfd, fit_crfd, transform_matrix

__version__ = "0.1.0"
