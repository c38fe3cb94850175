from .learners import (ALGORITHMS, GRADIENT_BOOSTING, GRADIENT_CAPABLE, KNN,
                       LINEAR_REGRESSION, LINEAR_SVM, LOGISTIC_REGRESSION, MLP,
                       CapabilityError, DegenerateLabelsError, ModelSpec,
                       TrainedModel, fit, per_record_gradient, per_record_loss,
                       predict)
from .pipeline import Pipeline, TableView
from .search import SearchResult, Trial, holdout_rows, random_search

__all__ = [
    "ALGORITHMS", "GRADIENT_BOOSTING", "GRADIENT_CAPABLE", "KNN",
    "LINEAR_REGRESSION", "LINEAR_SVM", "LOGISTIC_REGRESSION", "MLP",
    "CapabilityError", "DegenerateLabelsError", "ModelSpec", "TrainedModel",
    "Pipeline", "TableView", "SearchResult", "Trial", "holdout_rows",
    "random_search", "fit", "predict", "per_record_gradient", "per_record_loss",
]
