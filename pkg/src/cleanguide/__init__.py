"""Budget-aware, step-by-step feature cleaning recommendations for ML tasks."""

__version__ = "0.1.0"

from . import (baselines, estimator, harness, metrics, models, pollution,
               recommender, tabular)

__all__ = ["baselines", "estimator", "harness", "metrics", "models",
           "pollution", "recommender", "tabular", "__version__"]
