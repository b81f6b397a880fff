"""scikit-learn style wrappers around scoring and program execution.

``CompositionalityScorer`` is fitted on a dataset and turns model responses
into rows of ``[L(P+), E(P), L(P), C(P)]``.  ``ProgramPredictor`` is fitted on
a program and predicts grids for inputs.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import Dataset, Grid
from .interpreter import run_program
from .lang import extract_code_block, parse
from .pipeline import score_response
from .records import c_score, l_total
from .validation import (
    check_budget,
    check_dataset,
    check_inputs,
    check_is_fitted,
    check_responses,
    check_same_length,
)

FEATURES = ("l_plus", "errors", "l_total", "c_score")


class CompositionalityScorer(TransformerMixin, BaseEstimator):
    def __init__(self, max_steps: int = 100_000, max_collection_size: int = 4096):
        self.max_steps = max_steps
        self.max_collection_size = max_collection_size

    def fit(self, X: Dataset, y=None) -> CompositionalityScorer:
        self.dataset_ = check_dataset(X)
        self.budget_ = check_budget(self.max_steps, self.max_collection_size)
        return self

    def transform(self, X: Sequence[str]) -> np.ndarray:
        check_is_fitted(self, ["dataset_"])
        rows = []
        self.failure_modes_ = []
        for response in check_responses(X):
            s = score_response(response, self.dataset_, self.budget_)
            total = l_total(s.l_plus, s.errors)
            rows.append((s.l_plus, s.errors, total, c_score(total)))
            self.failure_modes_.append(s.failure_mode.value)
        return np.asarray(rows, dtype=float).reshape(-1, len(FEATURES))

    def score(self, X: Sequence[str], y=None) -> float:
        """Mean C(P) over the responses."""
        return float(self.transform(X)[:, 3].mean())

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(FEATURES, dtype=object)


class ProgramPredictor(BaseEstimator):
    def __init__(self, max_steps: int = 100_000, max_collection_size: int = 4096):
        self.max_steps = max_steps
        self.max_collection_size = max_collection_size

    def fit(self, X: str, y=None) -> ProgramPredictor:
        source = extract_code_block(X) if "```" in X or "~~~" in X else X
        if source is None:
            raise ValueError("no program found")
        outcome = parse(source)
        if not outcome.ok:
            raise ValueError(f"program does not parse: {outcome.diagnostics[0]}")
        self.module_ = outcome.result
        self.budget_ = check_budget(self.max_steps, self.max_collection_size)
        return self

    def predict(self, X) -> list[Optional[Grid]]:
        """One grid per input, ``None`` where execution failed."""
        check_is_fitted(self, ["module_"])
        return [run_program(self.module_, x, self.budget_).grid for x in check_inputs(X)]

    def score(self, X, y: Sequence[Grid]) -> float:
        """Fraction of inputs whose predicted grid matches ``y`` exactly."""
        pred = self.predict(X)
        check_same_length(pred, y, "inputs and targets")
        if not pred:
            return 0.0
        return sum(p == t for p, t in zip(pred, y)) / len(pred)
