"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import Dataset, InputString
from .interpreter import ExecBudget


def check_dataset(dataset: object) -> Dataset:
    if not isinstance(dataset, Dataset):
        raise TypeError(f"expected a Dataset, got {type(dataset).__name__}")
    return dataset


def check_responses(responses: object) -> list[str]:
    if isinstance(responses, str):
        return [responses]
    try:
        items = list(responses)  # type: ignore[arg-type]
    except TypeError:
        raise TypeError("responses must be a string or an iterable of strings") from None
    for i, r in enumerate(items):
        if not isinstance(r, str):
            raise TypeError(f"response {i} is {type(r).__name__}, not str")
    return items


def check_inputs(inputs: object) -> list[InputString]:
    if isinstance(inputs, (str, InputString)):
        inputs = [inputs]
    out = []
    for x in inputs:  # type: ignore[union-attr]
        out.append(x if isinstance(x, InputString) else InputString(str(x)))
    return out


def check_budget(max_steps: int, max_collection_size: int) -> ExecBudget:
    for name, value in (("max_steps", max_steps), ("max_collection_size", max_collection_size)):
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise ValueError(f"{name} must be a positive int, got {value!r}")
    return ExecBudget(max_steps, max_collection_size)


def check_same_length(a: Sequence, b: Sequence, what: str = "arguments") -> None:
    if len(a) != len(b):
        raise ValueError(f"{what} have different lengths: {len(a)} != {len(b)}")


def check_is_fitted(estimator: object, attributes: Iterable[str]) -> None:
    from sklearn.exceptions import NotFittedError

    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")
