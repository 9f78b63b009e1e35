"""Labeled observations of a system whose output may be undefined.

An undefined outcome is represented by ``None`` (a distinguished variant),
never by a floating NaN: NaN propagation through arithmetic is silent and
easy to get wrong, whereas ``None`` fails loudly if it reaches a numeric
path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LabeledSample", "split_by_definedness", "stack_inputs"]


@dataclass(frozen=True)
class LabeledSample:
    """One evaluated input point and its observed performance value.

    ``value`` is ``None`` when the system produced no performance value.
    """

    x: np.ndarray
    value: float | None

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise ValueError("sample input must be finite")
        object.__setattr__(self, "x", x)
        if self.value is not None:
            v = float(self.value)
            if not np.isfinite(v):
                raise ValueError(
                    "undefined outcomes must be passed as None, not as a non-finite float"
                )
            object.__setattr__(self, "value", v)

    @property
    def defined(self) -> bool:
        return self.value is not None


def stack_inputs(samples) -> np.ndarray:
    """Stack sample inputs into an (n, k) matrix."""
    if len(samples) == 0:
        raise ValueError("no samples")
    return np.stack([s.x for s in samples])


def split_by_definedness(samples):
    """Return (X_all, defined_mask, defined_values).

    ``defined_values`` holds the observed values of the defined samples only,
    aligned with ``X_all[defined_mask]``.
    """
    X = stack_inputs(samples)
    mask = np.array([s.defined for s in samples], dtype=bool)
    values = np.array([s.value for s in samples if s.defined], dtype=float)
    return X, mask, values
