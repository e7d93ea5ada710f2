"""Estimator-style wrapper: fit on a channel spec, predict rate-tuple membership."""

from __future__ import annotations

import inspect
from typing import Optional

import numpy as np

from . import cfcore as cf
from .intlab import IntMatrix


class NotFittedError(RuntimeError):
    pass


class ComputeForwardRegion:
    """Rate region of a channel as a fitted model.

    ``fit(spec)`` computes the simultaneous or sequential region for the
    coefficient matrix ``A`` (identity when None).  ``predict(X)`` returns a
    boolean per row of X: whether that rate tuple lies in the closed region.
    Parameters follow the get_params / set_params convention so the object
    can be cloned and swept like any scikit-learn estimator.
    """

    def __init__(self, A=None, mode: str = "simultaneous", b_max: int = 3, c_max: int = 5,
                 lb_range: Optional[tuple[int, int]] = None, det_cap: Optional[int] = None):
        self.A = A
        self.mode = mode
        self.b_max = b_max
        self.c_max = c_max
        self.lb_range = lb_range
        self.det_cap = det_cap

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "ComputeForwardRegion":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def fit(self, spec, y=None) -> "ComputeForwardRegion":
        if self.mode not in ("simultaneous", "sequential"):
            raise ValueError(f"unknown mode {self.mode!r}")
        budget = cf.SearchBudget(self.b_max, self.c_max, self.lb_range, self.det_cap)
        A = IntMatrix.identity(spec.K) if self.A is None else IntMatrix.coerce(self.A)
        run = cf.simultaneous_R if self.mode == "simultaneous" else cf.sequential_region
        self.report_ = run(spec, A, budget)
        self.region_ = self.report_.region
        self.n_users_ = spec.K
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "region_"):
            raise NotFittedError("call fit before predict")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_users_:
            raise ValueError(f"expected {self.n_users_} rates per row, got {X.shape[1]}")
        return self.region_.contains_points(X)

    def score(self, X, y) -> float:
        """Fraction of rows whose membership matches y."""
        return float(np.mean(self.predict(X) == np.asarray(y, dtype=bool)))
