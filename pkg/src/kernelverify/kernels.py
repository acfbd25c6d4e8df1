"""Kernel functions and transductive Gram matrices."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, ValidationError

FAMILIES = ("polynomial", "rbf", "linear")


@dataclass(frozen=True)
class KernelSpec:
    """Polynomial ``(a<x,y> + b)^d`` or RBF ``exp(-||x-y||^2 / sigma^2)``.

    ``linear`` is the polynomial kernel with a=1, b=0, d=1.
    """

    family: str = "linear"
    poly_a: float = 1.0
    poly_b: float = 0.0
    poly_d: int = 1
    rbf_sigma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown kernel family {self.family!r}")
        if self.family == "polynomial" and (int(self.poly_d) != self.poly_d or self.poly_d < 1):
            raise ValidationError("polynomial degree must be an integer >= 1")
        if self.family == "rbf" and not self.rbf_sigma > 0:
            raise ValidationError("rbf sigma must be positive")
        if self.family == "linear":
            object.__setattr__(self, "poly_a", 1.0)
            object.__setattr__(self, "poly_b", 0.0)
            object.__setattr__(self, "poly_d", 1)

    @classmethod
    def polynomial(cls, a: float, b: float, d: int) -> "KernelSpec":
        return cls("polynomial", poly_a=float(a), poly_b=float(b), poly_d=int(d))

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", rbf_sigma=float(sigma))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    def to_dict(self) -> dict:
        if self.family == "rbf":
            return {"family": "rbf", "sigma": self.rbf_sigma}
        if self.family == "linear":
            return {"family": "linear"}
        return {"family": "polynomial", "a": self.poly_a, "b": self.poly_b, "d": self.poly_d}

    @classmethod
    def from_dict(cls, raw: dict) -> "KernelSpec":
        family = raw.get("family")
        try:
            if family == "rbf":
                return cls.rbf(raw["sigma"])
            if family == "polynomial":
                return cls.polynomial(raw["a"], raw["b"], raw["d"])
        except KeyError as exc:
            raise ValidationError(f"kernel {family!r} missing parameter {exc}") from exc
        if family == "linear":
            return cls.linear()
        raise ValidationError(f"unknown kernel family {family!r}")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``linear``, ``rbf:sigma=20``, ``poly:a=1e-4,b=1,d=2`` or a JSON object."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_dict(json.loads(text))
        family, _, params = text.partition(":")
        family = {"poly": "polynomial"}.get(family, family)
        raw: dict = {"family": family}
        for item in filter(None, params.split(",")):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValidationError(f"bad kernel parameter {item!r}")
            raw[key.strip()] = float(value)
        if "d" in raw:
            raw["d"] = int(raw["d"])
        return cls.from_dict(raw)

    def label(self) -> str:
        if self.family == "rbf":
            return f"rbf(sigma={self.rbf_sigma:g})"
        if self.family == "linear":
            return "linear"
        return f"poly(a={self.poly_a:g},b={self.poly_b:g},d={self.poly_d})"


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    if spec.family == "rbf":
        diff = x - y
        return float(np.exp(-np.dot(diff, diff) / spec.rbf_sigma ** 2))
    return float((spec.poly_a * np.dot(x, y) + spec.poly_b) ** spec.poly_d)


def kernel_block(spec: KernelSpec, X, Y) -> np.ndarray:
    """Rectangular block ``[k(x_i, y_j)]``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"feature dimensions differ: {X.shape[1]} vs {Y.shape[1]}")
    if spec.family == "rbf":
        return np.exp(-cdist(X, Y, "sqeuclidean") / spec.rbf_sigma ** 2)
    return (spec.poly_a * (X @ Y.T) + spec.poly_b) ** spec.poly_d


def gram_matrix(spec: KernelSpec, dataset) -> np.ndarray:
    """Kernel matrix over all N rows (train, evaluation and test together).

    ``dataset`` may be a VerificationDataset or a plain sample matrix.
    """
    X = getattr(dataset, "samples", dataset)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("gram_matrix needs a non-empty 2-D sample matrix")
    K = kernel_block(spec, X, X)
    return 0.5 * (K + K.T)
