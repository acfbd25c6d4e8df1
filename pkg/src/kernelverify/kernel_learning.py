"""Learning spectral coefficients by maximizing the between/within trace ratio.

For a spectral model with eigenvectors ``v_r``, both scatter traces are
diagonal quadratic forms in ``mu``::

    Tr(S_b) = sum_r mu_r^2 f_r        Tr(S_w) = sum_r mu_r^2 g_r

The ratio is maximized under the linear constraint ``sum_r mu_r = beta`` with
``beta = sum_r sqrt(lambda_r)``, alternating the closed-form stationary point of
``Q(mu) = mu^T (D_b - alpha D_w) mu`` with the ratio update of ``alpha``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateStationaryPoint,
    DegenerateWithinScatter,
    DimensionMismatch,
    ValidationError,
)
from .spectral import SpectralModel

log = logging.getLogger(__name__)

FIXED_ALPHA = "fixed_alpha"
DINKELBACH = "dinkelbach"


@dataclass(frozen=True)
class ScatterSummaries:
    """Per-base-kernel between-class (``f``) and within-class (``g``) traces."""

    f: np.ndarray
    g: np.ndarray

    @property
    def p(self) -> int:
        return self.f.shape[0]

    @property
    def D_b(self) -> np.ndarray:
        return np.diag(self.f)

    @property
    def D_w(self) -> np.ndarray:
        return np.diag(self.g)

    def between(self, mu) -> float:
        mu = np.asarray(mu, dtype=float)
        return float(np.dot(mu ** 2, self.f))

    def within(self, mu) -> float:
        mu = np.asarray(mu, dtype=float)
        return float(np.dot(mu ** 2, self.g))


@dataclass(frozen=True)
class LearnOptions:
    mode: str = DINKELBACH
    alpha: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 100

    def __post_init__(self):
        if self.mode not in (FIXED_ALPHA, DINKELBACH):
            raise ValidationError(f"unknown learning mode {self.mode!r}")
        if self.mode == FIXED_ALPHA and not (self.alpha is not None and self.alpha > 0):
            raise ValidationError("fixed_alpha mode needs alpha > 0")
        if self.max_iter < 1 or not self.tol >= 0:
            raise ValidationError("max_iter must be >= 1 and tol >= 0")

    def to_dict(self) -> dict:
        if self.mode == FIXED_ALPHA:
            return {"mode": FIXED_ALPHA, "alpha": self.alpha}
        return {"mode": DINKELBACH, "tol": self.tol, "max_iter": self.max_iter}

    @classmethod
    def from_dict(cls, raw: dict) -> "LearnOptions":
        mode = raw.get("mode", DINKELBACH)
        if mode == FIXED_ALPHA:
            return cls(FIXED_ALPHA, alpha=float(raw["alpha"]))
        return cls(mode, tol=float(raw.get("tol", 1e-8)), max_iter=int(raw.get("max_iter", 100)))


@dataclass(frozen=True)
class LearnedCoefficients:
    mu: np.ndarray
    alpha: float
    beta: float
    iterations: int
    ratio_trace: float
    initial_ratio: float

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "ratio_trace": self.ratio_trace,
            "initial_ratio": self.initial_ratio,
            "p": int(self.mu.shape[0]),
            "mu_min": float(self.mu.min()),
            "mu_max": float(self.mu.max()),
        }


def _class_index(labels) -> tuple[np.ndarray, np.ndarray]:
    classes, inverse = np.unique(np.asarray(labels, dtype=str), return_inverse=True)
    return classes, inverse


def class_pair_weight(labels, j: int, k: int, i) -> float:
    """``1/n_i`` when rows j and k both belong to class ``i``, else 0."""
    labels = np.asarray(labels, dtype=str)
    i = str(i)
    if labels[j] == i and labels[k] == i:
        return 1.0 / np.count_nonzero(labels == i)
    return 0.0


def scatter_summaries(model: SpectralModel, labels, n: Optional[int] = None) -> ScatterSummaries:
    """Grouped-sum evaluation of ``f_r`` and ``g_r`` over the leading training block.

    With ``s_ir`` the sum of ``v_r`` over class i rows and ``s_r`` over all
    training rows::

        f_r = (sum_i s_ir^2 / n_i - s_r^2 / n) / n
        g_r = (sum_j v_r[j]^2 - sum_i s_ir^2 / n_i) / n
    """
    labels = np.asarray(labels, dtype=str)
    n = labels.shape[0] if n is None else n
    if labels.shape[0] != n or n > model.N:
        raise DimensionMismatch(f"{labels.shape[0]} labels for a training block of {n} rows")
    classes, inv = _class_index(labels)
    if classes.size < 2:
        raise ValidationError("scatter summaries need at least 2 classes")
    counts = np.bincount(inv, minlength=classes.size)

    Vt = model.eigenvectors[:n]
    onehot = np.zeros((n, classes.size))
    onehot[np.arange(n), inv] = 1.0
    class_sums = onehot.T @ Vt
    grouped = np.sum(class_sums ** 2 / counts[:, None], axis=0)
    total = Vt.sum(axis=0)
    f = (grouped - total ** 2 / n) / n
    g = (np.sum(Vt ** 2, axis=0) - grouped) / n
    return ScatterSummaries(f, g)


def criterion_q(summaries: ScatterSummaries, mu, alpha: float) -> float:
    """``Q(mu) = mu^T (D_b - alpha D_w) mu``."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    mu = np.asarray(mu, dtype=float)
    return float(np.dot(mu ** 2, summaries.f - alpha * summaries.g))


def solve_mu_from_diagonal(diag, beta: float) -> np.ndarray:
    """Stationary point ``beta M^-1 1 / (1^T M^-1 1)`` for diagonal ``M``.

    Entries smaller than ``1e-12 * max|M|`` are raised to that floor with their
    sign kept, so ``M -> -M`` yields exactly the same result.
    """
    diag = np.asarray(diag, dtype=float)
    floor = 1e-12 * np.max(np.abs(diag))
    if not floor > 0:
        raise DegenerateStationaryPoint("D_b - alpha D_w vanishes identically")
    diag = np.where(np.abs(diag) < floor, np.copysign(floor, diag), diag)
    w = 1.0 / diag
    denom = np.sum(w)
    if abs(denom) <= 1e-12:
        raise DegenerateStationaryPoint("theta^T M^-1 theta is numerically zero")
    return beta * w / denom


def solve_mu(summaries: ScatterSummaries, eigenvalues, alpha: float) -> np.ndarray:
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.shape != (summaries.p,):
        raise DimensionMismatch("eigenvalues and summaries differ in length")
    beta = float(np.sum(np.sqrt(eigenvalues)))
    return solve_mu_from_diagonal(summaries.f - alpha * summaries.g, beta)


def trace_ratio(summaries: ScatterSummaries, mu) -> float:
    den = summaries.within(mu)
    if not den > 0:
        raise DegenerateWithinScatter(f"within-class trace is {den:g}")
    return summaries.between(mu) / den


def learn_kernel(model: SpectralModel, labels, n: Optional[int] = None,
                 options: LearnOptions = LearnOptions()) -> LearnedCoefficients:
    """Spectral coefficients maximizing ``Tr(S_b) / Tr(S_w)``.

    In ``dinkelbach`` mode the iteration starts from ``alpha_0``, the ratio at
    ``mu_0 = sqrt(lambda)``, and keeps the best-ratio iterate seen (``mu_0``
    included), so the returned ratio never falls below the initial one.
    """
    summ = scatter_summaries(model, labels, n)
    lam = model.eigenvalues
    beta = float(np.sum(np.sqrt(lam)))
    mu0 = np.sqrt(lam)
    ratio0 = trace_ratio(summ, mu0)

    if options.mode == FIXED_ALPHA:
        mu = solve_mu(summ, lam, options.alpha)
        return LearnedCoefficients(mu, options.alpha, beta, 1, trace_ratio(summ, mu), ratio0)

    best_mu, best_ratio, best_alpha = mu0, ratio0, ratio0
    alpha = ratio0
    it = 0
    for it in range(1, options.max_iter + 1):
        mu = solve_mu(summ, lam, alpha)
        new_alpha = trace_ratio(summ, mu)
        log.debug("iteration %d: alpha %.12g -> %.12g", it, alpha, new_alpha)
        if new_alpha > best_ratio:
            best_mu, best_ratio, best_alpha = mu, new_alpha, alpha
        converged = abs(new_alpha - alpha) <= options.tol
        alpha = new_alpha
        if converged:
            break
    return LearnedCoefficients(best_mu, best_alpha, beta, it, best_ratio, ratio0)
