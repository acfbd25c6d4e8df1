"""Rank-one spectral decomposition of a Gram matrix and its reweighted family
``K_mu = sum_r mu_r^2 v_r v_r^T``."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NoPositiveEigenvalue, NotSymmetric, ValidationError

DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Positive part of a Gram matrix spectrum.

    Attributes
    ----------
    eigenvalues : ndarray, shape (p,)
        Strictly positive, sorted descending.
    eigenvectors : ndarray, shape (N, p)
        Orthonormal columns; column r pairs with ``eigenvalues[r]``.
    mu : ndarray, shape (p,), optional
        Learned spectral coefficients.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mu: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def N(self) -> int:
        return self.eigenvectors.shape[0]

    def baseline_mu(self) -> np.ndarray:
        """Coefficients that reproduce the original Gram matrix."""
        return np.sqrt(self.eigenvalues)

    def with_mu(self, mu) -> "SpectralModel":
        mu = _check_mu(self, mu)
        return replace(self, mu=mu)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "N": self.N,
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.ravel(order="C").tolist(),
            "mu": None if self.mu is None else self.mu.tolist(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SpectralModel":
        vals = np.asarray(raw["eigenvalues"], dtype=float)
        vecs = np.asarray(raw["eigenvectors"], dtype=float).reshape(raw["N"], raw["p"])
        mu = None if raw.get("mu") is None else np.asarray(raw["mu"], dtype=float)
        return cls(vals, vecs, mu)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SpectralModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def decompose(K, rel_tol: float = DEFAULT_REL_TOL) -> SpectralModel:
    """Eigendecompose ``K`` keeping eigenpairs with ``lambda > rel_tol * lambda_max``.

    Each eigenvector is signed so that its largest-magnitude entry is
    non-negative.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {K.shape}")
    if not 0 < rel_tol < 1:
        raise ValidationError("rel_tol must lie in (0, 1)")
    scale = np.max(np.abs(K)) if K.size else 0.0
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-10 * max(scale, 1e-300):
        raise NotSymmetric("kernel matrix is not symmetric")

    w, V = np.linalg.eigh(0.5 * (K + K.T))
    lam_max = w.max() if w.size else 0.0
    if not lam_max > 0:
        raise NoPositiveEigenvalue("kernel matrix has no positive eigenvalue")
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    keep = w > rel_tol * lam_max
    w, V = w[keep], V[:, keep]

    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivot, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    V = V * signs
    w.setflags(write=False)
    V.setflags(write=False)
    return SpectralModel(w, V)


def _check_mu(model: SpectralModel, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (model.p,):
        raise DimensionMismatch(f"mu has shape {mu.shape}, expected ({model.p},)")
    return mu


def assemble_k_mu(model: SpectralModel, mu) -> np.ndarray:
    mu = _check_mu(model, mu)
    V = model.eigenvectors
    K = (V * mu ** 2) @ V.T
    return 0.5 * (K + K.T)


def k_mu_rows(model: SpectralModel, mu, rows, cols=None) -> np.ndarray:
    """Block ``K_mu[rows, cols]`` without forming the full matrix."""
    mu = _check_mu(model, mu)
    V = model.eigenvectors
    Vc = V if cols is None else V[cols]
    return (V[rows] * mu ** 2) @ Vc.T


def entry(model: SpectralModel, mu, i: int, j: int) -> float:
    """``(K_mu)_ij = b_i^T K_mu b_j`` computed from eigenvector entries."""
    mu = _check_mu(model, mu)
    for idx in (i, j):
        if not 0 <= idx < model.N:
            raise IndexError(f"index {idx} outside [0, {model.N})")
    V = model.eigenvectors
    return float(np.sum(mu ** 2 * V[i] * V[j]))
