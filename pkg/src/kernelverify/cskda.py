"""Client-specific kernel discriminant analysis on a (learned) kernel matrix.

The kernel-space between-class scatter is reduced to its range, spanned by
the centred class means. Inside that ``m_b``-dimensional space each client
gets a one-dimensional Fisher direction ``S_t^-1 mu_i`` that separates it from
the rest of the training population. Everything is expressed through columns
of ``K_mu`` restricted to the training block, so any row of the transductive
sample set can be projected.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateBetweenScatter,
    SingularPopulationScatter,
    UnknownClient,
    ValidationError,
)
from .spectral import DEFAULT_REL_TOL, SpectralModel, k_mu_rows

CLIENT_MODEL = "OnC"
IMPOSTOR_MODEL = "OnI"
MODES = (CLIENT_MODEL, IMPOSTOR_MODEL)
_MODE_ALIASES = {"client_model": CLIENT_MODEL, "impostor_model": IMPOSTOR_MODEL,
                 "onc": CLIENT_MODEL, "oni": IMPOSTOR_MODEL}


def normalize_mode(mode: str) -> str:
    if mode in MODES:
        return mode
    try:
        return _MODE_ALIASES[mode.lower()]
    except KeyError:
        raise ValidationError(f"unknown classification mode {mode!r}") from None


@dataclass(frozen=True)
class FitOptions:
    rel_tol: float = DEFAULT_REL_TOL
    max_condition: float = 1e12
    ridge_scale: float = 1e-8
    normalize_directions: bool = True


@dataclass(frozen=True, eq=False)
class CskdaModel:
    """Fitted client-specific discriminant model.

    Attributes
    ----------
    client_ids : tuple of str
    class_counts : ndarray, shape (c,)
        Training rows per client, ``n_i``.
    coef : ndarray, shape (n, m_b)
        Maps a centred training-block kernel column to reduced coordinates;
        folds together the class indicator structure, ``B``, ``E_m`` and
        ``U_b^-1/2``.
    train_center : ndarray, shape (n,)
        Mean training kernel column, subtracted before projection.
    basis : ndarray, shape (c, m_b)
        Retained eigenvectors ``E_m`` of ``P_b^T P_b``.
    between_eigenvalues : ndarray, shape (m_b,)
    client_means, impostor_means, directions : ndarray, shape (c, m_b)
    st_inverse : ndarray, shape (m_b, m_b)
    projected_client_means, projected_impostor_means : ndarray, shape (c,)
    """

    client_ids: tuple
    class_counts: np.ndarray
    coef: np.ndarray
    train_center: np.ndarray
    basis: np.ndarray
    between_eigenvalues: np.ndarray
    client_means: np.ndarray
    impostor_means: np.ndarray
    directions: np.ndarray
    st_inverse: np.ndarray
    projected_client_means: np.ndarray
    projected_impostor_means: np.ndarray
    st_ridge: float = 0.0

    @property
    def n(self) -> int:
        return int(self.class_counts.sum())

    @property
    def m_b(self) -> int:
        return self.basis.shape[1]

    def client_index(self, client) -> int:
        try:
            return self.client_ids.index(str(client))
        except ValueError:
            raise UnknownClient(f"unknown client {client!r}") from None

    def impostor_ratio(self) -> np.ndarray:
        """``n_i / (n - n_i)`` per client."""
        return self.class_counts / (self.n - self.class_counts)

    _ARRAYS = ("class_counts", "coef", "train_center", "basis", "between_eigenvalues",
               "client_means", "impostor_means", "directions", "st_inverse",
               "projected_client_means", "projected_impostor_means")


@dataclass(frozen=True)
class ClaimScore:
    claimed_client: str
    d_c: float
    d_i: float
    projected: float


def between_scatter_gram(K_t, labels, client_ids=None) -> np.ndarray:
    """``P_b^T P_b`` from the training block of the kernel matrix.

    ``(1/n) B (A - 1/n)^T K_t (A - 1/n) B`` with ``A`` the n x c block matrix of
    ``1/n_i`` entries and ``B = diag(sqrt(n_i))``.
    """
    K_t = np.asarray(K_t, dtype=float)
    labels = np.asarray(labels, dtype=str)
    if K_t.shape != (labels.size, labels.size):
        raise ValidationError(f"kernel block {K_t.shape} does not match {labels.size} labels")
    A, counts = _class_indicators(labels, client_ids)
    n = labels.size
    C = A - 1.0 / n
    B = np.sqrt(counts)
    G = (B[:, None] * (C.T @ K_t @ C) * B[None, :]) / n
    return 0.5 * (G + G.T)


def _class_indicators(labels, client_ids=None):
    """Block matrix ``A`` (n x c, entries ``1/n_i``) and the class counts."""
    ids = tuple(client_ids) if client_ids is not None else tuple(dict.fromkeys(labels))
    onehot = (labels[:, None] == np.asarray(ids, dtype=str)[None, :]).astype(float)
    counts = onehot.sum(axis=0)
    if np.any(counts == 0) or not np.all(onehot.sum(axis=1) == 1):
        raise ValidationError("every training label must match exactly one non-empty client class")
    return onehot / counts, counts


def _invert_population_scatter(S_t, opts: FitOptions):
    trace = float(np.trace(S_t))
    if not np.all(np.isfinite(S_t)) or not trace > 0:
        raise SingularPopulationScatter("population scatter is zero or non-finite")
    evals = np.linalg.eigvalsh(S_t)
    ridge = 0.0
    if evals[0] <= 0 or evals[-1] / evals[0] > opts.max_condition:
        ridge = opts.ridge_scale * trace / S_t.shape[0]
        S_t = S_t + ridge * np.eye(S_t.shape[0])
    try:
        inv = np.linalg.inv(S_t)
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(S_t)
    if not np.all(np.isfinite(inv)):
        inv = np.linalg.pinv(S_t)
    return 0.5 * (inv + inv.T), ridge


def fit(model: SpectralModel, mu, dataset, options: FitOptions = FitOptions()) -> CskdaModel:
    """Fit per-client discriminants on ``K_mu``; training rows must lead."""
    n = dataset.n
    labels = np.asarray(dataset.train_labels, dtype=str)
    client_ids = tuple(dataset.client_ids)
    if len(client_ids) < 2:
        raise ValidationError("at least two clients are required")

    K_t = k_mu_rows(model, mu, slice(0, n), slice(0, n))
    K_t = 0.5 * (K_t + K_t.T)
    A, counts = _class_indicators(labels, client_ids)
    C = A - 1.0 / n
    B = np.sqrt(counts)

    G = (B[:, None] * (C.T @ K_t @ C) * B[None, :]) / n
    w, E = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(-w, kind="stable")
    w, E = w[order], E[:, order]
    # round-off floor relative to the total kernel scatter
    if not w[0] > options.rel_tol * max(np.trace(K_t) / n, 0.0):
        raise DegenerateBetweenScatter("between-class scatter has no positive eigenvalue")
    keep = w > options.rel_tol * w[0]
    w, E = w[keep], E[:, keep]

    coef = (C * B[None, :]) @ E / np.sqrt(w)[None, :] / np.sqrt(n)
    center = K_t.mean(axis=1)
    Y = coef.T @ (K_t - center[:, None])

    client_means = A.T @ Y.T
    ratio = counts / (n - counts)
    impostor_means = -(ratio[:, None] * client_means)

    S_t = Y @ Y.T / n
    st_inv, ridge = _invert_population_scatter(0.5 * (S_t + S_t.T), options)
    directions = client_means @ st_inv
    if options.normalize_directions:
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        directions = directions / np.where(norms > 0, norms, 1.0)

    proj_client = np.einsum("ij,ij->i", directions, client_means)
    proj_impostor = np.einsum("ij,ij->i", directions, impostor_means)
    spread = np.abs(proj_client - proj_impostor)
    for cid, gap in zip(client_ids, spread):
        if not gap > 1e-12 * max(spread.max(), 1e-300):
            warnings.warn(f"client {cid!r}: projected client and impostor means coincide",
                          RuntimeWarning, stacklevel=2)

    return CskdaModel(client_ids, counts, coef, center, E, w, client_means, impostor_means,
                      directions, st_inv, proj_client, proj_impostor, ridge)


@dataclass(frozen=True, eq=False)
class ModelPack:
    """A spectral model, its coefficients and the discriminant fitted on them."""

    spectral: SpectralModel
    mu: np.ndarray
    cskda: CskdaModel

    def kernel_columns(self, indices) -> np.ndarray:
        """Training-block kernel values against the given rows, shape (n, k)."""
        return k_mu_rows(self.spectral, self.mu, slice(0, self.cskda.n), indices)

    def reduce_columns(self, cols) -> np.ndarray:
        """Reduced coordinates of raw training-block kernel columns (n, k)."""
        return self.cskda.coef.T @ (cols - self.cskda.train_center[:, None])

    def reduce(self, indices) -> np.ndarray:
        """Reduced coordinates of the given rows, shape (m_b, k)."""
        return self.reduce_columns(self.kernel_columns(indices))

    @cached_property
    def reduced(self) -> np.ndarray:
        return self.reduce(slice(None))

    def save(self, directory) -> None:
        """Write ``model.json`` (metadata) and ``arrays.npz`` (all arrays)."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        m = self.cskda
        arrays = {name: getattr(m, name) for name in CskdaModel._ARRAYS}
        arrays.update(eigenvalues=self.spectral.eigenvalues,
                      eigenvectors=self.spectral.eigenvectors, mu=self.mu)
        np.savez(out / "arrays.npz", **arrays)
        meta = {"client_ids": list(m.client_ids), "n": m.n, "m_b": m.m_b,
                "p": self.spectral.p, "N": self.spectral.N, "st_ridge": m.st_ridge}
        (out / "model.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "ModelPack":
        src = Path(directory)
        meta = json.loads((src / "model.json").read_text(encoding="utf-8"))
        with np.load(src / "arrays.npz") as data:
            arrays = {k: data[k] for k in data.files}
        spectral = SpectralModel(arrays.pop("eigenvalues"), arrays.pop("eigenvectors"))
        mu = arrays.pop("mu")
        cskda = CskdaModel(client_ids=tuple(meta["client_ids"]), st_ridge=meta["st_ridge"], **arrays)
        return cls(spectral, mu, cskda)


def _check_index(pack: ModelPack, sample_index: int) -> int:
    if not 0 <= sample_index < pack.spectral.N:
        raise IndexError(f"sample index {sample_index} outside [0, {pack.spectral.N})")
    return int(sample_index)


def project(pack: ModelPack, sample_index: int, client) -> float:
    """One-dimensional client-specific projection of a row of the sample set."""
    i = pack.cskda.client_index(client)
    idx = _check_index(pack, sample_index)
    y = pack.reduce([idx])[:, 0]
    return float(pack.cskda.directions[i] @ y)


def score_claim(pack: ModelPack, sample_index: int, claimed) -> ClaimScore:
    i = pack.cskda.client_index(claimed)
    idx = _check_index(pack, sample_index)
    z = float(pack.cskda.directions[i] @ pack.reduced[:, idx])
    return ClaimScore(str(claimed), abs(z - pack.cskda.projected_client_means[i]),
                      abs(z - pack.cskda.projected_impostor_means[i]), z)


def score_claims(pack: ModelPack, sample_indices, claimed) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`score_claim`; returns ``(d_c, d_i, projected)`` arrays."""
    idx = np.asarray(sample_indices, dtype=int)
    ci = np.array([pack.cskda.client_index(c) for c in claimed], dtype=int)
    z = np.einsum("ij,ji->i", pack.cskda.directions[ci], pack.reduced[:, idx])
    return (np.abs(z - pack.cskda.projected_client_means[ci]),
            np.abs(z - pack.cskda.projected_impostor_means[ci]), z)


def accepts(distances, mode: str, threshold: float) -> np.ndarray:
    """Accept mask: client model accepts ``d_c <= t``; impostor model accepts ``d_i > t``."""
    distances = np.asarray(distances, dtype=float)
    if normalize_mode(mode) == CLIENT_MODEL:
        return distances <= threshold
    return distances > threshold


def decide(score: ClaimScore, mode: str, threshold: float) -> str:
    if normalize_mode(mode) == CLIENT_MODEL:
        return "accept" if score.d_c <= threshold else "reject"
    return "accept" if score.d_i > threshold else "reject"
