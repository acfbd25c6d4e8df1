"""Verification datasets: CSV/JSON ingestion, histogram equalization and a
synthetic protocol generator.

Rows are always stored in canonical order: every train row first, then
evaluation rows, then test rows, with file order kept inside each block.
``source_index`` records where each canonical row came from.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    InsufficientTraining,
    MissingRole,
    ProtocolError,
    UnknownIdentity,
    ValidationError,
)

TRAIN = "train"
EVALUATION = "evaluation"
TEST = "test"
ROLES = (TRAIN, EVALUATION, TEST)

WARPS = ("none", "quadratic-lift", "radial")


@dataclass(frozen=True)
class ProtocolConfig:
    """Client/impostor split plus the positional role list of every identity."""

    client_ids: tuple[str, ...]
    impostor_ids: tuple[str, ...]
    roles: dict[str, tuple[str, ...]]

    def __post_init__(self):
        overlap = set(self.client_ids) & set(self.impostor_ids)
        if overlap:
            raise ProtocolError(f"identities listed as both client and impostor: {sorted(overlap)}")
        for ident, seq in self.roles.items():
            bad = [r for r in seq if r not in ROLES]
            if bad:
                raise ProtocolError(f"identity {ident!r} has unknown roles {bad}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ProtocolConfig":
        try:
            clients = tuple(str(c) for c in raw["clients"])
            impostors = tuple(str(c) for c in raw.get("impostors", []))
            roles = {str(k): tuple(v) for k, v in raw["roles"].items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise ProtocolError(f"malformed protocol: {exc}") from exc
        return cls(clients, impostors, roles)

    def to_dict(self) -> dict:
        return {
            "clients": list(self.client_ids),
            "impostors": list(self.impostor_ids),
            "roles": {k: list(v) for k, v in self.roles.items()},
        }


@dataclass(frozen=True, eq=False)
class VerificationDataset:
    """Samples with identity labels and protocol roles, in canonical order.

    Attributes
    ----------
    samples : ndarray, shape (N, M)
    labels : ndarray of str, shape (N,)
    roles : ndarray of str, shape (N,)
    client_ids, impostor_ids : tuple of str
    source_index : ndarray of int, shape (N,)
        Row position in the original input for each canonical row.
    """

    samples: np.ndarray
    labels: np.ndarray
    roles: np.ndarray
    client_ids: tuple[str, ...]
    impostor_ids: tuple[str, ...]
    source_index: np.ndarray = field(default=None)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise DimensionMismatch("samples must be a 2-D array")
        labels = np.asarray(self.labels, dtype=str)
        roles = np.asarray(self.roles, dtype=str)
        if labels.shape != (samples.shape[0],) or roles.shape != labels.shape:
            raise DimensionMismatch("labels and roles must have one entry per sample")
        src = np.arange(len(labels)) if self.source_index is None else np.asarray(self.source_index)

        rank = np.array([ROLES.index(r) if r in ROLES else -1 for r in roles], dtype=int)
        if np.any(rank < 0):
            raise MissingRole(f"unknown role values {sorted(set(roles[rank < 0]))}")
        order = np.argsort(rank, kind="stable")
        samples, labels, roles, src = samples[order], labels[order], roles[order], src[order]
        for arr in (samples, labels, roles, src):
            arr.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "source_index", src)
        object.__setattr__(self, "client_ids", tuple(self.client_ids))
        object.__setattr__(self, "impostor_ids", tuple(self.impostor_ids))
        self._validate()

    def _validate(self):
        clients, impostors = set(self.client_ids), set(self.impostor_ids)
        if clients & impostors:
            raise ProtocolError("client and impostor identities overlap")
        unknown = set(self.labels) - clients - impostors
        if unknown:
            raise MissingRole(f"samples of identities {sorted(unknown)} have no protocol designation")
        train_labels = self.labels[self.roles == TRAIN]
        if set(train_labels) & impostors:
            raise ProtocolError("impostor identities may not have training rows")
        for cid in self.client_ids:
            if np.count_nonzero(train_labels == cid) < 2:
                raise InsufficientTraining(f"client {cid!r} has fewer than 2 training rows")

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def M(self) -> int:
        return self.samples.shape[1]

    @property
    def n(self) -> int:
        return int(np.count_nonzero(self.roles == TRAIN))

    @property
    def E(self) -> int:
        return int(np.count_nonzero(self.roles == EVALUATION))

    @property
    def I(self) -> int:  # noqa: E743
        return int(np.count_nonzero(self.roles == TEST))

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[: self.n]

    def indices(self, role: str) -> np.ndarray:
        return np.flatnonzero(self.roles == role)

    def with_samples(self, samples: np.ndarray) -> "VerificationDataset":
        """Copy with replaced feature rows (canonical order kept)."""
        return VerificationDataset(samples, self.labels, self.roles, self.client_ids,
                                   self.impostor_ids, self.source_index)


def build_dataset(samples, labels, protocol: ProtocolConfig) -> VerificationDataset:
    """Attach protocol roles to rows given in file order."""
    labels = [str(l) for l in labels]
    present = set(labels)
    for ident in (*protocol.client_ids, *protocol.impostor_ids, *protocol.roles):
        if ident not in present:
            raise UnknownIdentity(f"protocol references identity {ident!r} absent from samples")

    seen: dict[str, int] = {}
    roles = []
    for row, ident in enumerate(labels):
        k = seen.get(ident, 0)
        seen[ident] = k + 1
        seq = protocol.roles.get(ident, ())
        if k >= len(seq):
            raise MissingRole(f"row {row} (identity {ident!r}, sample {k}) has no role")
        roles.append(seq[k])
    for ident, seq in protocol.roles.items():
        if len(seq) != seen[ident]:
            raise ProtocolError(
                f"identity {ident!r} has {seen[ident]} rows but {len(seq)} roles")
    return VerificationDataset(np.asarray(samples, dtype=float), np.asarray(labels), np.asarray(roles),
                               protocol.client_ids, protocol.impostor_ids)


def read_samples_csv(path) -> tuple[np.ndarray, list[str]]:
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty samples file")
        width = None
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            feats = rec[:-1]
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise DimensionMismatch(f"{path}:{lineno}: {len(feats)} features, expected {width}")
            try:
                rows.append([float(v) for v in feats])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            labels.append(rec[-1])
    if width is not None and len(header) - 1 != width:
        raise DimensionMismatch(f"{path}: header names {len(header) - 1} features, rows have {width}")
    return np.array(rows, dtype=float).reshape(len(rows), width or 0), labels


def load_dataset(samples_path, protocol_path) -> VerificationDataset:
    samples, labels = read_samples_csv(samples_path)
    with open(protocol_path, encoding="utf-8") as fh:
        protocol = ProtocolConfig.from_dict(json.load(fh))
    return build_dataset(samples, labels, protocol)


def save_dataset(dataset: VerificationDataset, samples_path, protocol_path) -> None:
    """Write ``dataset`` back out in its original row order."""
    order = np.argsort(dataset.source_index, kind="stable")
    roles: dict[str, list[str]] = {}
    with open(samples_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{k}" for k in range(dataset.M)] + ["identity"])
        for i in order:
            w.writerow([repr(float(v)) for v in dataset.samples[i]] + [dataset.labels[i]])
            roles.setdefault(str(dataset.labels[i]), []).append(str(dataset.roles[i]))
    protocol = {"clients": list(dataset.client_ids), "impostors": list(dataset.impostor_ids),
                "roles": roles}
    Path(protocol_path).write_text(json.dumps(protocol, indent=2) + "\n", encoding="utf-8")


def histogram_equalize(image, width: int, height: int) -> np.ndarray:
    """Cumulative-histogram remap of an 8-bit image given as a flat vector.

    A constant image has no dynamic range to stretch and maps to all zeros.
    """
    img = np.asarray(image)
    if img.ndim != 1 or img.size != width * height:
        raise DimensionMismatch(f"expected {width * height} pixels, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or np.any(img != np.round(img)) or img.min() < 0 or img.max() > 255:
        raise ValidationError("pixels must be integers in [0, 255]")
    levels = img.astype(np.int64)
    cdf = np.cumsum(np.bincount(levels, minlength=256))
    total = img.size
    cdf_min = cdf[levels.min()]
    if cdf_min == total:
        return np.zeros(total, dtype=np.int64)
    scaled = 255.0 * (cdf[levels] - cdf_min) / (total - cdf_min)
    return np.floor(scaled + 0.5).astype(np.int64)


def equalize_dataset(dataset: VerificationDataset, width: int, height: int) -> VerificationDataset:
    """Apply :func:`histogram_equalize` to every row."""
    eq = np.vstack([histogram_equalize(row, width, height) for row in dataset.samples])
    return dataset.with_samples(eq.astype(float))


def _warp(points: np.ndarray, warp: str, separation: float) -> np.ndarray:
    if warp == "none":
        return points
    if warp == "quadratic-lift":
        return points * np.abs(points) / separation
    if warp == "radial":
        radius = np.linalg.norm(points, axis=1, keepdims=True)
        return points * np.cos(radius / separation)
    raise ValidationError(f"unknown warp {warp!r}; expected one of {WARPS}")


def generate_synthetic_protocol(num_clients: int, num_impostors: int, samples_per_identity: int,
                                dim: int, separation: float, warp: str = "none",
                                seed: int = 0) -> VerificationDataset:
    """Gaussian identity clusters with a client/impostor role split.

    Identity means sit ``separation`` apart along random orthonormal axes when
    there are no more identities than dimensions (random Gaussian directions of
    norm ``separation / sqrt(2)`` otherwise); samples add unit-variance noise.
    Clients get train, evaluation and test rows; impostors only evaluation and
    test rows.
    """
    if num_clients < 2 or num_impostors < 0 or dim < 1:
        raise ValidationError("need num_clients >= 2, num_impostors >= 0, dim >= 1")
    if samples_per_identity < 4:
        raise ValidationError("samples_per_identity must be >= 4")
    if not separation > 0:
        raise ValidationError("separation must be positive")
    if warp not in WARPS:
        raise ValidationError(f"unknown warp {warp!r}; expected one of {WARPS}")

    rng = np.random.default_rng(seed)
    n_ids = num_clients + num_impostors
    if n_ids <= dim:
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        means = q[:, :n_ids].T * (separation / np.sqrt(2.0))
    else:
        dirs = rng.standard_normal((n_ids, dim))
        means = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * (separation / np.sqrt(2.0))

    per = samples_per_identity
    n_train = max(2, per // 2)
    n_eval = (per - n_train + 1) // 2
    client_roles = [TRAIN] * n_train + [EVALUATION] * n_eval + [TEST] * (per - n_train - n_eval)
    imp_eval = per // 2
    impostor_roles = [EVALUATION] * imp_eval + [TEST] * (per - imp_eval)

    client_ids = tuple(f"client{k:03d}" for k in range(num_clients))
    impostor_ids = tuple(f"impostor{k:03d}" for k in range(num_impostors))
    points = means.repeat(per, axis=0) + rng.standard_normal((n_ids * per, dim))
    points = _warp(points, warp, separation)
    labels = np.repeat(np.array(client_ids + impostor_ids), per)
    roles = np.array(client_roles * num_clients + impostor_roles * num_impostors)
    return VerificationDataset(points, labels, roles, client_ids, impostor_ids)
