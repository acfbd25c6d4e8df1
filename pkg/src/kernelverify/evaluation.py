"""Claim construction, EER threshold calibration and FAR/FRR/TER reports."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .cskda import CLIENT_MODEL, ModelPack, normalize_mode, score_claims
from .dataset import EVALUATION, TEST, VerificationDataset
from .errors import EmptyRole, NoImpostorClaims, ValidationError


class Claim(NamedTuple):
    sample_index: int
    claimed_client: str
    genuine: bool


class OperatingPoint(NamedTuple):
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class VerificationReport:
    mode: str
    threshold: float
    eval_far: float
    eval_frr: float
    test_far: float
    test_frr: float
    test_ter: float
    kernel: dict
    learn: dict
    alpha: Optional[float]
    mu_summary: dict
    roc: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("roc")
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "VerificationReport":
        return cls(**{k: raw[k] for k in cls.__dataclass_fields__ if k != "roc"})


def claim_set(dataset: VerificationDataset, role: str) -> list[Claim]:
    """Genuine claims for client rows; every impostor row claims every client."""
    if role not in (EVALUATION, TEST):
        raise ValidationError(f"claims are built for evaluation or test rows, not {role!r}")
    idx = dataset.indices(role)
    if idx.size == 0:
        raise EmptyRole(f"no {role} rows in dataset")
    clients = set(dataset.client_ids)
    claims = []
    has_impostor = False
    for i in idx:
        ident = str(dataset.labels[i])
        if ident in clients:
            claims.append(Claim(int(i), ident, True))
        else:
            has_impostor = True
            claims.extend(Claim(int(i), c, False) for c in dataset.client_ids)
    if not has_impostor:
        raise NoImpostorClaims(f"no impostor rows in the {role} set; FAR is undefined")
    if not any(c.genuine for c in claims):
        raise EmptyRole(f"no genuine {role} claims")
    return claims


def candidate_thresholds(scores) -> np.ndarray:
    """Midpoints between consecutive distinct scores, plus one threshold below
    the smallest (when it is positive) and one above the largest."""
    values = np.unique(np.asarray(scores, dtype=float))
    mids = 0.5 * (values[:-1] + values[1:])
    lower = [values[0] / 2.0] if values[0] > 0 else []
    return np.concatenate([lower, mids, [values[-1] + 1.0]])


def _error_counts(genuine, impostor, mode, thresholds):
    g = np.sort(np.asarray(genuine, dtype=float))
    im = np.sort(np.asarray(impostor, dtype=float))
    g_le = np.searchsorted(g, thresholds, side="right")
    i_le = np.searchsorted(im, thresholds, side="right")
    if normalize_mode(mode) == CLIENT_MODEL:
        false_accept, false_reject = i_le, g.size - g_le
    else:
        false_accept, false_reject = im.size - i_le, g_le
    return false_accept, false_reject


def error_rates(genuine, impostor, mode: str, threshold: float) -> tuple[float, float]:
    """``(FAR, FRR)`` in percent at one threshold."""
    fa, fr = _error_counts(genuine, impostor, mode, np.array([threshold]))
    return 100.0 * fa[0] / len(impostor), 100.0 * fr[0] / len(genuine)


def roc_sweep(genuine, impostor, mode: str) -> list[OperatingPoint]:
    """Operating points at every candidate threshold, ascending."""
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if genuine.size == 0 or impostor.size == 0:
        raise ValidationError("need non-empty genuine and impostor score lists")
    t = candidate_thresholds(np.concatenate([genuine, impostor]))
    fa, fr = _error_counts(genuine, impostor, mode, t)
    far = 100.0 * fa / impostor.size
    frr = 100.0 * fr / genuine.size
    return [OperatingPoint(float(a), float(b), float(c)) for a, b, c in zip(t, far, frr)]


def calibrate_eer(genuine, impostor, mode: str) -> OperatingPoint:
    """Threshold minimizing ``|FAR - FRR|``.

    Ties go to the lower ``FAR + FRR``, then to the smaller threshold. The
    comparisons use integer error counts, so they are exact.
    """
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if genuine.size == 0 or impostor.size == 0:
        raise ValidationError("need non-empty genuine and impostor score lists")
    t = candidate_thresholds(np.concatenate([genuine, impostor]))
    fa, fr = _error_counts(genuine, impostor, mode, t)
    # FAR - FRR = 100 (fa / n_imp - fr / n_gen), scaled by n_imp * n_gen
    gap = np.abs(fa * genuine.size - fr * impostor.size)
    total = fa * genuine.size + fr * impostor.size
    best = np.lexsort((t, total, gap))[0]
    return OperatingPoint(float(t[best]), 100.0 * fa[best] / impostor.size,
                          100.0 * fr[best] / genuine.size)


def claim_distances(pack: ModelPack, claims: Sequence[Claim], mode: str):
    """Distances used by ``mode`` plus the genuine mask."""
    idx = [c.sample_index for c in claims]
    d_c, d_i, _ = score_claims(pack, idx, [c.claimed_client for c in claims])
    dist = d_c if normalize_mode(mode) == CLIENT_MODEL else d_i
    genuine = np.array([c.genuine for c in claims], dtype=bool)
    return dist, genuine


def evaluate(pack: ModelPack, dataset: VerificationDataset, mode: str, kernel: Optional[dict] = None,
             learn: Optional[dict] = None, learned=None) -> VerificationReport:
    """Calibrate at the EER point on evaluation claims, then apply the frozen
    threshold to test claims."""
    mode = normalize_mode(mode)
    dist, gen = claim_distances(pack, claim_set(dataset, EVALUATION), mode)
    point = calibrate_eer(dist[gen], dist[~gen], mode)
    roc = tuple(roc_sweep(dist[gen], dist[~gen], mode))

    tdist, tgen = claim_distances(pack, claim_set(dataset, TEST), mode)
    test_far, test_frr = error_rates(tdist[tgen], tdist[~tgen], mode, point.threshold)
    return VerificationReport(
        mode=mode,
        threshold=point.threshold,
        eval_far=point.far,
        eval_frr=point.frr,
        test_far=test_far,
        test_frr=test_frr,
        test_ter=test_far + test_frr,
        kernel=dict(kernel or {}),
        learn=dict(learn or {}),
        alpha=None if learned is None else learned.alpha,
        mu_summary={} if learned is None else learned.summary(),
        roc=roc,
    )


def write_roc(points, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "far", "frr"])
        for p in sorted(points, key=lambda q: q.threshold):
            w.writerow([repr(p.threshold), repr(p.far), repr(p.frr)])


def roc_paths(roc_path, reports) -> list[Path]:
    """One ROC file per report; with several reports the mode is appended to the stem,
    preceded by ``baseline``/``learned`` when modes repeat."""
    base = Path(roc_path)
    if len(reports) == 1:
        return [base]
    tags = [r.mode for r in reports]
    if len(set(tags)) < len(tags):
        tags = [("baseline" if r.learn.get("mode") == "baseline" else "learned") + "_" + r.mode
                for r in reports]
    return [base.with_name(f"{base.stem}_{t}{base.suffix}") for t in tags]


def emit_report(reports: Sequence[VerificationReport], out_path, roc_path=None) -> None:
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
        fh.write("\n")
    if roc_path is not None and reports:
        for report, path in zip(reports, roc_paths(roc_path, reports)):
            write_roc(report.roc, path)


def load_reports(path) -> list[VerificationReport]:
    with open(path, encoding="utf-8") as fh:
        return [VerificationReport.from_dict(r) for r in json.load(fh)]


def format_table(rows: Sequence[tuple[str, VerificationReport]]) -> str:
    """Fixed-width table with two-decimal percentages, one line per report."""
    header = (f"{'setting':<34} {'mode':<4} {'eval FAR':>8} {'eval FRR':>8} "
              f"{'test FAR':>8} {'test FRR':>8} {'TER':>7}")
    lines = [header, "-" * len(header)]
    for label, r in rows:
        lines.append(f"{label:<34} {r.mode:<4} {r.eval_far:8.2f} {r.eval_frr:8.2f} "
                     f"{r.test_far:8.2f} {r.test_frr:8.2f} {r.test_ter:7.2f}")
    return "\n".join(lines)
