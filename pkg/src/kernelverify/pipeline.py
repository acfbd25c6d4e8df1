"""End-to-end orchestration shared by the CLI and the experiment scripts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .cskda import MODES, FitOptions, ModelPack, fit, normalize_mode
from .dataset import (
    WARPS,
    VerificationDataset,
    equalize_dataset,
    generate_synthetic_protocol,
    load_dataset,
)
from .errors import ValidationError
from .evaluation import VerificationReport, evaluate
from .kernel_learning import LearnedCoefficients, LearnOptions, learn_kernel
from .kernels import KernelSpec, gram_matrix
from .spectral import decompose

log = logging.getLogger(__name__)

BASELINE = {"mode": "baseline"}


@dataclass(frozen=True)
class SyntheticConfig:
    clients: int = 5
    impostors: int = 3
    per: int = 6
    dim: int = 8
    sep: float = 8.0
    warp: str = "none"

    _KEYS = {"clients": int, "impostors": int, "per": int, "dim": int, "sep": float, "warp": str}

    @classmethod
    def parse(cls, text: str) -> "SyntheticConfig":
        """Parse ``clients=5,impostors=3,per=6,dim=8,sep=8,warp=radial``."""
        raw = {}
        for item in filter(None, text.split(",")):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in cls._KEYS:
                raise ValidationError(f"bad synthetic parameter {item!r}")
            raw[key] = cls._KEYS[key](value.strip())
        return cls(**raw)

    def __post_init__(self):
        if self.warp not in WARPS:
            raise ValidationError(f"unknown warp {self.warp!r}")


@dataclass(frozen=True)
class RunConfig:
    samples: Optional[str] = None
    protocol: Optional[str] = None
    synthetic: Optional[SyntheticConfig] = None
    heq: Optional[tuple[int, int]] = None
    kernel: KernelSpec = field(default_factory=KernelSpec.linear)
    learn: LearnOptions = field(default_factory=LearnOptions)
    baseline: bool = False
    compare: bool = False
    modes: tuple[str, ...] = MODES
    seed: int = 0
    out: Optional[str] = None
    roc: Optional[str] = None

    def __post_init__(self):
        if (self.synthetic is None) == (self.samples is None and self.protocol is None):
            raise ValidationError("give either --synthetic or --samples/--protocol, not both or neither")
        if self.synthetic is None and (self.samples is None or self.protocol is None):
            raise ValidationError("--samples and --protocol must be given together")
        if not self.modes:
            raise ValidationError("select at least one classification mode")
        object.__setattr__(self, "modes", tuple(normalize_mode(m) for m in self.modes))

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        if isinstance(raw.get("synthetic"), dict):
            raw["synthetic"] = SyntheticConfig(**raw["synthetic"])
        elif isinstance(raw.get("synthetic"), str):
            raw["synthetic"] = SyntheticConfig.parse(raw["synthetic"])
        k = raw.get("kernel")
        if isinstance(k, str):
            raw["kernel"] = KernelSpec.parse(k)
        elif isinstance(k, dict):
            raw["kernel"] = KernelSpec.from_dict(k)
        if isinstance(raw.get("learn"), dict):
            raw["learn"] = LearnOptions.from_dict(raw["learn"])
        if "modes" in raw:
            m = raw["modes"]
            raw["modes"] = tuple(m.split(",") if isinstance(m, str) else m)
        if raw.get("heq") is not None:
            raw["heq"] = tuple(int(v) for v in raw["heq"])
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        return cls(**raw)


def prepare_dataset(config: RunConfig) -> VerificationDataset:
    if config.synthetic is not None:
        s = config.synthetic
        ds = generate_synthetic_protocol(s.clients, s.impostors, s.per, s.dim, s.sep, s.warp,
                                         config.seed)
    else:
        ds = load_dataset(config.samples, config.protocol)
    if config.heq is not None:
        ds = equalize_dataset(ds, *config.heq)
    return ds


@dataclass
class RunResult:
    reports: list[VerificationReport]
    pack: ModelPack
    learned: Optional[LearnedCoefficients]


def run_pipeline(dataset: VerificationDataset, kernel: KernelSpec, learn: LearnOptions,
                 baseline: bool = False, modes=MODES) -> RunResult:
    """Gram matrix, spectrum, coefficients, discriminant fit and one report per mode."""
    spectral = decompose(gram_matrix(kernel, dataset))
    if baseline:
        mu, learned, learn_echo = spectral.baseline_mu(), None, dict(BASELINE)
    else:
        learned = learn_kernel(spectral, dataset.train_labels, dataset.n, learn)
        mu, learn_echo = learned.mu, learn.to_dict()
        log.info("%s: alpha=%.6g iterations=%d ratio_trace=%.6g (initial %.6g)", kernel.label(),
                 learned.alpha, learned.iterations, learned.ratio_trace, learned.initial_ratio)
    model = fit(spectral, mu, dataset, FitOptions())
    pack = ModelPack(spectral, mu, model)
    log.info("%s: p=%d m_b=%d", kernel.label(), spectral.p, model.m_b)
    reports = [evaluate(pack, dataset, m, kernel.to_dict(), learn_echo, learned) for m in modes]
    return RunResult(reports, pack, learned)


def run_config(config: RunConfig, dataset: Optional[VerificationDataset] = None,
               kernel: Optional[KernelSpec] = None) -> list[VerificationReport]:
    """Reports for a config: baseline, learned, or both when ``compare`` is set."""
    ds = prepare_dataset(config) if dataset is None else dataset
    kernel = config.kernel if kernel is None else kernel
    variants = [True, False] if config.compare else [config.baseline]
    reports = []
    for baseline in variants:
        reports.extend(run_pipeline(ds, kernel, config.learn, baseline, config.modes).reports)
    return reports


def report_label(report: VerificationReport) -> str:
    kernel = KernelSpec.from_dict(report.kernel).label() if report.kernel else "?"
    method = "baseline" if report.learn.get("mode") == "baseline" else "learned"
    return f"{method} {kernel}"
