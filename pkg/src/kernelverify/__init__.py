"""Client-specific kernel discriminant analysis for identity verification."""

from kernelverify.cskda import CLIENT_MODEL, IMPOSTOR_MODEL, ModelPack, fit
from kernelverify.dataset import ProtocolConfig, VerificationDataset, build_dataset, load_dataset
from kernelverify.errors import VerificationError
from kernelverify.evaluation import VerificationReport, evaluate
from kernelverify.kernel_learning import LearnOptions, learn_kernel
from kernelverify.kernels import KernelSpec, gram_matrix
from kernelverify.spectral import SpectralModel, decompose

__all__ = [
    "CLIENT_MODEL", "IMPOSTOR_MODEL", "KernelSpec", "LearnOptions", "ModelPack",
    "ProtocolConfig", "SpectralModel", "VerificationDataset", "VerificationError",
    "VerificationReport", "build_dataset", "decompose", "evaluate", "fit", "gram_matrix",
    "learn_kernel", "load_dataset",
]
