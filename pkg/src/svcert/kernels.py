"""Similarity functions and Gram matrices for the kernelized methods."""

from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "GramMatrix", "kernel_eval", "gram_matrix", "psd_check",
           "cross_kernel"]

_KINDS = ("linear", "gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family selector.

    ``gaussian`` uses exp(-|a-b|^2 / width); ``polynomial`` uses
    (a.b + offset)^degree; ``linear`` is the plain dot product.
    """

    kind: str = "gaussian"
    width: float = 1.0
    degree: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian width must be positive")
        if self.kind == "polynomial":
            if self.degree < 1:
                raise ValueError("polynomial degree must be >= 1")
            if self.offset < 0:
                raise ValueError("polynomial offset must be nonnegative")

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "width": self.width}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "degree": self.degree,
                    "offset": self.offset}
        return {"kind": "linear"}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d.get("kind")
        if kind == "gaussian":
            return cls(kind="gaussian", width=float(d["width"]))
        if kind == "polynomial":
            return cls(kind="polynomial", degree=int(d["degree"]),
                       offset=float(d["offset"]))
        if kind == "linear":
            return cls(kind="linear")
        raise ValueError(f"unknown kernel kind {kind!r}")


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    spec: KernelSpec


def _as_2d(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("kernel inputs must share dimension")
    if spec.kind == "linear":
        return float(a @ b)
    if spec.kind == "gaussian":
        d = a - b
        return float(np.exp(-(d @ d) / spec.width))
    return float((a @ b + spec.offset) ** spec.degree)


def cross_kernel(spec: KernelSpec, lhs, rhs) -> np.ndarray:
    """Kernel values between two point sets, shape (len(lhs), len(rhs))."""
    A, B = _as_2d(lhs), _as_2d(rhs)
    if A.shape[1] != B.shape[1]:
        raise ValueError("kernel inputs must share dimension")
    dots = A @ B.T
    if spec.kind == "linear":
        return dots
    if spec.kind == "polynomial":
        return (dots + spec.offset) ** spec.degree
    sq = (
        (A * A).sum(axis=1)[:, None]
        - 2.0 * dots
        + (B * B).sum(axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / spec.width)


def gram_matrix(spec: KernelSpec, inputs) -> GramMatrix:
    """Full symmetric kernel matrix (upper triangle computed, then mirrored)."""
    X = _as_2d(inputs)
    if X.shape[0] == 0:
        raise ValueError("gram_matrix requires at least one input")
    G = cross_kernel(spec, X, X)
    G = np.triu(G) + np.triu(G, 1).T
    if spec.kind == "gaussian":
        np.fill_diagonal(G, 1.0)
    return GramMatrix(values=G, spec=spec)


def psd_check(g: GramMatrix, tolerance: float = 1e-8) -> bool:
    """True when the smallest eigenvalue is above -tolerance * spectral norm."""
    vals = np.asarray(g.values, dtype=np.float64)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError("Gram matrix must be square")
    eigs = np.linalg.eigvalsh(vals)
    scale = max(float(np.abs(eigs).max(initial=0.0)), 1e-300)
    return bool(eigs.min() >= -tolerance * scale)
