"""
Affine Bloch-sphere processes: prediction, four-state fitting and sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Tuple

import numpy as np

from .evolution import BlochState, process_prediction
from .sequence import PulseSequence

__all__ = [
    "ProcessMatrix",
    "TOMOGRAPHY_STATES",
    "predict_process",
    "fit_process",
    "sphere_samples",
]

# initial states of the four-state protocol: +z, -z, +x, +y
TOMOGRAPHY_STATES = (
    BlochState(0, 0, 1),
    BlochState(0, 0, -1),
    BlochState(1, 0, 0),
    BlochState(0, 1, 0),
)


@dataclass(frozen=True)
class ProcessMatrix:
    """Affine map v -> linear @ v + offset on Bloch vectors."""

    linear: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        off = np.asarray(self.offset, dtype=float)
        if lin.shape != (3, 3) or off.shape != (3,):
            raise ValueError("process needs a 3x3 linear part and a 3-vector offset")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v @ self.linear.T + self.offset

    @property
    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.linear, 2))

    def is_contractive(self, tol: float = 1e-6) -> bool:
        return self.operator_norm <= 1 + tol

    @classmethod
    def identity(cls) -> "ProcessMatrix":
        return cls(np.eye(3))


def predict_process(seq: PulseSequence, env=None, ctrl=None) -> ProcessMatrix:
    """Diagonal contraction predicted for the sequence; no affine offset."""
    pred = process_prediction(seq, env, ctrl)
    return ProcessMatrix(np.diag(pred.contraction))


def fit_process(pairs: Iterable[Tuple[BlochState, BlochState]]) -> ProcessMatrix:
    """Least-squares affine process from (initial, final) Bloch pairs.

    With the four protocol states (+z, -z, +x, +y) the system is exactly
    determined: the offset is the mean of the two pole outputs, the z column
    is half their difference and the x and y columns are the remaining
    outputs minus the offset. Any set of at least four affinely independent
    inputs is accepted.
    """
    pairs = list(pairs)
    if len(pairs) < 4:
        raise ValueError("need at least four input/output pairs")
    v_in = np.array([p[0].vector for p in pairs])
    v_out = np.array([p[1].vector for p in pairs])
    design = np.hstack([v_in, np.ones((len(pairs), 1))])
    if np.linalg.matrix_rank(design) < 4:
        raise ValueError("input states are degenerate (not affinely independent)")
    coef, *_ = np.linalg.lstsq(design, v_out, rcond=None)
    return ProcessMatrix(coef[:3].T, coef[3])


def sphere_samples(process: ProcessMatrix, resolution: int):
    """Map a latitude-longitude grid of unit vectors through ``process``.

    Returns ``(inputs, outputs)``, each of shape ``(resolution * 2 *
    resolution, 3)``.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    theta = np.linspace(0, np.pi, resolution)
    phi = np.linspace(0, 2 * np.pi, 2 * resolution, endpoint=False)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    u = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    u = u.reshape(-1, 3)
    return u, process.apply(u)
