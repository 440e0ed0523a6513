"""Pairing data batches with noise batches.

The independent coupling draws noise i.i.d. per sample. The chunked-OT
coupling splits every sample in a minibatch into fixed-length chunks, solves
one optimal transport problem over the pooled chunks (data chunks vs noise
chunks, squared-L2 cost), and reassembles the noise so that each data chunk
trains against its transport partner. Chunks may cross sample boundaries: the
pool is flattened over the whole minibatch before the solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ot
from .exceptions import ShapeError, ValidationError

__all__ = [
    "SignalBatch",
    "Coupling",
    "chunk",
    "unchunk",
    "couple_independent",
    "couple_chunked_ot",
]


@dataclass(frozen=True)
class SignalBatch:
    """A batch of fixed-length signals with optional conditioning.

    values: (B, N) float32. condition: (B, K) float32 or None. present:
    (B,) bool marking which rows carry a real condition; None means all
    present when condition is given, all absent otherwise.
    """

    values: np.ndarray
    condition: np.ndarray | None = None
    present: np.ndarray | None = None

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ShapeError(f"batch values must be (B, N), got {v.shape}")
        if v.dtype != np.float32:
            raise ValidationError(f"batch values must be float32, got {v.dtype}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("batch values have non-finite entries")
        b = v.shape[0]
        if self.condition is not None:
            c = self.condition
            if c.ndim != 2 or c.shape[0] != b:
                raise ShapeError(f"condition must be (B, K) with B={b}, got {c.shape}")
            if c.dtype != np.float32:
                raise ValidationError(f"condition must be float32, got {c.dtype}")
        if self.present is not None:
            p = self.present
            if p.shape != (b,) or p.dtype != np.bool_:
                raise ShapeError(f"present must be bool (B,) with B={b}")
            if self.condition is None and p.any():
                raise ValidationError("present flags set but no condition array given")

    @property
    def batch_size(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def resolved_present(self) -> np.ndarray:
        if self.present is not None:
            return self.present
        b = self.values.shape[0]
        return np.full(b, self.condition is not None)


@dataclass(frozen=True)
class Coupling:
    """Matched (data, noise) pair for flow-matching training.

    x0 is the data endpoint, x1 the noise endpoint; row i of x0 trains
    against row i of x1.
    """

    x0: np.ndarray
    x1: np.ndarray
    condition: np.ndarray | None = None
    present: np.ndarray | None = None

    def __post_init__(self):
        if self.x0.shape != self.x1.shape:
            raise ShapeError(f"endpoint shape mismatch: {self.x0.shape} vs {self.x1.shape}")
        if self.x0.ndim != 2:
            raise ShapeError(f"coupling endpoints must be (B, N), got {self.x0.shape}")

    @property
    def batch_size(self) -> int:
        return self.x0.shape[0]

    def resolved_present(self) -> np.ndarray:
        if self.present is not None:
            return self.present
        return np.full(self.x0.shape[0], self.condition is not None)


def chunk(values: np.ndarray, n_c: int) -> np.ndarray:
    """Split (B, N) into (B*N/n_c, n_c) chunks, row-major over the batch."""
    if values.ndim != 2:
        raise ShapeError(f"expected (B, N), got {values.shape}")
    b, n = values.shape
    if n_c < 1 or n % n_c != 0:
        raise ValidationError(f"chunk size {n_c} does not divide signal length {n}")
    return values.reshape(-1, n_c)


def unchunk(chunks: np.ndarray, batch_size: int) -> np.ndarray:
    """Inverse of chunk: reassemble (B*N/n_c, n_c) back into (B, N)."""
    if chunks.ndim != 2:
        raise ShapeError(f"expected chunk array, got {chunks.shape}")
    total, n_c = chunks.shape
    if batch_size < 1 or total % batch_size != 0:
        raise ValidationError(f"{total} chunks do not split over batch size {batch_size}")
    return chunks.reshape(batch_size, -1)


def couple_independent(batch: SignalBatch, rng: np.random.Generator) -> Coupling:
    """Pair each sample with freshly drawn standard Gaussian noise."""
    x1 = rng.standard_normal(batch.values.shape, dtype=np.float32)
    return Coupling(batch.values, x1, batch.condition, batch.present)


def couple_chunked_ot(
    batch: SignalBatch,
    rng: np.random.Generator,
    n_c: int,
    method: str = "exact",
    epsilon: float | None = None,
) -> Coupling:
    """Pair data with noise through chunk-level optimal transport.

    Noise is drawn exactly as in couple_independent (same rng consumption, so
    the two couplings are comparable under a shared seed), then both streams
    are chunked, a squared-L2 cost matrix over all B*N/n_c chunks is solved,
    and the noise chunks are permuted into their matched data slots before
    reassembly. ``method`` picks the solver: "exact" for the assignment
    solver, "sinkhorn" for the entropy-regularized one (requires ``epsilon``;
    pairs are then sampled from the plan rows).
    """
    x1 = rng.standard_normal(batch.values.shape, dtype=np.float32)
    data_chunks = chunk(batch.values, n_c)
    noise_chunks = chunk(x1, n_c)
    c = ot.cost_matrix(data_chunks, noise_chunks)
    if method == "exact":
        sigma = ot.solve_exact(c).sigma
    elif method == "sinkhorn":
        if epsilon is None:
            raise ValidationError("sinkhorn coupling requires epsilon")
        plan = ot.solve_sinkhorn(c, epsilon=epsilon)
        sigma = ot.plan_to_pairs(plan, rng)
    else:
        raise ValidationError(f"unknown coupling method {method!r}")
    matched = unchunk(noise_chunks[sigma], batch.batch_size)
    return Coupling(batch.values, matched, batch.condition, batch.present)
