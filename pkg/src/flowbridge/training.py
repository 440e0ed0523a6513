"""End-to-end training loop for vector-field models.

Each iteration draws a task batch, couples it with noise (independently or
through chunk-level optimal transport), picks uniform random flow times,
applies condition dropout, and takes one Adam step on the flow-matching
loss. All randomness flows from a single seed through named child streams,
so reruns are bitwise identical and coupling variants see the same data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupling import couple_chunked_ot, couple_independent
from .exceptions import ConfigError, TrainingDivergedError
from .flow import cfm_loss
from .nn.adam import Adam
from .nn.model import ModelConfig, VectorFieldModel
from .tasks import TaskSpec, make_training_stream

__all__ = ["TrainConfig", "TrainResult", "train"]


@dataclass(frozen=True)
class TrainConfig:
    iterations: int
    batch_size: int = 8
    lr: float = 1e-4
    coupling: str = "independent"
    chunk_size: int | None = None
    ot_method: str = "exact"
    sinkhorn_epsilon: float | None = None
    cond_dropout: float = 0.2
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.coupling not in ("independent", "chunked_ot"):
            raise ConfigError(f"unknown coupling {self.coupling!r}")
        if self.coupling == "chunked_ot" and self.chunk_size is None:
            raise ConfigError("chunked_ot coupling requires chunk_size")
        if self.ot_method not in ("exact", "sinkhorn"):
            raise ConfigError(f"unknown ot_method {self.ot_method!r}")
        if self.ot_method == "sinkhorn" and self.sinkhorn_epsilon is None:
            raise ConfigError("sinkhorn ot_method requires sinkhorn_epsilon")
        if not 0.0 <= self.cond_dropout <= 1.0:
            raise ConfigError(f"cond_dropout must be in [0, 1], got {self.cond_dropout}")
        if self.log_every < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")


@dataclass
class TrainResult:
    model: VectorFieldModel
    optimizer: Adam
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1][1]


def train(
    model_config: ModelConfig,
    task: TaskSpec,
    config: TrainConfig,
    model: VectorFieldModel | None = None,
) -> TrainResult:
    """Train a model on a task; returns the model, optimizer, and loss history.

    The seed is split into independent child streams for (in order) model
    init, the data stream, coupling noise, flow times, and condition dropout.
    History records iteration 1, every log_every-th iteration, and the final
    one. A non-finite loss aborts with TrainingDivergedError naming the
    iteration.
    """
    if model_config.signal_length != task.n:
        raise ConfigError(
            f"model signal_length {model_config.signal_length} != task n {task.n}"
        )
    if model_config.cond_dim != task.cond_dim:
        raise ConfigError(
            f"model cond_dim {model_config.cond_dim} != task descriptor count {task.cond_dim}"
        )
    init_rng, data_rng, couple_rng, tau_rng, drop_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(5)
    )
    if model is None:
        model = VectorFieldModel(model_config, init_rng)
    optimizer = Adam(model.parameters(), lr=config.lr)
    stream = make_training_stream(task, config.batch_size, data_rng)
    history: list[tuple[int, float]] = []

    for it in range(1, config.iterations + 1):
        batch = next(stream)
        if config.coupling == "independent":
            cpl = couple_independent(batch, couple_rng)
        else:
            cpl = couple_chunked_ot(
                batch,
                couple_rng,
                n_c=config.chunk_size,
                method=config.ot_method,
                epsilon=config.sinkhorn_epsilon,
            )
        tau = tau_rng.random(config.batch_size)
        drop = None
        if task.cond_dim > 0 and config.cond_dropout > 0.0:
            drop = drop_rng.random(config.batch_size) < config.cond_dropout
        optimizer.zero_grad()
        report = cfm_loss(model, cpl, tau, drop_condition=drop)
        if not np.isfinite(report.loss):
            raise TrainingDivergedError(iteration=it, loss=report.loss)
        optimizer.step()
        if it == 1 or it % config.log_every == 0 or it == config.iterations:
            history.append((it, report.loss))
    return TrainResult(model=model, optimizer=optimizer, history=history)
