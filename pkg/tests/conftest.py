"""Session-scoped trained models shared by the acceptance suite.

Training these once keeps the acceptance module inside its stated runtime
budgets; every test that consumes them is read-only.
"""

import numpy as np
import pytest

from flowbridge.nn.model import ModelConfig
from flowbridge.tasks import TaskSpec
from flowbridge.training import TrainConfig, train

EIGHT_GAUSS_ITERS = 5000
RING_ITERS = 10000
_BATCH = 256
_LR = 1e-3
_SEED = 11


@pytest.fixture(scope="session")
def eight_gauss_pair():
    """(independent, chunked-OT) models trained identically seeded on 8 Gaussians."""
    task = TaskSpec(family="eight_gaussians")
    mc = ModelConfig(signal_length=2, hidden=64, depth=3)
    base = dict(iterations=EIGHT_GAUSS_ITERS, batch_size=_BATCH, lr=_LR, seed=_SEED)
    res_ind = train(mc, task, TrainConfig(**base))
    res_ot = train(mc, task, TrainConfig(**base, coupling="chunked_ot", chunk_size=2))
    return res_ind, res_ot


@pytest.fixture(scope="session")
def ring_model():
    """Conditional model trained on the radius-conditioned ring task.

    Trained with the independent coupling on purpose: minibatch-OT pairing
    correlates the noise marginal with the condition (larger-radius data
    attracts larger-norm noise), so the conditional flow it induces no longer
    transports N(0, I) — decoding fresh or encoded Gaussian latents then
    undershoots the requested radius. Independent pairing keeps x1 exactly
    N(0, I) for every condition value.
    """
    task = TaskSpec(family="cond_ring")
    mc = ModelConfig(signal_length=2, hidden=64, depth=3, cond_dim=1)
    res = train(mc, task, TrainConfig(
        iterations=RING_ITERS, batch_size=_BATCH, lr=_LR, seed=21,
        cond_dropout=0.2,
    ))
    return res.model


@pytest.fixture(scope="session")
def test_points_8g():
    rng = np.random.default_rng(5)
    from flowbridge.tasks import gen_eight_gaussians
    return gen_eight_gaussians(256, rng).astype(np.float32)
