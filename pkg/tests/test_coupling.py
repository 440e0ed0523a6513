"""Tests for batch chunking and data/noise couplings."""

import numpy as np
import pytest

from flowbridge import ot
from flowbridge.coupling import (
    Coupling,
    SignalBatch,
    chunk,
    couple_chunked_ot,
    couple_independent,
    unchunk,
)
from flowbridge.exceptions import ShapeError, ValidationError


def _batch(rng, b=4, n=16, k=None):
    values = rng.standard_normal((b, n)).astype(np.float32)
    cond = None if k is None else rng.standard_normal((b, k)).astype(np.float32)
    return SignalBatch(values, cond)


class TestSignalBatch:
    def test_rejects_wrong_dtype(self):
        with pytest.raises(ValidationError):
            SignalBatch(np.zeros((2, 4)))

    def test_rejects_nan(self):
        v = np.zeros((2, 4), dtype=np.float32)
        v[0, 0] = np.nan
        with pytest.raises(ValidationError):
            SignalBatch(v)

    def test_rejects_condition_row_mismatch(self):
        with pytest.raises(ShapeError):
            SignalBatch(
                np.zeros((2, 4), dtype=np.float32),
                np.zeros((3, 1), dtype=np.float32),
            )

    def test_present_defaults(self):
        plain = SignalBatch(np.zeros((3, 4), dtype=np.float32))
        assert not plain.resolved_present().any()
        conditioned = _batch(np.random.default_rng(0), k=2)
        assert conditioned.resolved_present().all()

    def test_present_without_condition_rejected(self):
        with pytest.raises(ValidationError):
            SignalBatch(
                np.zeros((2, 4), dtype=np.float32),
                present=np.array([True, False]),
            )


class TestChunking:
    @pytest.mark.parametrize("b,n,n_c", [(4, 16, 4), (8, 12, 3), (1, 10, 10), (2, 6, 1)])
    def test_unchunk_inverts_chunk(self, b, n, n_c):
        rng = np.random.default_rng(5)
        v = rng.standard_normal((b, n)).astype(np.float32)
        assert np.array_equal(unchunk(chunk(v, n_c), b), v)

    def test_chunk_count(self):
        v = np.zeros((4, 16), dtype=np.float32)
        assert chunk(v, 4).shape == (16, 4)

    def test_chunks_are_contiguous_slices(self):
        # Chunk c of the flattened pool holds samples in batch-major order:
        # chunk 0 is row 0 positions 0..n_c-1, and chunks cross row
        # boundaries only between rows.
        v = np.arange(12, dtype=np.float32).reshape(2, 6)
        ch = chunk(v, 3)
        assert np.array_equal(ch[0], [0, 1, 2])
        assert np.array_equal(ch[1], [3, 4, 5])
        assert np.array_equal(ch[2], [6, 7, 8])

    def test_rejects_non_divisor(self):
        with pytest.raises(ValidationError):
            chunk(np.zeros((2, 10), dtype=np.float32), 3)

    def test_unchunk_rejects_bad_batch(self):
        with pytest.raises(ValidationError):
            unchunk(np.zeros((9, 2), dtype=np.float32), 4)


class TestCoupleIndependent:
    def test_noise_is_standard_gaussian(self):
        rng = np.random.default_rng(11)
        batch = _batch(rng, b=64, n=256)
        cpl = couple_independent(batch, rng)
        assert abs(float(cpl.x1.mean())) < 0.02
        assert abs(float(cpl.x1.std()) - 1.0) < 0.02

    def test_data_passes_through_untouched(self):
        rng = np.random.default_rng(12)
        batch = _batch(rng)
        cpl = couple_independent(batch, rng)
        assert cpl.x0 is batch.values

    def test_condition_carried(self):
        rng = np.random.default_rng(13)
        batch = _batch(rng, k=3)
        cpl = couple_independent(batch, rng)
        assert cpl.condition is batch.condition
        assert cpl.resolved_present().all()

    def test_seed_reproducibility(self):
        batch = _batch(np.random.default_rng(14))
        a = couple_independent(batch, np.random.default_rng(99))
        b = couple_independent(batch, np.random.default_rng(99))
        assert np.array_equal(a.x1, b.x1)


class TestCoupleChunkedOT:
    def test_noise_is_permutation_of_independent_draw(self):
        # Same seed, same noise marginal: the OT coupling only reorders
        # chunks, never changes their contents.
        batch = _batch(np.random.default_rng(21), b=4, n=16)
        indep = couple_independent(batch, np.random.default_rng(7))
        coupled = couple_chunked_ot(batch, np.random.default_rng(7), n_c=4)
        got = np.sort(chunk(coupled.x1, 4).ravel())
        want = np.sort(chunk(indep.x1, 4).ravel())
        assert np.array_equal(got, want)

    def test_cost_never_above_independent(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            batch = _batch(rng, b=4, n=16)
            seed = int(rng.integers(2**32))
            indep = couple_independent(batch, np.random.default_rng(seed))
            coupled = couple_chunked_ot(batch, np.random.default_rng(seed), n_c=4)
            cost_i = float(np.sum((indep.x0 - indep.x1) ** 2))
            cost_c = float(np.sum((coupled.x0 - coupled.x1) ** 2))
            assert cost_c <= cost_i + 1e-6

    def test_matches_manual_solve(self):
        batch = _batch(np.random.default_rng(23), b=2, n=8)
        seed = 31
        noise = np.random.default_rng(seed).standard_normal((2, 8), dtype=np.float32)
        c = ot.cost_matrix(chunk(batch.values, 4), chunk(noise, 4))
        sigma = ot.solve_exact(c).sigma
        want = unchunk(chunk(noise, 4)[sigma], 2)
        got = couple_chunked_ot(batch, np.random.default_rng(seed), n_c=4)
        assert np.array_equal(got.x1, want)

    def test_whole_sample_chunks_permute_rows(self):
        # n_c == N degenerates to sample-level minibatch OT: each x1 row is
        # one of the drawn noise rows.
        batch = _batch(np.random.default_rng(24), b=6, n=8)
        coupled = couple_chunked_ot(batch, np.random.default_rng(3), n_c=8)
        raw = np.random.default_rng(3).standard_normal((6, 8), dtype=np.float32)
        matched = {tuple(row) for row in coupled.x1}
        assert matched == {tuple(row) for row in raw}

    def test_sinkhorn_route(self):
        batch = _batch(np.random.default_rng(25), b=4, n=16)
        cpl = couple_chunked_ot(
            batch, np.random.default_rng(4), n_c=4, method="sinkhorn", epsilon=0.1
        )
        assert cpl.x1.shape == batch.values.shape

    def test_sinkhorn_requires_epsilon(self):
        batch = _batch(np.random.default_rng(26))
        with pytest.raises(ValidationError):
            couple_chunked_ot(batch, np.random.default_rng(0), n_c=4, method="sinkhorn")

    def test_unknown_method_rejected(self):
        batch = _batch(np.random.default_rng(27))
        with pytest.raises(ValidationError):
            couple_chunked_ot(batch, np.random.default_rng(0), n_c=4, method="emd2")

    def test_condition_carried(self):
        batch = _batch(np.random.default_rng(28), k=2)
        cpl = couple_chunked_ot(batch, np.random.default_rng(0), n_c=4)
        assert cpl.condition is batch.condition


class TestCoupling:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            Coupling(np.zeros((2, 4)), np.zeros((2, 5)))
