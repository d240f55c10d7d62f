"""Tests for the no-reference metric interface, TvScore and external gradients."""
import math

import numpy as np
import pytest

from lnrm_codec.evaluation.corpus import CorpusSpec, generate_corpus
from lnrm_codec.lib.data.imageio import write_gradient
from lnrm_codec.lib.errors import ContractError, UnsupportedMetricError
from lnrm_codec.lib.models import Frame, GradientField
from lnrm_codec.lib.utils import round_half_away
from lnrm_codec.metrics import ExternalMetric, FiniteDifferenceMetric, TvScore, external_metric, fd_gradient
from lnrm_codec.metrics.base import fd_gradient_array


def _make_frame(seed=0, size=64, planes=1, low=0, high=256):
    rng = np.random.default_rng(seed)
    return Frame(rng.integers(low, high, size=(planes, size, size)))


def _make_lattice_frame(seed, size=64):
    """Random frame on a coarse grey-level lattice (0, 85, 170, 255)."""
    rng = np.random.default_rng(seed)
    return Frame(rng.integers(0, 4, size=(1, size, size)) * 85)


def _scalar_tv(samples, eps=1.0):
    height, width = samples.shape
    total = 0.0
    for r in range(height):
        for c in range(width):
            dh = float(samples[r, c + 1]) - float(samples[r, c]) if c + 1 < width else 0.0
            dv = float(samples[r + 1, c]) - float(samples[r, c]) if r + 1 < height else 0.0
            total += math.sqrt(dh * dh + dv * dv + eps * eps)
    return total / (height * width) - eps


class TestTvScore:
    def test_constant_frame_scores_zero(self):
        frame = Frame(np.full((3, 32, 32), 77))
        assert TvScore().evaluate(frame) == 0.0

    def test_noise_raises_score(self):
        rng = np.random.default_rng(1)
        clean = generate_corpus(CorpusSpec(count=1, noise_sigma=0.0, banding_levels=0))[0][1]
        noisy = np.clip(round_half_away(clean.as_float() + rng.uniform(-12, 12, size=clean.planes.shape)), 0, 255)
        assert TvScore().evaluate(Frame(noisy)) > TvScore().evaluate(clean)

    def test_step_edge_matches_scalar_oracle(self):
        samples = np.zeros((16, 16), dtype=np.uint8)
        samples[:, 8:] = 255
        score = TvScore().evaluate(Frame(samples))
        assert score == pytest.approx(_scalar_tv(samples), rel=1e-12)
        assert score == pytest.approx((math.sqrt(255.0 ** 2 + 1.0) - 1.0) / 16.0, rel=1e-12)

    def test_random_frame_matches_scalar_oracle(self):
        frame = _make_frame(seed=3, size=16)
        assert TvScore(epsilon=2.0).evaluate(frame) == pytest.approx(_scalar_tv(frame.planes[0], 2.0), rel=1e-12)

    def test_planes_are_summed(self):
        frame = _make_frame(seed=4, size=16, planes=3)
        per_plane = sum(_scalar_tv(frame.planes[p]) for p in range(3))
        assert TvScore().evaluate(frame) == pytest.approx(per_plane, rel=1e-12)
        assert TvScore(luma_only=True).evaluate(frame) == pytest.approx(_scalar_tv(frame.planes[0]), rel=1e-12)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            TvScore(epsilon=0.0)


class TestTvGradient:
    def test_constant_frame_has_zero_gradient(self):
        field = TvScore().gradient(Frame(np.full((1, 16, 16), 200)))
        assert np.all(field.values == 0.0)
        assert field.base_score == 0.0

    def test_base_score_is_attached(self):
        frame = _make_frame(seed=5, size=32)
        assert TvScore().gradient(frame).base_score == TvScore().evaluate(frame)

    def test_offset_invariance(self):
        frame = _make_frame(seed=6, size=32, high=200)
        shifted = Frame(frame.planes.astype(np.int64) + 50)
        assert TvScore().gradient(frame).values.tobytes() == TvScore().gradient(shifted).values.tobytes()

    def test_luma_only_zero_fills_chroma(self):
        field = TvScore(luma_only=True).gradient(_make_frame(seed=7, size=16, planes=3))
        assert np.any(field.values[0] != 0.0)
        assert np.all(field.values[1:] == 0.0)

    def test_matches_central_differences(self):
        metric = TvScore()
        for seed in range(10):
            frame = _make_lattice_frame(seed)
            planes = frame.as_float()
            analytic = metric.score_gradient(planes)
            numeric = fd_gradient_array(metric, planes, h=0.1)
            mask = np.abs(analytic) > 1e-6
            assert mask.any()
            rel = np.abs(numeric[mask] - analytic[mask]) / np.abs(analytic[mask])
            assert rel.max() < 1e-3

    def test_close_to_central_differences_on_dense_frames(self):
        metric = TvScore()
        for seed in (20, 21, 22):
            planes = _make_frame(seed).as_float()
            analytic = metric.score_gradient(planes)
            numeric = fd_gradient_array(metric, planes, h=0.1)
            assert np.max(np.abs(numeric - analytic)) < 1e-2 * np.max(np.abs(analytic))

    def test_fd_error_shrinks_with_step(self):
        metric = TvScore()
        planes = _make_frame(seed=8, size=16, low=100, high=104).as_float()
        analytic = metric.score_gradient(planes)
        coarse = np.max(np.abs(fd_gradient_array(metric, planes, h=0.2) - analytic))
        fine = np.max(np.abs(fd_gradient_array(metric, planes, h=0.1) - analytic))
        assert fine < 0.5 * coarse

    def test_fd_gradient_of_zero_frame(self):
        field = fd_gradient(TvScore(), Frame(np.zeros((1, 16, 16), dtype=np.uint8)), h=0.1)
        assert np.max(np.abs(field.values)) < 1e-9

    def test_fd_rejects_bad_step(self):
        with pytest.raises(ContractError):
            fd_gradient(TvScore(), Frame(np.zeros((1, 16, 16), dtype=np.uint8)), h=0.0)

    def test_finite_difference_wrapper(self):
        frame = _make_lattice_frame(9, size=16)
        wrapped = FiniteDifferenceMetric(TvScore(), h=0.1)
        assert wrapped.evaluate(frame) == TvScore().evaluate(frame)
        assert np.allclose(wrapped.gradient(frame).values, TvScore().gradient(frame).values, rtol=1e-3, atol=1e-7)


class TestLinearization:
    def _noisy_crops(self, count=20):
        return [frame for _, frame in generate_corpus(CorpusSpec(count=count, width=32, height=32, seed=100))]

    def test_sign_aligned_perturbation(self):
        metric = TvScore()
        errors = []
        for frame in self._noisy_crops():
            field = metric.gradient(frame)
            grad = field.values.astype(np.float64)
            e = 0.5 * np.sign(grad)
            gap = metric.score(frame.as_float() + e) - field.base_score
            lnrm = float(np.sum(grad * e))
            errors.append(abs(lnrm - gap) / max(abs(gap), 1e-9))
        assert np.median(errors) < 0.1

    def test_taylor_convergence(self):
        metric = TvScore()
        frame = self._noisy_crops(1)[0]
        field = metric.gradient(frame)
        grad = field.values.astype(np.float64)
        direction = np.random.default_rng(0).normal(size=grad.shape)
        errors = []
        for scale in (0.5, 0.05, 0.005):
            e = scale * direction
            gap = metric.score(frame.as_float() + e) - field.base_score
            errors.append(abs(float(np.sum(grad * e)) - gap))
        # second-order remainder: ten times smaller step, about a hundred times smaller error
        assert errors[1] < 0.05 * errors[0]
        assert errors[2] < 0.05 * errors[1]


class TestExternalMetric:
    def test_returns_loaded_field(self, tmp_path):
        frame = _make_frame(seed=10, size=16)
        field = TvScore().gradient(frame)
        path = tmp_path / "tv.grad"
        write_gradient(field, path)
        metric = external_metric(path, source=frame)
        assert metric.gradient(frame) == field
        assert metric.evaluate(frame) == field.base_score

    def test_score_only_at_source(self):
        frame = _make_frame(seed=11, size=16)
        metric = ExternalMetric(GradientField.zeros_like(frame, 1.5), source=frame)
        other = Frame(np.zeros((1, 16, 16), dtype=np.uint8))
        with pytest.raises(UnsupportedMetricError):
            metric.evaluate(other)
        assert metric.evaluates_any_frame is False

    def test_dimension_mismatch(self):
        frame = _make_frame(seed=12, size=16)
        small = GradientField(np.zeros((1, 8, 8)))
        with pytest.raises(ContractError):
            ExternalMetric(small, source=frame)
        with pytest.raises(ContractError):
            ExternalMetric(small).gradient(frame)
