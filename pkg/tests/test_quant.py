"""Tests for the uniform quantizer and the QP-to-step law."""
import numpy as np
import pytest

from lnrm_codec.codec.quant import (
    DELTA_QP_RANGE,
    QuantParams,
    dequantize,
    dequantize_array,
    quantize,
    quantize_array,
    step_of,
)
from lnrm_codec.codec.transform import CoeffBlock
from lnrm_codec.lib.errors import ContractError


class TestStep:
    def test_exact_anchor_values(self):
        assert step_of(4) == 1.0
        assert step_of(10) == 2.0
        assert step_of(16) == 4.0

    def test_doubles_every_six(self):
        for qp in range(0, 46):
            assert step_of(qp + 6) == 2.0 * step_of(qp)

    def test_strictly_increasing(self):
        steps = [step_of(qp) for qp in range(52)]
        assert all(b > a for a, b in zip(steps, steps[1:]))

    def test_matches_formula(self):
        for qp in range(52):
            assert step_of(qp) == pytest.approx(2.0 ** ((qp - 4) / 6.0), rel=1e-15)

    @pytest.mark.parametrize("qp", [-1, 52, 28.0])
    def test_out_of_range(self, qp):
        with pytest.raises(ContractError):
            step_of(qp)


class TestQuantParams:
    def test_delta_qp_range(self):
        assert DELTA_QP_RANGE == (-4, -3, -2, -1, 0, 1, 2, 3, 4)

    def test_clamped_at_edges(self):
        assert QuantParams(51, 4).effective_qp == 51
        assert QuantParams(2, -4).effective_qp == 0
        assert QuantParams(2, -4).step == step_of(0)

    def test_step_includes_delta(self):
        assert QuantParams(28, -4).step == step_of(24)

    def test_bad_delta(self):
        with pytest.raises(ContractError):
            QuantParams(28, 5)


class TestQuantize:
    def test_zero_coefficients(self):
        assert np.all(quantize(CoeffBlock(4, np.zeros(16)), 3.0) == 0)

    def test_half_away_from_zero(self):
        levels = quantize_array(np.array([3.0, -3.0, 1.0, -1.0, 2.9]), 2.0)
        assert levels.tolist() == [2, -2, 1, -1, 1]

    def test_error_bound(self):
        rng = np.random.default_rng(1)
        coeffs = rng.uniform(-500, 500, size=(16, 16))
        for step in (0.7, 1.0, 5.3, 40.0):
            levels = quantize(CoeffBlock(16, coeffs), step)
            assert np.max(np.abs(coeffs - step * levels)) <= step / 2 + 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        levels = rng.integers(-50, 51, size=(4, 4))
        step = step_of(31)
        assert np.array_equal(quantize(dequantize(levels, step), step), levels)

    def test_dequantize_zero(self):
        assert np.all(dequantize(np.zeros((4, 4), dtype=np.int64), 2.0).coeffs == 0.0)

    def test_plane_error_bounds(self):
        rng = np.random.default_rng(4)
        plane = rng.uniform(-200, 200, size=64 * 64)
        step = step_of(28)
        error = np.abs(dequantize_array(quantize_array(plane, step), step) - plane)
        assert np.all(error <= step / 2 + 1e-12)
        assert np.sum(error) <= plane.size * step / 2

    def test_bad_step(self):
        with pytest.raises(ContractError):
            quantize(CoeffBlock(4, np.ones(16)), 0.0)

    def test_uniform_error_model(self):
        rng = np.random.default_rng(5)
        step = step_of(22)
        coeffs = rng.uniform(-1000.0, 1000.0, size=1_000_000)
        error = dequantize_array(quantize_array(coeffs, step), step) - coeffs
        assert np.mean(error * error) == pytest.approx(step * step / 12.0, rel=0.02)
