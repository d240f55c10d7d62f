"""End-to-end tests for the encoder, the bitstream container and the decoder."""
from unittest.mock import patch

import numpy as np
import pytest

from lnrm_codec.codec import RdoConfig, RdoMode, bits_map, decode, encode
from lnrm_codec.codec.bitstream import HEADER, MAGIC, BitstreamHeader, assemble, plane_qp
from lnrm_codec.codec.entropy import BitWriter
from lnrm_codec.evaluation.corpus import CorpusSpec, generate_corpus
from lnrm_codec.evaluation.curves import psnr
from lnrm_codec.lib.data.imageio import write_gradient
from lnrm_codec.lib.errors import ConfigurationError, ContractError, FormatError, LengthError
from lnrm_codec.lib.models import CodingChoice, Frame, GradientField, Partition
from lnrm_codec.metrics import TvScore, external_metric


def _make_frame(seed=0, size=64, planes=1):
    spec = CorpusSpec(count=1, width=size, height=size, planes=planes, seed=seed)
    return generate_corpus(spec)[0][1]


def _make_frames(count, size=32, seed=40):
    return [frame for _, frame in generate_corpus(CorpusSpec(count=count, width=size, height=size, seed=seed))]


def _empty_macroblock():
    return CodingChoice(Partition.MB16, 0), np.zeros((1, 16, 16), dtype=np.int64)


class TestHeader:
    def test_pack_layout(self):
        data = BitstreamHeader(64, 32, 3, 28).pack()
        assert len(data) == HEADER.size
        assert data.startswith(MAGIC)
        assert BitstreamHeader.unpack(data) == BitstreamHeader(64, 32, 3, 28, 3)

    def test_plane_qp(self):
        header = BitstreamHeader(16, 16, 3, 28)
        assert [header.plane_qp(p) for p in range(3)] == [28, 31, 31]
        assert plane_qp(50, 1) == 51

    def test_frame_wider_than_header_field(self):
        with pytest.raises(ContractError):
            BitstreamHeader(65536, 16, 1, 28)
        assert BitstreamHeader(65520, 16, 1, 28).pack()[6:8] == (65520).to_bytes(2, "little")

    def test_encode_rejects_frame_too_wide_for_header(self):
        frame = Frame(np.full((1, 16, 65536), 128, dtype=np.uint8))
        with pytest.raises(ContractError):
            encode(frame, RdoConfig(qp=28))

    def test_bad_magic(self):
        data = b"JPEGXX" + BitstreamHeader(16, 16, 1, 28).pack()[6:]
        with pytest.raises(FormatError) as excinfo:
            BitstreamHeader.unpack(data)
        assert excinfo.value.offset == 0

    def test_short_header(self):
        with pytest.raises(LengthError):
            BitstreamHeader.unpack(MAGIC + b"\x10")

    @pytest.mark.parametrize("width,height,planes,qp", [(17, 16, 1, 28), (16, 0, 1, 28), (16, 16, 2, 28), (16, 16, 1, 60)])
    def test_bad_fields(self, width, height, planes, qp):
        data = HEADER.pack(MAGIC, width, height, planes, qp, 3)
        with pytest.raises(FormatError):
            BitstreamHeader.unpack(data)


class TestRoundTrip:
    @pytest.mark.parametrize("mode", [RdoMode.SSE, RdoMode.LNRM_REG])
    def test_decode_matches_encoder_reconstruction(self, mode):
        frame = _make_frame(seed=1)
        metric = TvScore() if mode.uses_metric else None
        stream, report = encode(frame, RdoConfig(qp=28, mode=mode), metric=metric)
        assert decode(stream) == report.reconstruction
        assert report.total_bits == 8 * len(stream)
        assert 0 <= report.padding_bits < 8

    def test_payload_bits_match_rdo_rates(self):
        frame = _make_frame(seed=2)
        _, report = encode(frame, RdoConfig(qp=31, mode=RdoMode.LNRM_REG), metric=TvScore())
        assert report.mb_bits[0] == [cost.rate_bits for cost in report.mb_costs[0]]
        assert report.header_bits == 8 * HEADER.size

    def test_three_planes(self):
        frame = _make_frame(seed=3, size=32, planes=3)
        stream, report = encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG), metric=TvScore())
        decoded = decode(stream)
        assert decoded == report.reconstruction
        assert decoded.plane_count == 3
        assert len(report.choices) == 3
        assert BitstreamHeader.unpack(stream).plane_qp(1) == 31

    def test_thread_count_does_not_change_the_stream(self):
        frame = _make_frame(seed=4)
        config = RdoConfig(qp=28, mode=RdoMode.LNRM_REG)
        single, _ = encode(frame, config, metric=TvScore(), threads=1)
        pooled, _ = encode(frame, config, metric=TvScore(), threads=4)
        assert single == pooled

    def test_mid_grey_is_lossless(self):
        frame = Frame(np.full((1, 32, 48), 128, dtype=np.uint8))
        stream, report = encode(frame, RdoConfig(qp=40))
        assert decode(stream) == frame
        assert all(choice == CodingChoice(Partition.MB16, 0) for choice in report.choices[0])

    def test_constant_frame_is_lossless_at_low_qp(self):
        frame = Frame(np.full((1, 32, 32), 77, dtype=np.uint8))
        stream, _ = encode(frame, RdoConfig(qp=8))
        assert decode(stream) == frame

    def test_higher_qp_spends_fewer_bits(self):
        frame = _make_frame(seed=5)
        low, _ = encode(frame, RdoConfig(qp=22))
        high, _ = encode(frame, RdoConfig(qp=34))
        assert len(high) < len(low)

    @pytest.mark.parametrize("mode", [RdoMode.SSE, RdoMode.LNRM_REG])
    def test_psnr_rises_as_qp_falls(self, mode):
        for frame in _make_frames(3, seed=44):
            gradient = TvScore().gradient(frame) if mode is RdoMode.LNRM_REG else None
            psnrs = []
            for qp in range(52):
                _, report = encode(frame, RdoConfig(qp=qp, mode=mode), gradient=gradient)
                error = report.reconstruction.as_float() - frame.as_float()
                psnrs.append(psnr(float(np.sum(error * error)), frame.planes.size))
            for fine in range(52):
                for coarse in range(fine + 2, 52):
                    assert psnrs[fine] >= psnrs[coarse] - 0.1, (fine, coarse)

    def test_report_summary(self):
        frame = _make_frame(seed=6)
        _, report = encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG, alpha=0.5), metric=TvScore())
        summary = report.to_dict()
        assert summary["mode"] == "lnrm"
        assert summary["metric"] == "tv"
        assert summary["tau"] == pytest.approx(0.5 * summary["tau_tilde"])
        assert summary["bpp"] == report.total_bits / (64 * 64)
        assert sum(summary["choices"].values()) == 16


class TestGradientHandling:
    @pytest.mark.parametrize("mode", [RdoMode.SSE, RdoMode.LNRM_REG])
    def test_frame_distortion_is_the_sum_of_macroblock_costs(self, mode):
        frame = _make_frame(seed=19, size=32, planes=3)
        gradient = TvScore().gradient(frame)
        _, report = encode(frame, RdoConfig(qp=30, mode=mode, alpha=0.5), gradient=gradient)
        error = report.unclamped - frame.as_float()
        expected = float(np.sum(error * error))
        if mode is RdoMode.LNRM_REG:
            expected = float(np.sum(gradient.values.astype(np.float64) * error)) + report.config.tau * expected
        assert abs(report.rdo_distortion - expected) < 1e-6

    def test_gradient_taken_once_per_frame(self):
        metric = TvScore()
        frame = _make_frame(seed=7)
        with patch.object(metric, "gradient", wraps=metric.gradient) as spy:
            _, report = encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG), metric=metric, threads=2)
        spy.assert_called_once()
        assert report.gradient_calls == 1

    def test_supplied_gradient_skips_the_metric(self):
        metric = TvScore()
        frame = _make_frame(seed=8)
        field = metric.gradient(frame)
        with patch.object(metric, "gradient") as spy:
            _, report = encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG), metric=metric, gradient=field)
        spy.assert_not_called()
        assert report.gradient_calls == 0

    def test_external_gradient_gives_identical_stream(self, tmp_path):
        frame = _make_frame(seed=9)
        path = tmp_path / "tv.grad"
        write_gradient(TvScore().gradient(frame), path)
        config = RdoConfig(qp=28, mode=RdoMode.LNRM_REG)
        native, _ = encode(frame, config, metric=TvScore())
        external, _ = encode(frame, config, metric=external_metric(path, source=frame))
        assert native == external

    def test_gradient_size_mismatch(self):
        frame = _make_frame(seed=10)
        with pytest.raises(ContractError):
            encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG), gradient=GradientField(np.ones((1, 16, 16))))

    def test_metric_mode_without_metric(self):
        with pytest.raises(ConfigurationError):
            encode(_make_frame(seed=11), RdoConfig(qp=28, mode=RdoMode.LNRM_REG))

    def test_zero_gradient_with_unit_tau_reproduces_sse(self):
        for frame in _make_frames(10):
            zeros = GradientField.zeros_like(frame)
            sse, _ = encode(frame, RdoConfig(qp=28))
            lnrm, _ = encode(frame, RdoConfig(qp=28, mode=RdoMode.LNRM_REG, tau_override=1.0), gradient=zeros)
            assert sse == lnrm


class TestDirectMode:
    def test_stream_decodes(self):
        frame = _make_frame(seed=12, size=32)
        stream, report = encode(frame, RdoConfig(qp=28, mode=RdoMode.DIRECT), metric=TvScore())
        assert decode(stream) == report.reconstruction
        assert report.total_bits == 8 * len(stream)

    def test_needs_a_scoring_metric(self, tmp_path):
        frame = _make_frame(seed=13, size=32)
        path = tmp_path / "tv.grad"
        write_gradient(TvScore().gradient(frame), path)
        with pytest.raises(ConfigurationError):
            encode(frame, RdoConfig(qp=28, mode=RdoMode.DIRECT), metric=external_metric(path, source=frame))


class TestBitsMap:
    def test_shape_and_total(self):
        frame = Frame(np.asarray(_make_frame(seed=14).planes)[:, :32, :])
        _, report = encode(frame, RdoConfig(qp=28))
        grid = bits_map(report)
        assert grid.shape == (2, 4)
        assert int(grid.sum()) == report.payload_bits

    def test_bad_plane(self):
        _, report = encode(_make_frame(seed=15, size=16), RdoConfig(qp=28))
        with pytest.raises(ContractError):
            bits_map(report, plane=1)


class TestDecodeErrors:
    def test_assembled_empty_macroblock(self):
        data, mb_bits = assemble(BitstreamHeader(16, 16, 1, 28), [[_empty_macroblock()]])
        assert mb_bits == [[4]]
        # two side-info bits and one end-of-block fit in a single payload byte
        assert len(data) == HEADER.size + 1
        assert decode(data) == Frame(np.full((1, 16, 16), 128, dtype=np.uint8))

    def test_bad_magic(self):
        stream, _ = encode(_make_frame(seed=16, size=16), RdoConfig(qp=28))
        with pytest.raises(FormatError) as excinfo:
            decode(b"XXXXXX" + stream[6:])
        assert excinfo.value.offset == 0

    def test_truncated_stream(self):
        stream, _ = encode(_make_frame(seed=17, size=32), RdoConfig(qp=22))
        with pytest.raises(FormatError):
            decode(stream[:HEADER.size + (len(stream) - HEADER.size) // 2])

    def test_missing_payload(self):
        with pytest.raises(LengthError):
            decode(BitstreamHeader(16, 16, 1, 28).pack())

    def test_trailing_bytes(self):
        stream, _ = encode(_make_frame(seed=18, size=16), RdoConfig(qp=28))
        with pytest.raises(FormatError, match="trailing"):
            decode(stream + b"\x00")

    def test_non_zero_padding(self):
        data, _ = assemble(BitstreamHeader(16, 16, 1, 28), [[_empty_macroblock()]])
        with pytest.raises(FormatError, match="padding"):
            decode(data[:-1] + bytes([data[-1] | 1]))

    def test_delta_qp_out_of_range(self):
        writer = BitWriter()
        writer.write(0, 1)
        writer.write_se(5)
        with pytest.raises(FormatError):
            decode(BitstreamHeader(16, 16, 1, 28).pack() + writer.getvalue())
