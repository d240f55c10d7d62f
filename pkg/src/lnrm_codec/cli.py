"""
Command-line interface.

Subcommands: encode, decode, grad, sweep, bdrate, report, corpus, overhead.
Machine-readable results go to stdout; logging goes to stderr. Exit codes:
0 on success, 1 on usage errors, 2 on data errors.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from lnrm_codec.codec.decoder import decode
from lnrm_codec.codec.encoder import bits_map, encode
from lnrm_codec.codec.quant import QP_MAX, QP_MIN
from lnrm_codec.codec.rdo import DEFAULT_ALPHA, DEFAULT_C, RdoConfig, RdoMode
from lnrm_codec.evaluation.bdrate import bd_rate_report
from lnrm_codec.evaluation.corpus import CorpusSpec, write_corpus
from lnrm_codec.evaluation.curves import DEFAULT_QPS, curves_to_csv, format_value, read_curves_csv
from lnrm_codec.evaluation.pipeline import DEFAULT_VARIANTS, run_report_pipeline, run_sweep_pipeline
from lnrm_codec.evaluation.report import measure_overhead, parse_variants
from lnrm_codec.lib.data.imageio import load_frame, save_frame, save_map, write_gradient
from lnrm_codec.lib.errors import CodecError, ContractError
from lnrm_codec.lib.models import Frame
from lnrm_codec.lib.utils import setup_logging
from lnrm_codec.metrics.base import FiniteDifferenceMetric, Metric
from lnrm_codec.metrics.external import external_metric
from lnrm_codec.metrics.tv_score import DEFAULT_EPSILON, TvScore

logger = logging.getLogger("lnrm_codec")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors by raising instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _qp(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"QP must be an integer, got '{text}'") from None
    if not QP_MIN <= value <= QP_MAX:
        raise argparse.ArgumentTypeError(f"QP must lie in [{QP_MIN}, {QP_MAX}], got {value}")
    return value


def _qp_list(text: str) -> List[int]:
    values = [_qp(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("QP list is empty")
    return values


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected a number, got '{text}'") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"Expected a positive number, got {value}")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"--threads must be >= 1, got {value}")
    return value


def _variants(text: str):
    try:
        return parse_variants(text)
    except ContractError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _metric_arg(text: str) -> str:
    if text == "tv" or (text.startswith("external:") and len(text) > len("external:")):
        return text
    raise argparse.ArgumentTypeError(f"Metric must be 'tv' or 'external:<path>', got '{text}'")


def build_metric(spec: Optional[str], epsilon: float = DEFAULT_EPSILON, luma_only: bool = False,
                 source: Optional[Frame] = None, fd_step: Optional[float] = None) -> Optional[Metric]:
    """Metric from its command-line form: 'tv' or 'external:<path>'."""
    if spec is None:
        return None
    if spec == "tv":
        metric = TvScore(epsilon, luma_only=luma_only)
        return FiniteDifferenceMetric(metric, fd_step) if fd_step else metric
    return external_metric(spec[len("external:"):], source)


def _add_metric_args(p: argparse.ArgumentParser, default: Optional[str] = "tv"):
    p.add_argument("--metric", type=_metric_arg, default=default, help="tv or external:<gradient file>")
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON, help="TvScore smoothing constant")
    p.add_argument("--luma-only", action="store_true", help="TvScore on the luma plane only")


def _add_rdo_args(p: argparse.ArgumentParser):
    p.add_argument("--c", type=_positive, default=DEFAULT_C, help="Lagrangian constant (default: 0.85)")
    p.add_argument("--threads", type=_threads, default=1, help="Worker threads (never changes output)")


def build_parser() -> CliParser:
    parser = CliParser(prog="lnrm-codec", description="Block-transform image codec with metric-aware RDO")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)
    sub.required = True

    p = sub.add_parser("encode", help="Encode a PGM/PPM frame")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--qp", type=_qp, default=28)
    p.add_argument("--mode", choices=[m.value for m in RdoMode], default=RdoMode.SSE.value)
    p.add_argument("--alpha", type=_positive, default=DEFAULT_ALPHA, help="tau = alpha * tau_tilde (2, 1 or 0.5)")
    p.add_argument("--tau", type=_positive, default=None, help="Explicit tau (overrides --alpha)")
    p.add_argument("--recon", help="Also write the reconstruction here")
    p.add_argument("--bits-map", help="Write the per-macroblock bit allocation of luma as PGM")
    _add_metric_args(p, default=None)
    _add_rdo_args(p)

    p = sub.add_parser("decode", help="Decode a bitstream to PGM/PPM")
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("grad", help="Export a metric gradient as an LNRMG1 file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--fd-step", type=_positive, default=None, help="Use central differences with this step")
    _add_metric_args(p)

    p = sub.add_parser("sweep", help="RD sweep of one image; CSV to stdout or --out")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--qp-list", type=_qp_list, default=list(DEFAULT_QPS))
    p.add_argument("--variants", type=_variants, default=parse_variants("sse,lnrm:1"))
    _add_metric_args(p)
    _add_rdo_args(p)

    p = sub.add_parser("bdrate", help="BD-rate between two RD CSV files")
    p.add_argument("anchor")
    p.add_argument("test")
    p.add_argument("--column", default="psnr_db")
    p.add_argument("--image", help="Only this image")
    p.add_argument("--anchor-variant")
    p.add_argument("--test-variant")

    p = sub.add_parser("report", help="Corpus BD-rate table")
    p.add_argument("corpus_dir")
    p.add_argument("--out-dir", help="Directory for curves.csv and report.csv (default: results/)")
    p.add_argument("--qp-list", type=_qp_list, default=list(DEFAULT_QPS))
    p.add_argument("--variants", type=_variants, default=parse_variants(DEFAULT_VARIANTS))
    _add_metric_args(p)
    _add_rdo_args(p)

    p = sub.add_parser("corpus", help="Write the synthetic UGC corpus")
    p.add_argument("output_dir")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--planes", type=int, choices=(1, 3), default=1)
    p.add_argument("--noise", type=float, default=6.0)
    p.add_argument("--banding", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("overhead", help="Encoder time of LNRM-RDO relative to SSE-RDO")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--qp", type=_qp, default=28)
    p.add_argument("--alpha", type=_positive, default=DEFAULT_ALPHA)
    _add_metric_args(p)
    p.add_argument("--c", type=_positive, default=DEFAULT_C)
    return parser


def _emit(text: str):
    sys.stdout.write(text)
    sys.stdout.flush()


def cmd_encode(args) -> int:
    frame = load_frame(args.input)
    mode = RdoMode(args.mode)
    metric_spec = args.metric or ("tv" if mode.uses_metric else None)
    metric = build_metric(metric_spec, args.epsilon, args.luma_only, source=frame)
    config = RdoConfig(qp=args.qp, mode=mode, c=args.c, alpha=args.alpha, tau_override=args.tau)
    stream, report = encode(frame, config, metric=metric, threads=args.threads)
    with open(args.output, "wb") as f:
        f.write(stream)
    if args.recon:
        save_frame(report.reconstruction, args.recon)
    if args.bits_map:
        save_map(bits_map(report, 0), args.bits_map)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    with open(args.input, "rb") as f:
        frame = decode(f.read())
    save_frame(frame, args.output)
    logger.info(f"Decoded {args.input} -> {args.output}")
    return EXIT_OK


def cmd_grad(args) -> int:
    frame = load_frame(args.input)
    metric = build_metric(args.metric, args.epsilon, args.luma_only, source=frame, fd_step=args.fd_step)
    field = metric.gradient(frame)
    write_gradient(field, args.output)
    logger.info(f"Gradient of {metric.name} written to {args.output} (norm {field.norm():.6g})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    metric = build_metric(args.metric, args.epsilon, args.luma_only, source=load_frame(args.input))
    curves = run_sweep_pipeline(args.input, args.variants, args.qp_list, metric=metric, c=args.c,
                                threads=args.threads, out_path=args.out)
    if not args.out:
        _emit(curves_to_csv(curves))
    return EXIT_OK


def _pick(curves, image: Optional[str], variant: Optional[str], role: str):
    if image is not None:
        curves = [c for c in curves if c.image == image]
    if variant is not None:
        curves = [c for c in curves if c.variant == variant]
    images = {c.image for c in curves}
    if len(curves) != len(images):
        raise UsageError(f"{role} CSV holds several variants per image; choose one with --{role}-variant")
    return {c.image: c for c in curves}


def cmd_bdrate(args) -> int:
    anchors = _pick(read_curves_csv(args.anchor), args.image, args.anchor_variant, "anchor")
    tests = _pick(read_curves_csv(args.test), args.image, args.test_variant, "test")
    common = sorted(set(anchors) & set(tests))
    if not common:
        raise UsageError("The two CSV files share no image")
    lines = ["image,anchor,test,column,bd_rate,flagged"]
    for image in common:
        result = bd_rate_report(anchors[image], tests[image], args.column)
        lines.append(f"{image},{result.anchor},{result.test},{args.column},"
                     f"{format_value(result.bd_rate)},{int(result.flagged)}")
    _emit("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    metric = build_metric(args.metric, args.epsilon, args.luma_only)
    table = run_report_pipeline(args.corpus_dir, args.variants, args.qp_list, metric=metric, c=args.c,
                                threads=args.threads, output_dir=args.out_dir)
    _emit(table.to_csv())
    return EXIT_OK


def cmd_corpus(args) -> int:
    spec = CorpusSpec(count=args.count, width=args.width, height=args.height, planes=args.planes,
                      noise_sigma=args.noise, banding_levels=args.banding, seed=args.seed)
    paths = write_corpus(args.output_dir, spec)
    _emit("".join(p + "\n" for p in paths))
    return EXIT_OK


def cmd_overhead(args) -> int:
    frames = [load_frame(path) for path in args.inputs]
    metric = build_metric(args.metric, args.epsilon, args.luma_only, source=frames[0] if len(frames) == 1 else None)
    result = measure_overhead(frames, args.qp, args.alpha, metric, args.c)
    _emit(json.dumps(result.to_dict(), indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "grad": cmd_grad,
    "sweep": cmd_sweep,
    "bdrate": cmd_bdrate,
    "report": cmd_report,
    "corpus": cmd_corpus,
    "overhead": cmd_overhead,
}


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except (CodecError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA
