#!/bin/env python3
"""Evaluate 360-degree video projection formats: resampling, quality
metrics, BD-rate tables and codec-in-the-loop runs
"""
import argparse
import json
import logging
import os
import sys

from omnirate import (
    CHROMA_444, CodecError, ConfigError, ContractError, DataError,
    DomainError, FrameGeometry, PipelineStateError, SequenceIOError)
from omnirate.bd import FITS, compare_curves, read_curves_csv
from omnirate.config import load_config
from omnirate.logger import (
    add_file_handler, remove_file_handler, setup_module_logging)
from omnirate.metrics import (
    POOLING_MODES, aggregate_sequence, frame_quality)
from omnirate.pipeline import load_run, run_pipeline
from omnirate.projections import FORMATS, ProjectionSpec
from omnirate.report import DEFAULT_REPORT_FORMATS, REPORT_FORMATS, emit_report
from omnirate.resampler import (
    SEAM_MODES, Kernel, convert_chroma, resample_frame)
from omnirate.yuv import SequenceHeaderless, read_frames, write_frames


log = logging.getLogger(__name__)

EXIT_COMMAND = 12
EXIT_CODEC = 13
EXIT_IO = 14
EXIT_DATA = 15
EXIT_STATE = 16


class CommandError(Exception):
    """ An error that will nicely pop up to user and stops program
    """
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


def _add_geometry_args(parser, prefix='', required=True):
    parser.add_argument(
        '--{}width'.format(prefix), type=int, required=required,
        help="frame width in luma samples")
    parser.add_argument(
        '--{}height'.format(prefix), type=int, required=required,
        help="frame height in luma samples")
    parser.add_argument(
        '--{}bit-depth'.format(prefix), type=int, default=8, choices=(8, 10),
        help="sample bit depth, default 8")
    parser.add_argument(
        '--{}chroma'.format(prefix), default='420', choices=('420', '444'),
        help="chroma format, default 420")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)

    subparsers = parser.add_subparsers(dest='command')

    parser_convert = subparsers.add_parser(
        'convert', help=perform_convert.__doc__)
    parser_convert.set_defaults(func=perform_convert)

    parser_metrics = subparsers.add_parser(
        'metrics', help=perform_metrics.__doc__)
    parser_metrics.set_defaults(func=perform_metrics)

    parser_bd = subparsers.add_parser(
        'bd', help=perform_bd.__doc__)
    parser_bd.set_defaults(func=perform_bd)

    parser_run = subparsers.add_parser(
        'run', help=perform_run.__doc__)
    parser_run.set_defaults(func=perform_run)

    parser_report = subparsers.add_parser(
        'report', help=perform_report.__doc__)
    parser_report.set_defaults(func=perform_report)

    for i in (parser_convert, parser_metrics, parser_bd, parser_run,
              parser_report):
        i.add_argument(
            '--debug',
            required=False, action='store_true', default=False,
            help="More output")

    for i in (parser_convert, parser_metrics):
        i.add_argument(
            '--frames',
            type=int, required=False,
            help="number of frames to process, default all")

    for i in (parser_run, parser_report):
        i.add_argument(
            '--formats',
            required=False, default=','.join(DEFAULT_REPORT_FORMATS),
            help="comma separated report formats among {}".format(
                ', '.join(REPORT_FORMATS)))

    parser_convert.add_argument('input')
    parser_convert.add_argument('output')
    _add_geometry_args(parser_convert)
    parser_convert.add_argument(
        '--from-format', default='erp', choices=FORMATS,
        help="projection format of the input, default erp")
    parser_convert.add_argument(
        '--to-format', required=True, choices=FORMATS,
        help="projection format of the output")
    parser_convert.add_argument(
        '--to-width', type=int,
        help="output width, default: the format's coded width")
    parser_convert.add_argument(
        '--to-height', type=int,
        help="output height, default: the format's coded height")
    parser_convert.add_argument(
        '--to-chroma', choices=('420', '444'),
        help="output chroma format, default: same as input")
    parser_convert.add_argument(
        '--coeffs',
        help="comma separated polynomial warp coefficients a,b for "
             "hec, acp and gcp output")
    parser_convert.add_argument(
        '--kernel', default='lanczos',
        help="nearest, bilinear or lanczos[-taps], default lanczos (3 taps)")
    parser_convert.add_argument(
        '--seams', default='clamp', choices=SEAM_MODES,
        help="clamp taps at face tiles and poles (default), or sphere: "
             "fetch across face seams and poles")

    parser_metrics.add_argument('reference')
    parser_metrics.add_argument('test')
    _add_geometry_args(parser_metrics)
    parser_metrics.add_argument(
        '--pooling', default='mean-db', choices=POOLING_MODES,
        help="sequence pooling, default mean-db")
    parser_metrics.add_argument(
        '--json', action='store_true', default=False,
        help="print JSON instead of a table")

    parser_bd.add_argument(
        'curves',
        help="CSV file with label,rate_bpp,quality_db columns")
    parser_bd.add_argument(
        '--anchor',
        help="label of the anchor curve, default: the first one")
    parser_bd.add_argument(
        '--fit', default='pchip', choices=FITS,
        help="curve fit, default pchip")

    parser_run.add_argument('config', help="YAML run configuration")
    parser_run.add_argument(
        '--output-dir',
        help="overrides output_dir of the configuration")

    parser_report.add_argument(
        'output_dir', help="output directory of a previous run")
    parser_report.add_argument(
        '--report-dir',
        help="where to write the report, default <output_dir>/report")

    return parser.parse_args(argv)


def _report_formats(args):
    formats = [f.strip() for f in args.formats.split(',') if f.strip()]
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise CommandError('Unknown report formats: {}'.format(
            ', '.join(sorted(unknown))))
    return formats


def _geometry(args):
    try:
        return FrameGeometry(
            args.width, args.height, args.bit_depth, args.chroma)
    except ContractError as e:
        raise CommandError(str(e))


def _read(path, geometry, frames):
    seq = SequenceHeaderless.open(path, geometry)
    if frames is not None and frames > seq.frame_count:
        raise CommandError('{} holds {} frames, {} requested'.format(
            path, seq.frame_count, frames))
    return read_frames(seq, 0, frames)


def perform_convert(args):
    """ Resample a raw YUV file to another projection format or size
    """
    geometry = _geometry(args)
    src_spec = ProjectionSpec.from_name(args.from_format, geometry=geometry)
    coeffs = None
    if args.coeffs:
        try:
            coeffs = [float(c) for c in args.coeffs.split(',')]
        except ValueError:
            raise CommandError('Invalid coefficients "{}"'.format(args.coeffs))
    dst_spec = ProjectionSpec.from_name(args.to_format, coeffs)
    if args.to_width or args.to_height:
        g = dst_spec.coded_geometry
        dst_spec = dst_spec.with_geometry(g.replace(
            width=args.to_width or g.width, height=args.to_height or g.height))
    try:
        kernel = Kernel.from_name(args.kernel)
    except ValueError as e:
        raise CommandError('Invalid kernel "{}": {}'.format(args.kernel, e))
    out_chroma = args.to_chroma or geometry.chroma

    frames = _read(args.input, geometry, args.frames)
    log.info('Converting {} frames {} {} -> {} {}x{}'.format(
        len(frames), args.from_format, geometry, args.to_format,
        dst_spec.coded_geometry.width, dst_spec.coded_geometry.height))
    out = [convert_chroma(resample_frame(
        convert_chroma(f, CHROMA_444), src_spec, dst_spec, kernel,
        seams=args.seams), out_chroma)
        for f in frames]
    seq = write_frames(out, args.output)
    log.info('Wrote {} frames of {} to {}'.format(
        seq.frame_count, seq.geometry, args.output))


def perform_metrics(args):
    """ PSNR and WS-PSNR between two ERP YUV files
    """
    geometry = _geometry(args)
    ref = _read(args.reference, geometry, args.frames)
    test = _read(args.test, geometry, args.frames)
    if len(ref) != len(test):
        raise CommandError('{} has {} frames, {} has {}'.format(
            args.reference, len(ref), args.test, len(test)))
    if not ref:
        raise CommandError('No frame to compare')
    result = aggregate_sequence(
        [frame_quality(a, b) for a, b in zip(ref, test)], args.pooling)
    values = result.as_dict()
    if args.json:
        print(json.dumps(values, indent=2, sort_keys=True))
    else:
        for name in sorted(values):
            print('{:<12} {:10.4f}'.format(name, values[name]))


def perform_bd(args):
    """ BD-rate, BD-quality and overlap of curves read from CSV
    """
    curves = read_curves_csv(args.curves)
    if len(curves) < 2:
        raise CommandError('{} needs at least two curves'.format(args.curves))
    anchor_label = args.anchor or next(iter(curves))
    if anchor_label not in curves:
        raise CommandError('No curve labelled "{}"'.format(anchor_label))
    anchor = curves[anchor_label]
    print('{:<16} {:>10} {:>10} {:>7}'.format(
        'label', 'BD-rate %', 'BD-dB', 'IoU'))
    for label, curve in curves.items():
        if label == anchor_label:
            continue
        result = compare_curves(anchor, curve, args.fit)
        print('{:<16} {:>10.4f} {:>10.4f} {:>7.4f}{}'.format(
            label, result.bd_rate, result.bd_quality, result.iou,
            ' *' if result.flagged else ''))


def perform_run(args):
    """ Run the full evaluation described by a configuration file
    """
    formats = _report_formats(args)
    cfg = load_config(args.config, args.output_dir)
    os.makedirs(cfg.output_dir, exist_ok=True)
    package_log = logging.getLogger('omnirate')
    handler = add_file_handler(
        package_log, os.path.join(cfg.output_dir, 'run.log'))
    try:
        log.info('Running {} cells into {}'.format(
            len(cfg.sequences) * len(cfg.formats) * sum(
                len(c.quality_points) for c in cfg.codecs), cfg.output_dir))
        report = run_pipeline(cfg)
        if report.failed:
            log.warning('{} cells failed'.format(len(report.failed)))
        emit_report(report, os.path.join(cfg.output_dir, 'report'), formats)
    finally:
        remove_file_handler(package_log, handler)


def perform_report(args):
    """ Write the report of a previous run again
    """
    formats = _report_formats(args)
    report = load_run(args.output_dir)
    emit_report(report, args.report_dir or os.path.join(
        args.output_dir, 'report'), formats)


EXIT_CODES = (
    (CommandError, EXIT_COMMAND),
    (ConfigError, EXIT_COMMAND),
    (CodecError, EXIT_CODEC),
    (SequenceIOError, EXIT_IO),
    (PipelineStateError, EXIT_STATE),
    (DataError, EXIT_DATA),
    (ContractError, EXIT_DATA),
    (DomainError, EXIT_DATA),
)


def main(argv=None):
    args = parse_args(argv)

    if hasattr(args, 'func'):
        if args.debug:
            loglevel = logging.DEBUG
        else:
            loglevel = logging.INFO

        # Configure global logging
        setup_module_logging('omnirate', level=loglevel)
        try:
            args.func(args)

        except tuple(error for error, _ in EXIT_CODES) as e:
            log.error(e)
            for error, code in EXIT_CODES:
                if isinstance(e, error):
                    sys.exit(code)
    else:
        parse_args(['--help'])


if __name__ == '__main__':
    main()
