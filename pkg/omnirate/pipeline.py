""" End-to-end evaluation runs

For every (sequence, codec, format, quality point) cell: the ERP source is
brought to 4:4:4, resampled to the format, coded, resampled back to the
source ERP geometry, brought back to the source chroma format and measured
against the untouched source.

Layout of the output directory:

    run.json                  manifest: resolutions, settings, cell keys
    run.log
    cells/<key>/result.json   one per cell, key = sha256 of the cell config
    cells/<key>/*.log         codec tool output
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import (
    CHROMA_444, CodecError, DataError, FrameGeometry, InsufficientDataError,
    PipelineStateError)
from .bd import FLAG_IOU, RdCurve, compare_curves
from .codecs import CellContext
from .metrics import (
    QualityResult, aggregate_sequence, capped, frame_quality)
from .projections import REFERENCE_RESOLUTIONS, ProjectionSpec
from .resampler import convert_chroma, resample_frame
from .yuv import read_frames

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
ANCHOR_FORMAT = 'erp'
BD_METRICS = ('yuv_psnr', 'yuv_wspsnr')


@dataclass(frozen=True)
class Cell:
    sequence: str
    codec: str
    format: str
    q: int


@dataclass
class CellResult:
    cell: Cell
    key: str
    status: str
    bits: int = 0
    rate_bpp: float = 0.0
    coded_width: int = 0
    coded_height: int = 0
    frames: int = 0
    quality: Optional[QualityResult] = None
    error: str = ''

    @property
    def ok(self):
        return self.status == 'ok'

    def as_dict(self):
        return {
            'sequence': self.cell.sequence, 'codec': self.cell.codec,
            'format': self.cell.format, 'q': self.cell.q, 'key': self.key,
            'status': self.status, 'bits': self.bits,
            'rate_bpp': self.rate_bpp, 'coded_width': self.coded_width,
            'coded_height': self.coded_height, 'frames': self.frames,
            'quality': self.quality.as_dict() if self.quality else None,
            'error': self.error,
        }

    @classmethod
    def from_dict(cls, data):
        quality = data.get('quality')
        return cls(
            Cell(data['sequence'], data['codec'], data['format'], data['q']),
            data['key'], data['status'], data['bits'], data['rate_bpp'],
            data['coded_width'], data['coded_height'], data['frames'],
            QualityResult.from_dict(quality) if quality else None,
            data.get('error', ''))


@dataclass
class BdEntry:
    """ One BD value of a format against the same codec's ERP curve

    sequence is None for the per-codec average over sequences.
    """
    codec: str
    format: str
    metric: str
    sequence: Optional[str] = None
    bd_rate: Optional[float] = None
    bd_quality: Optional[float] = None
    iou: Optional[float] = None
    reason: str = ''

    @property
    def available(self):
        return self.bd_rate is not None

    @property
    def flagged(self):
        return self.available and self.iou < FLAG_IOU

    def as_dict(self):
        return {
            'codec': self.codec, 'format': self.format, 'metric': self.metric,
            'sequence': self.sequence, 'bd_rate': self.bd_rate,
            'bd_quality': self.bd_quality, 'iou': self.iou,
            'flagged': self.flagged, 'available': self.available,
            'reason': self.reason,
        }


@dataclass
class EvalReport:
    manifest: dict
    cells: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    bd: list = field(default_factory=list)

    @property
    def formats(self):
        return manifest_formats(self.manifest)

    @property
    def codecs(self):
        return [c['name'] for c in self.manifest['codecs']]

    @property
    def settings(self):
        return self.manifest['settings']

    def averages(self, codec=None, metric=None):
        return [e for e in self.bd if e.sequence is None
                and codec in (None, e.codec) and metric in (None, e.metric)]

    def as_dict(self):
        return {
            'settings': self.settings,
            'resolutions': self.manifest['formats'],
            'cells': [c.as_dict() for c in self.cells],
            'failed': [c.as_dict() for c in self.failed],
            'bd': [e.as_dict() for e in self.bd],
        }


# Cell keys

def spec_dict(spec):
    g = spec.coded_geometry
    return {'format': spec.format,
            'coeffs': [list(pair) for pair in spec.warp_coeffs],
            'width': g.width, 'height': g.height}


def cell_config(cfg, seq, codec, spec, q):
    """ Everything a cell result depends on
    """
    return {
        'sequence': seq.as_dict(),
        'frames': cfg.frames,
        'codec': codec.describe(),
        'format': spec_dict(spec),
        'q': q,
        'kernel': str(cfg.kernel),
        'seams': cfg.seams,
        'gop': cfg.gop,
        'color_range': cfg.color_range,
        'pooling': cfg.pooling,
        'rate_normalization': cfg.rate_normalization,
    }


def cell_key(config):
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _cell_dir(output_dir, key):
    return os.path.join(output_dir, 'cells', key)


def _write_json(path, data):
    tmp = path + '.tmp'
    with open(tmp, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')
    os.replace(tmp, path)


def _read_json(path):
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        raise PipelineStateError('{} is missing'.format(path))
    except (OSError, ValueError) as e:
        raise PipelineStateError('{} is unreadable: {}'.format(path, e))


def load_cell(output_dir, key):
    data = _read_json(os.path.join(_cell_dir(output_dir, key), 'result.json'))
    try:
        return CellResult.from_dict(data)
    except (KeyError, TypeError) as e:
        raise PipelineStateError('Cell {} result is corrupt: {}'.format(
            key, e))


def _completed(output_dir, key):
    path = os.path.join(_cell_dir(output_dir, key), 'result.json')
    if not os.path.isfile(path):
        return None
    result = load_cell(output_dir, key)
    return result if result.ok else None


# Manifest

def manifest_formats(manifest):
    return [entry['name'] for entry in manifest['formats']]


def build_manifest(cfg, keys):
    return {
        'version': MANIFEST_VERSION,
        # a list keeps the configured order through sort_keys
        'formats': [
            {
                'name': spec.format,
                'coded': [spec.coded_geometry.width,
                          spec.coded_geometry.height],
                'reference': list(REFERENCE_RESOLUTIONS[spec.format]),
                'coeffs': [list(p) for p in spec.warp_coeffs],
            } for spec in cfg.formats],
        'reference_resolutions': {
            name: list(size) for name, size in REFERENCE_RESOLUTIONS.items()},
        'sequences': [seq.as_dict() for seq in cfg.sequences],
        'codecs': [dict(codec.describe(),
                        quality_points=list(codec.quality_points))
                   for codec in cfg.codecs],
        'settings': {
            'frames': cfg.frames, 'gop': cfg.gop, 'kernel': str(cfg.kernel),
            'seams': cfg.seams,
            'bd_fit': cfg.bd_fit, 'pooling': cfg.pooling,
            'rate_normalization': cfg.rate_normalization,
            'color_range': cfg.color_range, 'coded_scale': cfg.coded_scale,
            'min_bd_points': cfg.min_bd_points,
        },
        'cells': [dict(sequence=c.sequence, codec=c.codec, format=c.format,
                       q=c.q, key=key) for c, key in keys],
    }


# Running

def source_spec(seq):
    return ProjectionSpec.from_name('erp', geometry=seq.geometry)


def _coded_spec(spec, seq):
    g = spec.coded_geometry
    return spec.with_geometry(FrameGeometry(
        g.width, g.height, seq.geometry.bit_depth, CHROMA_444))


class _SequenceRun:
    """ Source frames of one sequence and their forward resamplings
    """
    def __init__(self, cfg, seq):
        self.cfg = cfg
        self.seq = seq
        self.spec = source_spec(seq)
        self.source = read_frames(seq.open(), 0, cfg.frames)
        self.source_444 = [convert_chroma(f, CHROMA_444) for f in self.source]
        self._coded = {}

    def coded_frames(self, spec):
        if spec.format not in self._coded:
            log.info('Resampling {} to {} {}x{}'.format(
                self.seq.name, spec.format, spec.coded_geometry.width,
                spec.coded_geometry.height))
            self._coded[spec.format] = [
                resample_frame(f, self.spec, spec, self.cfg.kernel,
                               workers=self.cfg.parallelism,
                               seams=self.cfg.seams)
                for f in self.source_444]
        return self._coded[spec.format]

    def measure(self, recon, spec):
        back = [convert_chroma(
            resample_frame(f, spec, self.spec, self.cfg.kernel,
                           seams=self.cfg.seams),
            self.seq.geometry.chroma) for f in recon]
        return aggregate_sequence(
            [frame_quality(a, b) for a, b in zip(self.source, back)],
            self.cfg.pooling)

    def pixels(self, spec):
        if self.cfg.rate_normalization == 'coded':
            g = spec.coded_geometry
        else:
            g = self.seq.geometry
        return g.width * g.height * self.cfg.frames


def _run_cell(cfg, run, codec, spec, cell, key):
    workdir = _cell_dir(cfg.output_dir, key)
    os.makedirs(workdir, exist_ok=True)
    log.info('Cell {} / {} / {} / q={} started'.format(
        cell.sequence, cell.codec, cell.format, cell.q))
    g = spec.coded_geometry
    result = CellResult(cell, key, 'failed', coded_width=g.width,
                        coded_height=g.height, frames=cfg.frames)
    ctx = CellContext(workdir, run.seq.frame_rate, cfg.gop, cfg.tool_dir,
                      cfg.color_range)
    try:
        coded = codec.run(run.coded_frames(spec), cell.q, ctx)
        if len(coded.frames) != cfg.frames or any(
                f.geometry.width != g.width or f.geometry.height != g.height
                for f in coded.frames):
            raise CodecError('{} returned frames not matching {}'.format(
                codec.name, g))
    except CodecError as e:
        result.error = str(e)
        log.error('Cell {} / {} / {} / q={} failed: {}'.format(
            cell.sequence, cell.codec, cell.format, cell.q, e))
        _write_json(os.path.join(workdir, 'result.json'), result.as_dict())
        return result
    result.status = 'ok'
    result.bits = coded.bits
    result.rate_bpp = coded.bits / run.pixels(spec)
    result.quality = run.measure(coded.frames, spec)
    _write_json(os.path.join(workdir, 'result.json'), result.as_dict())
    log.info('Cell {} / {} / {} / q={} done: {:.5f} bpp, {:.3f} dB'.format(
        cell.sequence, cell.codec, cell.format, cell.q, result.rate_bpp,
        capped(result.quality.yuv_wspsnr)))
    return result


def plan_cells(cfg):
    """ [(Cell, key, sequence, codec, spec)] in report order
    """
    plan = []
    for seq in cfg.sequences:
        for codec in cfg.codecs:
            for fmt in cfg.formats:
                spec = _coded_spec(fmt, seq)
                for q in codec.quality_points:
                    key = cell_key(cell_config(cfg, seq, codec, spec, q))
                    plan.append((Cell(seq.name, codec.name, fmt.format, q),
                                 key, seq, codec, spec))
    return plan


def run_pipeline(cfg):
    """ Run every cell of the configuration, reusing completed ones
    """
    os.makedirs(os.path.join(cfg.output_dir, 'cells'), exist_ok=True)
    plan = plan_cells(cfg)
    manifest = build_manifest(cfg, [(cell, key) for cell, key, *_ in plan])
    _write_json(os.path.join(cfg.output_dir, 'run.json'), manifest)

    results = {}
    for seq in cfg.sequences:
        pending = []
        for cell, key, cell_seq, codec, spec in plan:
            if cell_seq is not seq:
                continue
            done = _completed(cfg.output_dir, key)
            if done is not None:
                log.info('Cell {} / {} / {} / q={} cached'.format(
                    cell.sequence, cell.codec, cell.format, cell.q))
                results[key] = done
            else:
                pending.append((cell, key, codec, spec))
        if not pending:
            continue
        run = _SequenceRun(cfg, seq)
        # forward resampling once per format, before the cells fan out
        for _, _, _, spec in pending:
            run.coded_frames(spec)
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = [
                (key, pool.submit(_run_cell, cfg, run, codec, spec, cell, key))
                for cell, key, codec, spec in pending]
            for key, future in futures:
                results[key] = future.result()

    return build_report(manifest, [results[key] for _, key, *_ in plan])


def load_run(output_dir):
    """ EvalReport of a previous run from its manifest and cell results
    """
    manifest = _read_json(os.path.join(output_dir, 'run.json'))
    if manifest.get('version') != MANIFEST_VERSION:
        raise PipelineStateError('Unsupported manifest version {}'.format(
            manifest.get('version')))
    try:
        manifest_formats(manifest)
    except (KeyError, TypeError) as e:
        raise PipelineStateError('Manifest formats are corrupt: {}'.format(e))
    results = [load_cell(output_dir, entry['key'])
               for entry in manifest['cells']]
    return build_report(manifest, results)


# BD tables

def _curve_points(cells, metric):
    points = []
    for c in cells:
        value = getattr(c.quality, metric)
        if c.rate_bpp > 0 and value != float('inf'):
            points.append((c.rate_bpp, value))
    return points


def _bd_entry(codec, fmt, metric, seq, anchor_cells, test_cells, settings):
    entry = BdEntry(codec, fmt, metric, seq)
    minimum = settings['min_bd_points']
    anchor_points = _curve_points(anchor_cells, metric)
    test_points = _curve_points(test_cells, metric)
    if min(len(anchor_points), len(test_points)) < minimum:
        entry.reason = 'fewer than {} lossy points'.format(minimum)
        return entry
    try:
        anchor = RdCurve.from_points(anchor_points)
        test = RdCurve.from_points(test_points)
        if fmt == ANCHOR_FORMAT:
            entry.bd_rate, entry.bd_quality, entry.iou = 0.0, 0.0, 1.0
            return entry
        result = compare_curves(anchor, test, settings['bd_fit'])
    except (DataError, InsufficientDataError) as e:
        entry.reason = str(e)
        return entry
    entry.bd_rate = result.bd_rate
    entry.bd_quality = result.bd_quality
    entry.iou = result.iou
    return entry


def _average(codec, fmt, metric, entries):
    entry = BdEntry(codec, fmt, metric)
    ok = [e for e in entries if e.available]
    if not ok:
        entry.reason = 'no sequence has a BD value'
        return entry
    entry.bd_rate = sum(e.bd_rate for e in ok) / len(ok)
    entry.bd_quality = sum(e.bd_quality for e in ok) / len(ok)
    # flagged as soon as one sequence is
    entry.iou = min(e.iou for e in ok)
    return entry


def compute_bd_tables(manifest, cells):
    settings = manifest['settings']
    formats = manifest_formats(manifest)
    sequences = [s['name'] for s in manifest['sequences']]
    index = {}
    for c in cells:
        if c.ok:
            index.setdefault((c.cell.sequence, c.cell.codec, c.cell.format),
                             []).append(c)
    entries = []
    for codec in manifest['codecs']:
        if len(codec['quality_points']) < 2:
            log.warning('Codec {} has fewer than 2 quality points, '
                        'no BD table'.format(codec['name']))
            continue
        for metric in BD_METRICS:
            for fmt in formats:
                per_seq = []
                for seq in sequences:
                    if ANCHOR_FORMAT not in formats:
                        per_seq.append(BdEntry(
                            codec['name'], fmt, metric, seq,
                            reason='no ERP anchor in this run'))
                        continue
                    per_seq.append(_bd_entry(
                        codec['name'], fmt, metric, seq,
                        index.get((seq, codec['name'], ANCHOR_FORMAT), []),
                        index.get((seq, codec['name'], fmt), []), settings))
                for e in per_seq:
                    if not e.available:
                        log.warning('BD {} {} {} {} unavailable: {}'.format(
                            e.codec, e.format, e.metric, e.sequence, e.reason))
                entries.extend(per_seq)
                entries.append(_average(codec['name'], fmt, metric, per_seq))
    return entries


def build_report(manifest, results):
    report = EvalReport(manifest)
    report.cells = [r for r in results if r.ok]
    report.failed = [r for r in results if not r.ok]
    report.bd = compute_bd_tables(manifest, report.cells)
    return report
