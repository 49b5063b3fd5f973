""" Run configuration: a versioned YAML file validated once at load time
"""

import logging
import os
from dataclasses import dataclass, field

import yaml

from . import (
    CHROMA_420, ConfigError, ContractError, DomainError, FrameGeometry,
    OmnirateError)
from .bd import FITS
from .codecs import CODEC_KINDS, create_codec
from .metrics import POOLING_MODES
from .projections import ProjectionSpec
from .resampler import SEAM_MODES, Kernel
from .yuv import COLOR_RANGES, SequenceHeaderless

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOOL_DIR_ENV = 'OMNIRATE_TOOL_DIR'

RATE_NORMALIZATIONS = ('source', 'coded')

TOP_LEVEL_KEYS = {
    'version', 'output_dir', 'frames', 'gop', 'parallelism', 'kernel',
    'bd_fit', 'pooling', 'rate_normalization', 'color_range', 'coded_scale',
    'min_bd_points', 'sequences', 'formats', 'codecs', 'tool_dir',
    'seams'}
SEQUENCE_KEYS = {
    'name', 'path', 'width', 'height', 'bit_depth', 'chroma', 'frame_rate'}
FORMAT_KEYS = {'name', 'coeffs', 'width', 'height'}
CODEC_KEYS = {
    'name', 'kind', 'quality_points', 'color_mode', 'encode', 'decode',
    'timeout', 'verify'}


@dataclass(frozen=True)
class SequenceConfig:
    name: str
    path: str
    geometry: FrameGeometry
    frame_rate: float = 25.0

    def open(self):
        return SequenceHeaderless.open(self.path, self.geometry,
                                       self.frame_rate)

    def as_dict(self):
        g = self.geometry
        return {'name': self.name, 'path': self.path, 'width': g.width,
                'height': g.height, 'bit_depth': g.bit_depth,
                'chroma': g.chroma, 'frame_rate': self.frame_rate}


@dataclass
class RunConfig:
    output_dir: str
    sequences: list
    formats: list
    codecs: list
    frames: int = 32
    gop: int = 32
    parallelism: int = 1
    kernel: Kernel = field(default_factory=Kernel)
    bd_fit: str = 'pchip'
    pooling: str = 'mean-db'
    rate_normalization: str = 'source'
    color_range: str = 'limited'
    coded_scale: float = 1.0
    min_bd_points: int = 4
    tool_dir: str = ''
    seams: str = 'clamp'


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError('{}: missing "{}"'.format(where, key))
    return mapping[key]


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError('{}: expected a mapping, got {!r}'.format(
            where, mapping))
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError('{}: unknown keys {}'.format(
            where, ', '.join(sorted(unknown))))


def _choice(data, key, choices, default):
    value = data.get(key, default)
    if value not in choices:
        raise ConfigError('"{}" must be one of {}, got {!r}'.format(
            key, ', '.join(choices), value))
    return value


def _positive_int(data, key, default):
    value = data.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError('"{}" must be a positive integer, got {!r}'.format(
            key, value))
    return value


def _parse_sequence(item, base_dir, frames, index):
    where = 'sequences[{}]'.format(index)
    _check_keys(item, SEQUENCE_KEYS, where)
    path = str(_require(item, 'path', where))
    if not os.path.isabs(path):
        path = os.path.normpath(os.path.join(base_dir, path))
    try:
        geometry = FrameGeometry(
            int(_require(item, 'width', where)),
            int(_require(item, 'height', where)),
            int(item.get('bit_depth', 8)),
            str(item.get('chroma', CHROMA_420)))
    except (ContractError, ValueError) as e:
        raise ConfigError('{}: {}'.format(where, e))
    seq = SequenceConfig(
        str(item.get('name', os.path.splitext(os.path.basename(path))[0])),
        path, geometry, float(item.get('frame_rate', 25.0)))
    if not os.path.isfile(path):
        raise ConfigError('{}: {} does not exist'.format(where, path))
    available = seq.open().frame_count
    if frames > available:
        raise ConfigError('{}: {} frames requested, {} holds {}'.format(
            where, frames, path, available))
    return seq


def _parse_format(item, scale, index):
    where = 'formats[{}]'.format(index)
    if isinstance(item, str):
        item = {'name': item}
    _check_keys(item, FORMAT_KEYS, where)
    name = str(_require(item, 'name', where))
    try:
        spec = ProjectionSpec.from_name(name, item.get('coeffs'), scale=scale)
        if 'width' in item or 'height' in item:
            g = spec.coded_geometry
            spec = spec.with_geometry(g.replace(
                width=int(item.get('width', g.width)),
                height=int(item.get('height', g.height))))
    except (DomainError, ContractError, ValueError) as e:
        raise ConfigError('{}: {}'.format(where, e))
    return spec


def _parse_codec(item, index):
    where = 'codecs[{}]'.format(index)
    _check_keys(item, CODEC_KEYS, where)
    _require(item, 'name', where)
    _choice(item, 'kind', CODEC_KINDS, 'external')
    points = item.get('quality_points', [0, 1, 2, 3])
    if (not isinstance(points, list) or not points
            or len(set(points)) != len(points)
            or not all(isinstance(q, int) for q in points)):
        raise ConfigError('{}: quality_points must be distinct integers'.format(
            where))
    try:
        return create_codec(item)
    except OmnirateError as e:
        raise ConfigError('{}: {}'.format(where, e))


def config_from_dict(data, base_dir='.', output_dir=None):
    _check_keys(data, TOP_LEVEL_KEYS, 'configuration')
    version = data.get('version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError('Unsupported configuration version {}'.format(
            version))
    frames = _positive_int(data, 'frames', 32)
    try:
        scale = float(data.get('coded_scale', 1.0))
    except (TypeError, ValueError):
        raise ConfigError('"coded_scale" must be a number')
    if scale <= 0:
        raise ConfigError('"coded_scale" must be positive')
    try:
        kernel = Kernel.from_name(str(data.get('kernel', 'lanczos')))
    except (ContractError, ValueError) as e:
        raise ConfigError('"kernel": {}'.format(e))

    sequences = [_parse_sequence(item, base_dir, frames, i)
                 for i, item in enumerate(data.get('sequences') or [])]
    formats = [_parse_format(item, scale, i)
               for i, item in enumerate(data.get('formats') or [])]
    codecs = [_parse_codec(item, i)
              for i, item in enumerate(data.get('codecs') or [])]
    for what, items, key in (('sequence', sequences, 'name'),
                             ('format', formats, 'format'),
                             ('codec', codecs, 'name')):
        if not items:
            raise ConfigError('At least one {} is required'.format(what))
        names = [getattr(i, key) for i in items]
        if len(set(names)) != len(names):
            raise ConfigError('Duplicate {} names: {}'.format(
                what, ', '.join(names)))

    out = output_dir or data.get('output_dir', 'omnirate-run')
    if not os.path.isabs(out):
        out = os.path.normpath(os.path.join(base_dir, out))
    return RunConfig(
        output_dir=out,
        sequences=sequences,
        formats=formats,
        codecs=codecs,
        frames=frames,
        gop=_positive_int(data, 'gop', 32),
        parallelism=_positive_int(data, 'parallelism', 1),
        kernel=kernel,
        bd_fit=_choice(data, 'bd_fit', FITS, 'pchip'),
        pooling=_choice(data, 'pooling', POOLING_MODES, 'mean-db'),
        rate_normalization=_choice(
            data, 'rate_normalization', RATE_NORMALIZATIONS, 'source'),
        color_range=_choice(data, 'color_range', COLOR_RANGES, 'limited'),
        coded_scale=scale,
        min_bd_points=_positive_int(data, 'min_bd_points', 4),
        tool_dir=str(data.get('tool_dir', os.environ.get(TOOL_DIR_ENV, ''))),
        seams=_choice(data, 'seams', SEAM_MODES, 'clamp'),
    )


def load_config(path, output_dir=None):
    """ Read and validate a run configuration file

    :param output_dir: overrides the file's output_dir
    """
    try:
        with open(path, 'r') as stream:
            data = yaml.safe_load(stream)
    except OSError as e:
        raise ConfigError('Cannot read {}: {}'.format(path, e))
    except yaml.YAMLError as e:
        raise ConfigError('{} is not valid YAML: {}'.format(path, e))
    if data is None:
        raise ConfigError('{} is empty'.format(path))
    log.debug('Loaded configuration {}'.format(path))
    return config_from_dict(
        data, os.path.dirname(os.path.abspath(path)), output_dir)
