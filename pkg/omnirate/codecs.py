""" Codec adapters: the codec under test is a black box taking frames and a
quality point, returning a bit count and reconstructed frames.
"""

import logging
import os
import shlex
import string
import struct
import subprocess
from dataclasses import dataclass

import numpy as np

from . import (
    CHROMA_420, CHROMA_444, CodecError, ConfigError, ContractError, DataError,
    Frame, FrameGeometry, SequenceIOError)
from .yuv import (
    SequenceHeaderless, planar_frame_to_rgb, read_frames,
    rgb_to_planar_frame, rgb_to_yuv_bt709, write_frames, yuv_to_rgb_bt709)

log = logging.getLogger(__name__)

CODEC_KINDS = ('null', 'mock-quantizer', 'external')
COLOR_MODES = ('rgb-bt709', 'yuv-direct')

PLACEHOLDERS = (
    'input', 'recon', 'bitstream', 'q', 'width', 'height', 'bitdepth',
    'framerate', 'gop', 'frames', 'tooldir')
ENCODE_REQUIRED = ('input', 'bitstream')
DECODE_REQUIRED = ('bitstream', 'recon')


@dataclass(frozen=True)
class CellContext:
    """ Per-cell settings a codec may need
    """
    workdir: str
    frame_rate: float = 25.0
    gop: int = 32
    tool_dir: str = ''
    color_range: str = 'limited'


@dataclass(eq=False)
class CodecResult:
    bits: int
    frames: list


class CodecAdapter:
    kind = None

    def __init__(self, name, quality_points, color_mode='yuv-direct'):
        if color_mode not in COLOR_MODES:
            raise ConfigError('Codec {}: unknown color mode "{}"'.format(
                name, color_mode))
        self.name = name
        self.quality_points = list(quality_points)
        self.color_mode = color_mode

    def run(self, frames, q, ctx):
        """ Code 4:4:4 YUV frames, converting through RGB when configured
        """
        if q not in self.quality_points:
            raise ContractError('Codec {} has no quality point {}'.format(
                self.name, q))
        if self.color_mode == 'rgb-bt709':
            coded = [rgb_to_planar_frame(yuv_to_rgb_bt709(f, ctx.color_range))
                     for f in frames]
            result = self.code(coded, q, ctx)
            result.frames = [
                rgb_to_yuv_bt709(planar_frame_to_rgb(f), ctx.color_range)
                for f in result.frames]
            return result
        return self.code(frames, q, ctx)

    def code(self, frames, q, ctx):
        """ To be overloaded by child classes

        :return: a CodecResult
        """
        raise NotImplementedError

    def describe(self):
        """ Everything that changes the codec output, for cache keys
        """
        return {'name': self.name, 'kind': self.kind,
                'color_mode': self.color_mode}


class NullCodec(CodecAdapter):
    """ Identity: reconstruction equals input, nothing is transmitted
    """
    kind = 'null'

    def code(self, frames, q, ctx):
        return CodecResult(0, [Frame.from_planes(
            [p.copy() for p in f.planes], f.geometry) for f in frames])


# Mock quantizer

MOCK_STEPS = (32, 16, 8, 4)
MOCK_MAGIC = b'OMQ1'
_HEADER = struct.Struct('<4sHHBBHB')


def mock_step(q, bit_depth):
    if q not in range(len(MOCK_STEPS)):
        raise ContractError('Mock quantizer q must be in 0..3, got {}'.format(q))
    return MOCK_STEPS[q] << (bit_depth - 8)


def _dpcm(levels):
    """ Horizontal prediction, first column predicted from the row above
    """
    residual = np.empty_like(levels)
    residual[:, 1:] = levels[:, 1:] - levels[:, :-1]
    residual[1:, 0] = levels[1:, 0] - levels[:-1, 0]
    residual[0, 0] = levels[0, 0]
    return residual


def _undo_dpcm(residual):
    first = np.cumsum(residual[:, 0])
    rows = residual.copy()
    rows[:, 0] = first
    return np.cumsum(rows, axis=1)


def _map_levels(levels):
    return np.where(levels > 0, 2 * (levels - 1), -2 * levels - 1)


def _unmap_level(code):
    return code // 2 + 1 if code % 2 == 0 else -(code + 1) // 2


def ue_length(values):
    """ Bit length of order-0 exp-Golomb codes, 2*floor(log2(k+1)) + 1
    """
    _, exponent = np.frexp(np.asarray(values, dtype=float) + 1)
    return 2 * (exponent.astype(np.int64) - 1) + 1


def _symbols(residual):
    """ (zero run, mapped level) pairs followed by the trailing run
    """
    flat = residual.ravel()
    nonzero = np.flatnonzero(flat)
    starts = np.concatenate(([0], nonzero[:-1] + 1))
    runs = nonzero - starts
    trailing = flat.size - (nonzero[-1] + 1 if nonzero.size else 0)
    symbols = np.empty(2 * nonzero.size + 1, dtype=np.int64)
    symbols[0:-1:2] = runs
    symbols[1:-1:2] = _map_levels(flat[nonzero])
    symbols[-1] = trailing
    return symbols


def _pack(symbols):
    lengths = ue_length(symbols)
    values = symbols + 1
    total = int(lengths.sum())
    starts = np.cumsum(lengths) - lengths
    code_len = np.repeat(lengths, lengths)
    offset = np.arange(total) - np.repeat(starts, lengths)
    bits = (np.repeat(values, lengths) >> (code_len - 1 - offset)) & 1
    return total, np.packbits(bits.astype(np.uint8)).tobytes()


def _unpack(payload, bit_count, sample_count):
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:bit_count]
    residual = np.zeros(sample_count, dtype=np.int64)
    cursor = 0

    def read_ue():
        nonlocal cursor
        zeros = 0
        while bits[cursor] == 0:
            zeros += 1
            cursor += 1
        value = 0
        for bit in bits[cursor:cursor + zeros + 1]:
            value = (value << 1) | int(bit)
        cursor += zeros + 1
        return value - 1

    pos = 0
    while True:
        pos += read_ue()
        if pos >= sample_count:
            break
        residual[pos] = _unmap_level(read_ue())
        pos += 1
    return residual


class MockQuantizerCodec(CodecAdapter):
    """ Uniform scalar quantizer with a DPCM / exp-Golomb payload

    Stands in for a real codec so that whole runs can be tested. Step sizes
    are MOCK_STEPS for q = 0..3, scaled by 2^(bit_depth - 8).
    """
    kind = 'mock-quantizer'

    def __init__(self, name='mock', quality_points=(0, 1, 2, 3),
                 color_mode='yuv-direct', verify=False):
        super().__init__(name, quality_points, color_mode)
        self.verify = verify
        for q in self.quality_points:
            mock_step(q, 8)

    def quantize(self, plane, q, bit_depth):
        step = mock_step(q, bit_depth)
        levels = np.floor(plane.astype(float) / step).astype(np.int64)
        return levels

    def reconstruct(self, levels, q, bit_depth, dtype):
        step = mock_step(q, bit_depth)
        top = (1 << bit_depth) - 1
        # mid-rise reconstruction
        values = np.clip(levels * step + step // 2, 0, top)
        return values.astype(dtype)

    def encode(self, frames, q):
        """ (payload bit count, reconstructed frames, bitstream bytes)
        """
        if not frames:
            raise ContractError('Nothing to encode')
        g = frames[0].geometry
        chunks = [_HEADER.pack(
            MOCK_MAGIC, g.width, g.height, g.bit_depth,
            0 if g.chroma == CHROMA_420 else 1, len(frames), q)]
        bits = 0
        recon = []
        for frame in frames:
            planes = []
            for plane in frame.planes:
                levels = self.quantize(plane, q, g.bit_depth)
                count, payload = _pack(_symbols(_dpcm(levels)))
                bits += count
                chunks.append(struct.pack('<I', count))
                chunks.append(payload)
                planes.append(self.reconstruct(levels, q, g.bit_depth, g.dtype))
            recon.append(Frame.from_planes(planes, g))
        return bits, recon, b''.join(chunks)

    def decode(self, data):
        """ Frames back from an encoded bitstream
        """
        magic, width, height, bit_depth, chroma, count, q = _HEADER.unpack_from(
            data)
        if magic != MOCK_MAGIC:
            raise CodecError('Not a mock quantizer bitstream')
        g = FrameGeometry(width, height, bit_depth,
                          CHROMA_420 if chroma == 0 else CHROMA_444)
        offset = _HEADER.size
        frames = []
        for _ in range(count):
            planes = []
            for shape in g.plane_shapes:
                (bit_count,) = struct.unpack_from('<I', data, offset)
                offset += 4
                size = (bit_count + 7) // 8
                residual = _unpack(
                    data[offset:offset + size], bit_count, shape[0] * shape[1])
                offset += size
                levels = _undo_dpcm(residual.reshape(shape))
                planes.append(self.reconstruct(levels, q, bit_depth, g.dtype))
            frames.append(Frame.from_planes(planes, g))
        return frames

    def code(self, frames, q, ctx):
        bits, recon, data = self.encode(frames, q)
        with open(os.path.join(ctx.workdir, 'bitstream.bin'), 'wb') as f:
            f.write(data)
        if self.verify and not all(
                a.same_content(b) for a, b in zip(self.decode(data), recon)):
            raise CodecError(
                '{} bitstream does not decode to its reconstruction'.format(
                    self.name))
        return CodecResult(bits, recon)


# External command

def template_fields(template):
    try:
        return {name for _, name, _, _ in string.Formatter().parse(template)
                if name is not None}
    except ValueError as e:
        raise ConfigError('Malformed command template "{}": {}'.format(
            template, e))


def validate_template(template, required, what):
    names = template_fields(template)
    unknown = names - set(PLACEHOLDERS)
    if unknown:
        raise ConfigError('{} template uses unknown placeholders: {}'.format(
            what, ', '.join(sorted(unknown))))
    missing = set(required) - names
    if missing:
        raise ConfigError('{} template lacks {}'.format(
            what, ', '.join('{' + m + '}' for m in sorted(missing))))


class ExternalCodec(CodecAdapter):
    """ Runs encode and decode command lines built from templates

    Tool output goes to encode.log and decode.log in the cell directory.
    """
    kind = 'external'

    def __init__(self, name, quality_points, encode, decode,
                 color_mode='rgb-bt709', timeout=None):
        super().__init__(name, quality_points, color_mode)
        validate_template(encode, ENCODE_REQUIRED, 'Encode')
        validate_template(decode, DECODE_REQUIRED, 'Decode')
        self.encode_template = encode
        self.decode_template = decode
        self.timeout = timeout

    def describe(self):
        info = super().describe()
        info.update(encode=self.encode_template, decode=self.decode_template)
        return info

    def _invoke(self, step, template, values, ctx):
        cmd = template.format(**{k: shlex.quote(str(v))
                                 for k, v in values.items()})
        log.debug('{} {}: {}'.format(self.name, step, cmd))
        log_path = os.path.join(ctx.workdir, '{}.log'.format(step))
        try:
            with open(log_path, 'wb') as out:
                proc = subprocess.run(
                    shlex.split(cmd), stdout=out, stderr=subprocess.STDOUT,
                    cwd=ctx.workdir, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            raise CodecError('{} {} timed out after {}s'.format(
                self.name, step, self.timeout), _tail(log_path))
        except OSError as e:
            raise CodecError('{} {} could not start: {}'.format(
                self.name, step, e), _tail(log_path))
        if proc.returncode < 0:
            raise CodecError('{} {} killed by signal {}'.format(
                self.name, step, -proc.returncode), _tail(log_path))
        if proc.returncode != 0:
            raise CodecError('{} {} exited with status {}'.format(
                self.name, step, proc.returncode), _tail(log_path))

    def code(self, frames, q, ctx):
        g = frames[0].geometry
        paths = {
            'input': os.path.join(ctx.workdir, 'input.yuv'),
            'bitstream': os.path.join(ctx.workdir, 'bitstream.bin'),
            'recon': os.path.join(ctx.workdir, 'recon.yuv'),
        }
        write_frames(frames, paths['input'], ctx.frame_rate)
        values = dict(paths, q=q, width=g.width, height=g.height,
                      bitdepth=g.bit_depth, framerate=ctx.frame_rate,
                      gop=ctx.gop, frames=len(frames), tooldir=ctx.tool_dir)
        self._invoke('encode', self.encode_template, values, ctx)
        if not os.path.isfile(paths['bitstream']):
            raise CodecError('{} encode produced no bitstream'.format(
                self.name))
        bits = 8 * os.path.getsize(paths['bitstream'])
        self._invoke('decode', self.decode_template, values, ctx)
        if not os.path.isfile(paths['recon']):
            raise CodecError('{} decode produced no reconstruction'.format(
                self.name))
        expected = len(frames) * g.frame_bytes
        actual = os.path.getsize(paths['recon'])
        if actual != expected:
            raise CodecError(
                '{} reconstruction is {} bytes, {} frames of {} need {}'.format(
                    self.name, actual, len(frames), g, expected))
        try:
            recon = read_frames(SequenceHeaderless(
                paths['recon'], g, ctx.frame_rate, len(frames)))
        except (SequenceIOError, DataError, ContractError) as e:
            raise CodecError('{} reconstruction unreadable: {}'.format(
                self.name, e))
        os.remove(paths['input'])
        return CodecResult(bits, recon)


def _tail(path, size=4096):
    try:
        with open(path, 'rb') as f:
            f.seek(0, os.SEEK_END)
            f.seek(max(0, f.tell() - size))
            return f.read().decode(errors='replace')
    except OSError:
        return ''


def create_codec(spec):
    """ Adapter from a validated codec mapping of the run configuration
    """
    kind = spec.get('kind', 'external')
    name = spec['name']
    points = spec.get('quality_points', (0, 1, 2, 3))
    if kind == 'null':
        return NullCodec(name, points, spec.get('color_mode', 'yuv-direct'))
    if kind == 'mock-quantizer':
        return MockQuantizerCodec(name, points,
                                  spec.get('color_mode', 'yuv-direct'),
                                  spec.get('verify', False))
    if kind == 'external':
        for key in ('encode', 'decode'):
            if key not in spec:
                raise ConfigError('Codec {} needs an {} template'.format(
                    name, key))
        return ExternalCodec(name, points, spec['encode'], spec['decode'],
                             spec.get('color_mode', 'rgb-bt709'),
                             spec.get('timeout'))
    raise ConfigError('Codec {}: unknown kind "{}"'.format(name, kind))
