""" Raw planar YUV sequences and BT.709 colour conversion

Files carry no header: Y, U then V planes for every frame, one byte per
sample at 8-bit and little-endian 16-bit words at 10-bit.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import (
    CHROMA_444, ContractError, DataError, Frame, FrameGeometry,
    SequenceIOError)

log = logging.getLogger(__name__)

# BT.709 luma coefficients
KR = 0.2126
KB = 0.0722
KG = 1.0 - KR - KB

COLOR_RANGES = ('limited', 'full')


@dataclass(frozen=True)
class SequenceHeaderless:
    path: str
    geometry: Optional[FrameGeometry]
    frame_rate: float = 25.0
    frame_count: int = 0

    @classmethod
    def open(cls, path, geometry, frame_rate=25.0):
        """ Describe an existing file, counting its complete frames
        """
        try:
            size = os.path.getsize(path)
        except OSError as e:
            raise SequenceIOError('Cannot open {}: {}'.format(path, e))
        return cls(path, geometry, frame_rate, size // geometry.frame_bytes)

    @property
    def frame_bytes(self):
        return self.geometry.frame_bytes if self.geometry else 0


def _read_plane(data, offset, shape, geometry):
    count = shape[0] * shape[1]
    plane = np.frombuffer(
        data, dtype=geometry.dtype, count=count, offset=offset)
    if geometry.bit_depth > 8:
        plane = plane.astype(np.uint16)
        if plane.size and plane.max() > geometry.max_value:
            raise DataError('Sample {} above {} in {}-bit data'.format(
                plane.max(), geometry.max_value, geometry.bit_depth))
    return plane.reshape(shape).copy(), offset + count * geometry.bytes_per_sample


def read_frames(seq, start=0, stop=None):
    """ Read frames [start, stop) of a sequence
    """
    stop = seq.frame_count if stop is None else stop
    if start < 0 or stop < start or stop > seq.frame_count:
        raise ContractError(
            'Frame range [{}, {}) outside the {} frames of {}'.format(
                start, stop, seq.frame_count, seq.path))
    g = seq.geometry
    frames = []
    try:
        with open(seq.path, 'rb') as f:
            f.seek(start * g.frame_bytes)
            for index in range(start, stop):
                data = f.read(g.frame_bytes)
                if len(data) != g.frame_bytes:
                    raise SequenceIOError(
                        '{} is truncated at frame {} ({} of {} bytes)'.format(
                            seq.path, index, len(data), g.frame_bytes))
                planes = []
                offset = 0
                for shape in g.plane_shapes:
                    plane, offset = _read_plane(data, offset, shape, g)
                    planes.append(plane)
                frames.append(Frame.from_planes(planes, g))
    except SequenceIOError:
        raise
    except OSError as e:
        raise SequenceIOError('Cannot read {}: {}'.format(seq.path, e))
    log.debug('Read {} frames from {}'.format(len(frames), seq.path))
    return frames


def write_frames(frames, path, frame_rate=25.0):
    geometries = set(f.geometry for f in frames)
    if len(geometries) > 1:
        raise ContractError('Frames of {} mix geometries: {}'.format(
            path, ', '.join(sorted(str(g) for g in geometries))))
    geometry = geometries.pop() if geometries else None
    try:
        with open(path, 'wb') as out:
            for frame in frames:
                if not frame.is_integer:
                    raise ContractError('Only integer frames can be stored')
                frame.check_range()
                for plane in frame.planes:
                    out.write(plane.astype(geometry.dtype).tobytes())
    except OSError as e:
        raise SequenceIOError('Cannot write {}: {}'.format(path, e))
    return SequenceHeaderless(path, geometry, frame_rate, len(frames))


@dataclass(eq=False)
class RgbFrame:
    r: np.ndarray
    g: np.ndarray
    b: np.ndarray
    bit_depth: int = 8

    @property
    def planes(self):
        return (self.r, self.g, self.b)


def _round(values, top, dtype):
    return np.clip(np.floor(values + 0.5), 0, top).astype(dtype)


def _scales(bit_depth, color_range):
    """ (luma offset, luma excursion, chroma excursion) in sample units
    """
    if color_range not in COLOR_RANGES:
        raise ContractError('Unknown colour range "{}"'.format(color_range))
    if color_range == 'full':
        top = (1 << bit_depth) - 1
        return 0.0, float(top), float(top)
    unit = float(1 << (bit_depth - 8))
    return 16 * unit, 219 * unit, 224 * unit


def yuv_to_rgb_bt709(f, color_range='limited'):
    g = f.geometry
    if g.chroma != CHROMA_444:
        raise ContractError('BT.709 conversion needs 4:4:4, got {}'.format(
            g.chroma))
    offset, y_scale, c_scale = _scales(g.bit_depth, color_range)
    mid = 1 << (g.bit_depth - 1)
    yn = (f.y.astype(float) - offset) / y_scale
    cb = (f.u.astype(float) - mid) / c_scale
    cr = (f.v.astype(float) - mid) / c_scale
    r = yn + 2 * (1 - KR) * cr
    b = yn + 2 * (1 - KB) * cb
    gr = (yn - KR * r - KB * b) / KG
    top = g.max_value
    return RgbFrame(*(_round(c * top, top, g.dtype) for c in (r, gr, b)),
                    bit_depth=g.bit_depth)


def rgb_to_yuv_bt709(rgb, color_range='limited'):
    height, width = rgb.r.shape
    geometry = FrameGeometry(width, height, rgb.bit_depth, CHROMA_444)
    offset, y_scale, c_scale = _scales(rgb.bit_depth, color_range)
    mid = 1 << (rgb.bit_depth - 1)
    top = geometry.max_value
    r, gr, b = (c.astype(float) / top for c in rgb.planes)
    yn = KR * r + KG * gr + KB * b
    cb = (b - yn) / (2 * (1 - KB))
    cr = (r - yn) / (2 * (1 - KR))
    planes = [_round(offset + y_scale * yn, top, geometry.dtype),
              _round(mid + c_scale * cb, top, geometry.dtype),
              _round(mid + c_scale * cr, top, geometry.dtype)]
    return Frame.from_planes(planes, geometry)


def rgb_to_planar_frame(rgb):
    """ Pack R, G, B in a 4:4:4 frame so that RGB can travel as raw planes
    """
    height, width = rgb.r.shape
    geometry = FrameGeometry(width, height, rgb.bit_depth, CHROMA_444)
    return Frame(rgb.r, rgb.g, rgb.b, geometry)


def planar_frame_to_rgb(f):
    return RgbFrame(f.y, f.u, f.v, f.geometry.bit_depth)
