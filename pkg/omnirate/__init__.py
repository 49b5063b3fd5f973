""" Shared value types and errors for 360-degree format evaluation
"""

from dataclasses import dataclass

import numpy as np

CHROMA_420 = '420'
CHROMA_444 = '444'
CHROMA_FORMATS = (CHROMA_420, CHROMA_444)
BIT_DEPTHS = (8, 10)


class OmnirateError(Exception):
    """ Base of every error raised by this package
    """


class DomainError(OmnirateError, ValueError):
    pass


class ContractError(OmnirateError, ValueError):
    pass


class DataError(OmnirateError, ValueError):
    pass


class SequenceIOError(OmnirateError, IOError):
    pass


class CodecError(OmnirateError):
    """ A codec run failed

    :param output: captured tool output, kept for the cell log
    """
    def __init__(self, msg, output=''):
        super().__init__(msg)
        self.output = output


class PipelineStateError(OmnirateError):
    pass


class ConfigError(OmnirateError):
    pass


class InsufficientDataError(ContractError):
    pass


class DisjointCurvesError(DataError):
    pass


@dataclass(frozen=True)
class FrameGeometry:
    width: int
    height: int
    bit_depth: int = 8
    chroma: str = CHROMA_420

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ContractError('Invalid frame size {}x{}'.format(
                self.width, self.height))
        if self.bit_depth not in BIT_DEPTHS:
            raise ContractError('Unsupported bit depth {}'.format(
                self.bit_depth))
        if self.chroma not in CHROMA_FORMATS:
            raise ContractError('Unsupported chroma format {}'.format(
                self.chroma))
        if self.chroma == CHROMA_420 and (self.width % 2 or self.height % 2):
            raise ContractError(
                '4:2:0 frames need even dimensions, got {}x{}'.format(
                    self.width, self.height))

    @property
    def max_value(self):
        return (1 << self.bit_depth) - 1

    @property
    def bytes_per_sample(self):
        return 1 if self.bit_depth == 8 else 2

    @property
    def dtype(self):
        return np.dtype(np.uint8) if self.bit_depth == 8 else np.dtype('<u2')

    @property
    def chroma_shape(self):
        """ (rows, columns) of each chroma plane
        """
        if self.chroma == CHROMA_420:
            return self.height // 2, self.width // 2
        return self.height, self.width

    @property
    def plane_shapes(self):
        return [(self.height, self.width), self.chroma_shape, self.chroma_shape]

    @property
    def frame_samples(self):
        return sum(h * w for h, w in self.plane_shapes)

    @property
    def frame_bytes(self):
        return self.frame_samples * self.bytes_per_sample

    def replace(self, **kwargs):
        values = {
            'width': self.width, 'height': self.height,
            'bit_depth': self.bit_depth, 'chroma': self.chroma}
        values.update(kwargs)
        return FrameGeometry(**values)

    def __str__(self):
        return '{}x{} {}bit {}'.format(
            self.width, self.height, self.bit_depth, self.chroma)


@dataclass(eq=False)
class Frame:
    """ Planar YUV picture

    Planes are integer arrays for stored video; float arrays are accepted
    everywhere so that processing chains can run without rounding.
    """
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    geometry: FrameGeometry

    def __post_init__(self):
        shapes = self.geometry.plane_shapes
        for name, plane, shape in zip('yuv', self.planes, shapes):
            if plane.shape != shape:
                raise ContractError(
                    'Plane {} has shape {}, geometry {} implies {}'.format(
                        name, plane.shape, self.geometry, shape))

    @property
    def planes(self):
        return (self.y, self.u, self.v)

    @property
    def is_integer(self):
        return np.issubdtype(self.y.dtype, np.integer)

    @classmethod
    def from_planes(cls, planes, geometry):
        y, u, v = planes
        return cls(y, u, v, geometry)

    @classmethod
    def constant(cls, geometry, value_y, value_u=None, value_v=None):
        mid = 1 << (geometry.bit_depth - 1)
        values = (value_y,
                  mid if value_u is None else value_u,
                  mid if value_v is None else value_v)
        planes = [np.full(shape, value, dtype=geometry.dtype)
                  for shape, value in zip(geometry.plane_shapes, values)]
        return cls.from_planes(planes, geometry)

    def check_range(self):
        """ Raise if a sample lies outside [0, 2^bit_depth - 1]
        """
        top = self.geometry.max_value
        for name, plane in zip('yuv', self.planes):
            if plane.size and (plane.min() < 0 or plane.max() > top):
                raise DataError('Plane {} outside [0, {}]'.format(name, top))

    def same_content(self, other):
        return (self.geometry == other.geometry and all(
            np.array_equal(a, b) for a, b in zip(self.planes, other.planes)))
