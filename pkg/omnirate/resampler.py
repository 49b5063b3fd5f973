""" Resampling between projection formats and chroma formats

A destination pixel is traced through the sphere back into the source
packed frame, then interpolated there with a separable kernel.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import (
    CHROMA_420, CHROMA_444, ContractError, DomainError, Frame)
from .projections import (
    face_to_xyz, forward_map, inverse_map, tile_positions)
from .sphere import pixel_grid

log = logging.getLogger(__name__)

KERNEL_FAMILIES = ('nearest', 'bilinear', 'lanczos')

# clamp: taps stop at the owning face tile, and at the poles of ERP/AEP
# sphere: tiles are padded from their neighbours, poles are crossed
SEAM_MODES = ('clamp', 'sphere')

ROWS_PER_BLOCK = 64


@dataclass(frozen=True)
class Kernel:
    family: str = 'lanczos'
    taps: int = 3

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ContractError('Unknown kernel "{}"'.format(self.family))
        if self.family != 'lanczos':
            object.__setattr__(self, 'taps', 1)
        elif self.taps < 1:
            raise ContractError('Lanczos needs at least one tap')

    @classmethod
    def from_name(cls, name):
        """ "lanczos", "lanczos3", "lanczos-2", "bilinear" or "nearest"
        """
        name = name.strip().lower()
        if name.startswith('lanczos'):
            taps = name[len('lanczos'):].lstrip('-')
            return cls('lanczos', int(taps) if taps else 3)
        return cls(name)

    def for_chroma(self):
        if self.family == 'lanczos':
            return Kernel('lanczos', min(self.taps, 2))
        return self

    def __str__(self):
        if self.family == 'lanczos':
            return 'lanczos-{}'.format(self.taps)
        return self.family


BILINEAR = Kernel('bilinear')


def kernel_weight(k, x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if k.family == 'nearest':
        w = (ax < 0.5).astype(float)
    elif k.family == 'bilinear':
        w = np.maximum(0.0, 1.0 - ax)
    else:
        # np.sinc is the normalized sinc sin(pi x) / (pi x)
        w = np.where(ax < k.taps, np.sinc(x) * np.sinc(x / k.taps), 0.0)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class TilePadding:
    """ Source positions of every sample of the padded tiles of a plane

    Each tile is extended by `pad` samples on every side. Margin samples
    are traced through the sphere into the neighbouring tiles, so that
    kernels never read across a seam.
    """
    pad: int
    tile_width: int
    tile_height: int
    x0: np.ndarray
    y0: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray


@dataclass(frozen=True)
class CoordinateMap:
    """ Source sampling positions of every destination pixel of one plane

    For panoramic sources qx, qy are in plane index space (pixel centers at
    integers). For packed sources they are in the index space of the tile
    given by `face`, padded when `padding` is set.
    """
    qx: np.ndarray
    qy: np.ndarray
    face: np.ndarray = None
    tiles: tuple = None
    padding: TilePadding = None
    reflect_poles: bool = False


# Local coordinates of margin samples are capped so that tiny tiles still
# map to valid directions
PADDING_REACH = 1.5


def _tile_origins(spec, shape):
    height, width = shape
    tiles = tile_positions(spec.format)
    tw, th = width // 3, height // 2
    x0 = np.array([tiles[name][0] * tw for name in spec.faces])
    y0 = np.array([tiles[name][1] * th for name in spec.faces])
    return tw, th, x0, y0


def _build_padding(spec, shape, pad):
    tw, th, x0, y0 = _tile_origins(spec, shape)
    n = len(spec.faces)
    i = np.arange(-pad, tw + pad)
    j = np.arange(-pad, th + pad)
    s = np.clip(2 * (i + 0.5) / tw - 1, -PADDING_REACH, PADDING_REACH)
    t = np.clip(1 - 2 * (j + 0.5) / th, -PADDING_REACH, PADDING_REACH)
    ss, tt = np.meshgrid(s, t)
    face = np.broadcast_to(np.arange(n)[:, None, None], (n,) + ss.shape)
    ss = np.broadcast_to(ss, face.shape)
    tt = np.broadcast_to(tt, face.shape)
    x, y, z = face_to_xyz(spec, face, ss, tt)
    owner, _, _, su, sv = inverse_map(spec, x, y, z)
    return TilePadding(
        pad=pad, tile_width=tw, tile_height=th, x0=x0, y0=y0,
        qx=su * shape[1] - 0.5, qy=sv * shape[0] - 0.5,
        x_lo=x0[owner], x_hi=x0[owner] + tw - 1,
        y_lo=y0[owner], y_hi=y0[owner] + th - 1)


@lru_cache(maxsize=16)
def _cached_padding(spec, shape, pad):
    return _build_padding(spec, shape, pad)


def split_tiles(plane, tiles):
    """ Stack of the face tiles of a packed plane, shaped (faces, th, tw)
    """
    tw, th, x0, y0 = tiles
    return np.stack([plane[y:y + th, x:x + tw] for x, y in zip(x0, y0)])


def pad_tiles(plane, padding):
    """ Stack of padded tiles, shaped (faces, th + 2 pad, tw + 2 pad)

    Margins are bilinear samples of the owning tile; tile interiors are
    copied unchanged.
    """
    xs, wx = _taps(padding.qx, BILINEAR)
    ys, wy = _taps(padding.qy, BILINEAR)
    xs = np.clip(xs, padding.x_lo[..., None], padding.x_hi[..., None])
    ys = np.clip(ys, padding.y_lo[..., None], padding.y_hi[..., None])
    out = np.zeros(padding.qx.shape)
    for n in range(ys.shape[-1]):
        for m in range(xs.shape[-1]):
            out += wy[..., n] * wx[..., m] * plane[ys[..., n], xs[..., m]]
    p, tw, th = padding.pad, padding.tile_width, padding.tile_height
    for f, (x0, y0) in enumerate(zip(padding.x0, padding.y0)):
        out[f, p:p + th, p:p + tw] = plane[y0:y0 + th, x0:x0 + tw]
    return out


def _build_map(src_spec, src_shape, dst_spec, dst_shape, pad, seams):
    src_h, src_w = src_shape
    dst_h, dst_w = dst_shape
    if not src_spec.is_panoramic and (src_w % 3 or src_h % 2):
        raise ContractError(
            'Plane {}x{} cannot be split in 3x2 {} tiles'.format(
                src_w, src_h, src_spec.format))
    u, v = pixel_grid(dst_w, dst_h)
    x, y, z = forward_map(dst_spec, u, v)
    face, _, _, su, sv = inverse_map(src_spec, x, y, z)
    qx = su * src_w - 0.5
    qy = sv * src_h - 0.5
    if src_spec.is_panoramic:
        return CoordinateMap(qx=qx, qy=qy, reflect_poles=seams == 'sphere')
    if seams == 'clamp':
        tiles = _tile_origins(src_spec, src_shape)
        _, _, x0, y0 = tiles
        return CoordinateMap(qx=qx - x0[face], qy=qy - y0[face], face=face,
                             tiles=tiles)
    padding = _cached_padding(src_spec, tuple(src_shape), pad)
    return CoordinateMap(
        qx=qx - padding.x0[face] + pad, qy=qy - padding.y0[face] + pad,
        face=face, padding=padding)


_map_lock = threading.Lock()


@lru_cache(maxsize=16)
def _cached_map(src_spec, src_shape, dst_spec, dst_shape, pad, seams):
    log.debug('Building coordinate map {} {} -> {} {} ({} seams)'.format(
        src_spec.format, src_shape, dst_spec.format, dst_shape, seams))
    return _build_map(src_spec, src_shape, dst_spec, dst_shape, pad, seams)


def coordinate_map(src_spec, src_shape, dst_spec, dst_shape, pad=3,
                   seams='clamp'):
    """ Cached map of dst pixels into src

    pad is the tap reach served by the padded tiles of seams='sphere'.
    """
    if seams not in SEAM_MODES:
        raise ContractError('Unknown seam mode "{}"'.format(seams))
    # built once under the lock, read-shared afterwards
    with _map_lock:
        return _cached_map(
            src_spec, tuple(src_shape), dst_spec, tuple(dst_shape), pad,
            seams)


def _taps(q, kernel):
    if kernel.family == 'nearest':
        pos = np.floor(q + 0.5).astype(np.int64)[..., None]
        return pos, np.ones(pos.shape)
    base = np.floor(q).astype(np.int64)
    offsets = np.arange(1 - kernel.taps, kernel.taps + 1)
    pos = base[..., None] + offsets
    weights = kernel_weight(kernel, q[..., None] - pos)
    return pos, weights / weights.sum(axis=-1, keepdims=True)


def _interpolate_rows(src, cmap, kernel, rows):
    xs, wx = _taps(cmap.qx[rows], kernel)
    ys, wy = _taps(cmap.qy[rows], kernel)
    acc = np.zeros(xs.shape[:-1])
    if cmap.face is None:
        height, width = src.shape
        for n in range(ys.shape[-1]):
            yn = ys[..., n]
            shift = 0
            if cmap.reflect_poles:
                # rows past a pole continue on the opposite meridian
                over = (yn < 0) | (yn >= height)
                yn = np.where(yn < 0, -1 - yn,
                              np.where(yn >= height, 2 * height - 1 - yn, yn))
                shift = np.where(over, width // 2, 0)
            yn = np.clip(yn, 0, height - 1)
            row_acc = np.zeros(xs.shape[:-1])
            for m in range(xs.shape[-1]):
                row_acc += wx[..., m] * src[yn, (xs[..., m] + shift) % width]
            acc += wy[..., n] * row_acc
        return acc
    face = cmap.face[rows]
    _, height, width = src.shape
    xs = np.clip(xs, 0, width - 1)
    ys = np.clip(ys, 0, height - 1)
    for n in range(ys.shape[-1]):
        yn = ys[..., n]
        row_acc = np.zeros(xs.shape[:-1])
        for m in range(xs.shape[-1]):
            row_acc += wx[..., m] * src[face, yn, xs[..., m]]
        acc += wy[..., n] * row_acc
    return acc


def _finish(values, like, max_value):
    """ Round integer planes half up, clip every plane to the legal range
    """
    if np.issubdtype(like.dtype, np.integer):
        return np.clip(np.floor(values + 0.5), 0, max_value).astype(like.dtype)
    return np.clip(values, 0, max_value)


def resample_plane(plane, cmap, kernel, max_value, workers=1):
    height = cmap.qx.shape[0]
    blocks = [slice(start, min(start + ROWS_PER_BLOCK, height))
              for start in range(0, height, ROWS_PER_BLOCK)]
    src = plane.astype(float)
    if cmap.padding is not None:
        if kernel.taps > cmap.padding.pad:
            raise ContractError('Kernel {} reaches past the {} sample '
                                'tile padding'.format(kernel, cmap.padding.pad))
        src = pad_tiles(src, cmap.padding)
    elif cmap.tiles is not None:
        src = split_tiles(src, cmap.tiles)
    out = np.empty(cmap.qx.shape)

    def run(rows):
        out[rows] = _interpolate_rows(src, cmap, kernel, rows)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    else:
        for rows in blocks:
            run(rows)
    return _finish(out, plane, max_value)


def resample_frame(src, src_spec, dst_spec, kernel=None, chroma_kernel=None,
                   workers=1, seams='clamp'):
    """ Resample a frame from src_spec's format into dst_spec's

    The destination size comes from dst_spec.coded_geometry; bit depth and
    chroma format are kept from the source frame. seams is one of
    SEAM_MODES.
    """
    kernel = kernel or Kernel()
    chroma_kernel = chroma_kernel or kernel.for_chroma()
    pad = max(3, kernel.taps, chroma_kernel.taps)
    g = src.geometry
    sg = src_spec.coded_geometry
    if (g.width, g.height) != (sg.width, sg.height):
        raise ContractError(
            'Frame is {}x{} but {} expects {}x{}'.format(
                g.width, g.height, src_spec.format, sg.width, sg.height))
    dg = dst_spec.coded_geometry
    try:
        out_geometry = dg.replace(bit_depth=g.bit_depth, chroma=g.chroma)
    except ContractError as e:
        raise ContractError('Cannot resample into {}: {}'.format(
            dst_spec.format, e))
    planes = []
    for index, (plane, dst_shape) in enumerate(
            zip(src.planes, out_geometry.plane_shapes)):
        cmap = coordinate_map(
            src_spec, plane.shape, dst_spec, dst_shape, pad, seams)
        planes.append(resample_plane(
            plane, cmap, kernel if index == 0 else chroma_kernel,
            g.max_value, workers))
    return Frame.from_planes(planes, out_geometry)


# Chroma format conversion
#
# 4:2:0 chroma samples sit on even luma columns, halfway between two luma
# rows: chroma (m, n) is at luma position (2m, 2n + 0.5).

def _linear_upsample(plane, positions, axis):
    size = plane.shape[axis]
    pos = np.clip(positions, 0, size - 1)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, size - 1)
    frac = pos - i0
    a = np.take(plane, i0, axis=axis)
    b = np.take(plane, i1, axis=axis)
    shape = [1, 1]
    shape[axis] = -1
    frac = frac.reshape(shape)
    return a * (1 - frac) + b * frac


def _filter_at(plane, centers, weights, axis):
    size = plane.shape[axis]
    out = 0.0
    for offset, weight in weights:
        idx = np.clip(centers + offset, 0, size - 1)
        out = out + weight * np.take(plane, idx, axis=axis)
    return out


def chroma_420_to_444(f):
    g = f.geometry
    if g.chroma != CHROMA_420:
        raise ContractError('Expected a 4:2:0 frame, got {}'.format(g.chroma))
    out_geometry = g.replace(chroma=CHROMA_444)
    xc = np.arange(g.width) / 2.0
    yc = (np.arange(g.height) - 0.5) / 2.0
    planes = [f.y.copy()]
    for plane in (f.u, f.v):
        up = _linear_upsample(plane.astype(float), yc, 0)
        up = _linear_upsample(up, xc, 1)
        planes.append(_finish(up, plane, g.max_value))
    return Frame.from_planes(planes, out_geometry)


_HALF_BAND = ((-1, 0.25), (0, 0.5), (1, 0.25))
# (1,2,1)/4 followed by the average of rows 2n and 2n + 1
_HALF_BAND_MID = ((-1, 0.125), (0, 0.375), (1, 0.375), (2, 0.125))


def chroma_444_to_420(f):
    g = f.geometry
    if g.chroma != CHROMA_444:
        raise ContractError('Expected a 4:4:4 frame, got {}'.format(g.chroma))
    try:
        out_geometry = g.replace(chroma=CHROMA_420)
    except ContractError as e:
        raise ContractError('Cannot subsample chroma: {}'.format(e))
    cols = np.arange(g.width // 2) * 2
    rows = np.arange(g.height // 2) * 2
    planes = [f.y.copy()]
    for plane in (f.u, f.v):
        down = _filter_at(plane.astype(float), cols, _HALF_BAND, 1)
        down = _filter_at(down, rows, _HALF_BAND_MID, 0)
        planes.append(_finish(down, plane, g.max_value))
    return Frame.from_planes(planes, out_geometry)


def convert_chroma(f, chroma):
    if f.geometry.chroma == chroma:
        return f
    if chroma == CHROMA_444:
        return chroma_420_to_444(f)
    if chroma == CHROMA_420:
        return chroma_444_to_420(f)
    raise DomainError('Unknown chroma format {}'.format(chroma))


def max_abs_weight_error(kernel, phases=64):
    """ Largest deviation from 1 of the normalized weight sums

    Used as a self check of the kernel tables.
    """
    worst = 0.0
    for phase in np.linspace(0, 1, phases, endpoint=False):
        q = np.array([phase])
        _, w = _taps(q, kernel)
        worst = max(worst, abs(float(w.sum()) - 1.0))
    return worst
