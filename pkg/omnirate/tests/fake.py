import os
import shlex
import signal
import sys

import numpy as np

from omnirate import Frame, FrameGeometry
from omnirate.sphere import lonlat_to_xyz, pixel_grid
from omnirate.yuv import write_frames

# RD points read off the published comparison plot (rate in bpp, YUV-WS-PSNR)
VTM_ERP = [
    (0.00130181, 33.92499), (0.00314527, 35.49930),
    (0.00779102, 36.78850), (0.01985637, 37.74842)]
VTM_ACP = [
    (0.00142289, 34.52112), (0.00338177, 36.32787),
    (0.00831570, 37.93426), (0.02173493, 39.23514)]
DCVC_ERP_SPAN = (35.90836, 37.17443)
DCVC_ACP_SPAN = (36.77978, 38.44328)


def harmonic(x, y, z):
    """ Smooth pattern on the sphere, polynomial of degree 4 in x, y, z

    Values stay within [-1.2, 1.2].
    """
    return (0.5 * x + 0.3 * y * z + 0.25 * (3 * z * z - 1) / 2
            + 0.2 * x * y * (x * x - y * y))


def _plane(width, height, func):
    u, v = pixel_grid(width, height)
    x, y, z = lonlat_to_xyz((u - 0.5) * 2 * np.pi, (0.5 - v) * np.pi)
    return func(x, y, z)


def harmonic_erp(width, height, bit_depth=8, chroma='420', integer=False,
                 frame_index=0):
    """ ERP frame of the harmonic pattern, optionally quantized

    frame_index rotates the pattern a little so that clips move.
    """
    g = FrameGeometry(width, height, bit_depth, chroma)
    scale = 1 << (bit_depth - 8)
    shift = 0.05 * frame_index

    def luma(x, y, z):
        return (128 + 60 * harmonic(x * np.cos(shift) - y * np.sin(shift),
                                    x * np.sin(shift) + y * np.cos(shift),
                                    z)) * scale

    def cb(x, y, z):
        return (128 + 20 * x + 10 * z * z) * scale

    def cr(x, y, z):
        return (128 - 15 * y + 10 * x * z) * scale

    ch, cw = g.chroma_shape
    planes = [_plane(width, height, luma), _plane(cw, ch, cb),
              _plane(cw, ch, cr)]
    if integer:
        planes = [np.floor(p + 0.5).astype(g.dtype) for p in planes]
    return Frame.from_planes(planes, g)


RIPPLE_AXES = ((0.0, 0.0, 1.0), (0.8, 0.6, 0.0), (0.36, -0.48, 0.8))


def ripple_erp(width, height, cycles=160):
    """ Float 4:2:0 ERP frame of plane waves crossing the sphere

    Luma only varies; chroma stays flat.
    """
    g = FrameGeometry(width, height, 8, '420')

    def luma(x, y, z):
        return 128 + 50 * sum(
            np.cos(cycles * (x * ax + y * ay + z * az))
            for ax, ay, az in RIPPLE_AXES) / len(RIPPLE_AXES)

    ch, cw = g.chroma_shape
    return Frame.from_planes(
        [_plane(width, height, luma), np.full((ch, cw), 128.0),
         np.full((ch, cw), 128.0)], g)


def random_frame(geometry, rng):
    return Frame.from_planes(
        [rng.integers(0, geometry.max_value + 1, size=shape).astype(
            geometry.dtype) for shape in geometry.plane_shapes],
        geometry)


def write_harmonic_clip(path, width, height, frames, bit_depth=8,
                        chroma='420'):
    clip = [harmonic_erp(width, height, bit_depth, chroma, integer=True,
                         frame_index=i) for i in range(frames)]
    return write_frames(clip, path)


def _python(code):
    return '{} -c {}'.format(shlex.quote(sys.executable), shlex.quote(code))


# Scripted codecs for the external adapter
IDENTITY_ENCODE = _python(
    'import shutil, sys; shutil.copy(sys.argv[1], sys.argv[2])') + \
    ' {input} {bitstream}'
IDENTITY_DECODE = _python(
    'import shutil, sys; shutil.copy(sys.argv[1], sys.argv[2])') + \
    ' {bitstream} {recon}'
KILLED_ENCODE = _python(
    'import os, signal; os.kill(os.getpid(), {})'.format(
        int(signal.SIGKILL))) + ' {input} {bitstream}'
FAILING_ENCODE = _python(
    'import sys; print("no licence"); sys.exit(3)') + ' {input} {bitstream}'
NO_RECON_DECODE = _python('pass') + ' {bitstream} {recon}'
# right size, every byte 0xff: out of range for 10-bit samples
SATURATED_DECODE = _python(
    'import os, sys; open(sys.argv[2], "wb").write('
    'bytes([255]) * os.path.getsize(sys.argv[1]))') + ' {bitstream} {recon}'


def config_dict(sequence_path, output_dir, **overrides):
    data = {
        'version': 1,
        'output_dir': output_dir,
        'frames': 2,
        'kernel': 'lanczos',
        'coded_scale': 0.0625,
        'sequences': [{
            'name': 'harmonic', 'path': sequence_path,
            'width': 128, 'height': 64, 'frame_rate': 30}],
        'formats': ['erp', 'acp', 'ecp'],
        'codecs': [{'name': 'mock', 'kind': 'mock-quantizer',
                    'quality_points': [0, 1, 2, 3]}],
    }
    data.update(overrides)
    return data


def tree_bytes(root):
    """ {relative path: content} of every file below root
    """
    out = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            path = os.path.join(dirpath, name)
            with open(path, 'rb') as f:
                out[os.path.relpath(path, root)] = f.read()
    return out
