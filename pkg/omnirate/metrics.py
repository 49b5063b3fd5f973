""" PSNR and WS-PSNR on ERP frames

Identical planes have infinite PSNR; tables and BD fits see it through
capped() as LOSSLESS_DB.
"""

import logging
import math
from dataclasses import dataclass, fields

import numpy as np

from . import ContractError

log = logging.getLogger(__name__)

LOSSLESS_DB = 999.99

# (w_y, w_u, w_v) of the combined YUV metric
YUV_WEIGHTS = (6, 1, 1)

POOLING_MODES = ('mean-db', 'mse')


def capped(db):
    return min(db, LOSSLESS_DB)


def _check_planes(ref, test):
    if ref.shape != test.shape:
        raise ContractError('Plane shapes differ: {} vs {}'.format(
            ref.shape, test.shape))


def _to_db(max_val, mse):
    if mse == 0:
        return math.inf
    return 10 * math.log10(max_val * max_val / mse)


def psnr_plane(ref, test, max_val):
    _check_planes(ref, test)
    err = ref.astype(float) - test.astype(float)
    return _to_db(max_val, float(np.mean(err * err)))


def ws_weight_erp(j, height):
    """ Sphere area weight of ERP row j, scalars or arrays
    """
    w = np.cos((np.asarray(j, dtype=float) + 0.5 - height / 2) * math.pi / height)
    return float(w) if w.ndim == 0 else w


def ws_weights(height):
    return ws_weight_erp(np.arange(height), height)


def ws_psnr_plane(ref, test, max_val, weights=None):
    """ :param weights: per-row weights, defaults to the ERP table
    """
    _check_planes(ref, test)
    if weights is None:
        weights = ws_weights(ref.shape[0])
    weights = np.asarray(weights, dtype=float)
    err = ref.astype(float) - test.astype(float)
    row_sse = np.sum(err * err, axis=1)
    wmse = float(np.sum(weights * row_sse) / (np.sum(weights) * ref.shape[1]))
    return _to_db(max_val, wmse)


def combine_yuv(py, pu, pv):
    wy, wu, wv = YUV_WEIGHTS
    return (wy * py + wu * pu + wv * pv) / (wy + wu + wv)


def combined(py, pu, pv):
    """ combine_yuv of capped planes, infinite only when all three are
    """
    if all(math.isinf(p) for p in (py, pu, pv)):
        return math.inf
    return combine_yuv(capped(py), capped(pu), capped(pv))


@dataclass(frozen=True)
class QualityResult:
    psnr_y: float
    psnr_u: float
    psnr_v: float
    wspsnr_y: float
    wspsnr_u: float
    wspsnr_v: float

    @property
    def yuv_psnr(self):
        return combined(self.psnr_y, self.psnr_u, self.psnr_v)

    @property
    def yuv_wspsnr(self):
        return combined(self.wspsnr_y, self.wspsnr_u, self.wspsnr_v)

    @property
    def is_lossless(self):
        return all(math.isinf(getattr(self, f.name)) for f in fields(self))

    def as_dict(self):
        """ Every metric, capped, including the combined ones
        """
        out = {f.name: capped(getattr(self, f.name)) for f in fields(self)}
        out['yuv_psnr'] = capped(self.yuv_psnr)
        out['yuv_wspsnr'] = capped(self.yuv_wspsnr)
        return out

    @classmethod
    def from_dict(cls, data):
        # capped values are read back as lossless
        return cls(**{
            f.name: math.inf if data[f.name] >= LOSSLESS_DB else data[f.name]
            for f in fields(cls)})


def frame_quality(ref, test):
    """ QualityResult of a decoded frame against its ERP reference
    """
    if ref.geometry != test.geometry:
        raise ContractError('Geometries differ: {} vs {}'.format(
            ref.geometry, test.geometry))
    top = ref.geometry.max_value
    psnr = [psnr_plane(a, b, top) for a, b in zip(ref.planes, test.planes)]
    ws = [ws_psnr_plane(a, b, top) for a, b in zip(ref.planes, test.planes)]
    return QualityResult(*psnr, *ws)


def _pool(values, pooling):
    if pooling == 'mean-db':
        if all(math.isinf(v) for v in values):
            return math.inf
        return float(np.mean([capped(v) for v in values]))
    # pooled MSE relative to max_val^2
    mse = np.mean([10 ** (-v / 10) for v in values])
    return math.inf if mse == 0 else -10 * math.log10(mse)


def aggregate_sequence(per_frame, pooling='mean-db'):
    if not per_frame:
        raise ContractError('Cannot aggregate an empty list of frames')
    if pooling not in POOLING_MODES:
        raise ContractError('Unknown pooling "{}"'.format(pooling))
    log.debug('Pooling {} frames ({})'.format(len(per_frame), pooling))
    return QualityResult(**{
        f.name: _pool([getattr(r, f.name) for r in per_frame], pooling)
        for f in fields(QualityResult)})
