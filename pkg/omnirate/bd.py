""" Bjontegaard-Delta rate and quality between two RD curves

Log-rates are base 10. The two fits integrate in closed form: least-squares
polynomials through np.polyint, monotone piecewise cubic Hermite through
scipy's PchipInterpolator.integrate.
"""

import csv
import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import (
    ContractError, DataError, DisjointCurvesError, InsufficientDataError,
    SequenceIOError)

log = logging.getLogger(__name__)

FITS = ('pchip', 'cubic')
FLAG_IOU = 1.0 / 3.0
MIN_BD_POINTS = 3


@dataclass(frozen=True)
class RdCurve:
    """ Rate (bits per pixel) / quality (dB) points sorted by rate
    """
    rates: tuple
    qualities: tuple

    def __post_init__(self):
        if len(self.rates) != len(self.qualities):
            raise ContractError('Rates and qualities differ in length')
        if not self.rates:
            raise ContractError('An RD curve needs at least one point')
        rates = np.asarray(self.rates, dtype=float)
        qualities = np.asarray(self.qualities, dtype=float)
        if not (np.all(np.isfinite(rates)) and np.all(np.isfinite(qualities))):
            raise DataError('RD points must be finite')
        if np.any(rates <= 0):
            raise DataError('RD rates must be positive')
        if np.any(np.diff(rates) <= 0):
            raise DataError('RD rates must be strictly increasing')
        if np.any(np.diff(qualities) <= 0):
            raise DataError(
                'RD curve is not monotone: quality {} for rates {}'.format(
                    list(self.qualities), list(self.rates)))

    @classmethod
    def from_points(cls, points):
        """ Build from (rate, quality) pairs in any order
        """
        ordered = sorted((float(r), float(q)) for r, q in points)
        if not ordered:
            raise ContractError('An RD curve needs at least one point')
        rates, qualities = zip(*ordered)
        return cls(rates, qualities)

    def __len__(self):
        return len(self.rates)

    @property
    def points(self):
        return list(zip(self.rates, self.qualities))

    @property
    def log_rates(self):
        return np.log10(np.asarray(self.rates))

    @property
    def quality_span(self):
        return self.qualities[0], self.qualities[-1]

    def scaled(self, rate_factor=1.0, quality_offset=0.0):
        return RdCurve(tuple(r * rate_factor for r in self.rates),
                       tuple(q + quality_offset for q in self.qualities))


@dataclass(frozen=True)
class BdResult:
    bd_rate: float
    bd_quality: float
    iou: float

    @property
    def flagged(self):
        return self.iou < FLAG_IOU


def _check_fit(fit):
    if fit not in FITS:
        raise ContractError('Unknown BD fit "{}"'.format(fit))


def _check_length(*curves):
    for curve in curves:
        if len(curve) < MIN_BD_POINTS:
            raise InsufficientDataError(
                'BD needs at least {} points, got {}'.format(
                    MIN_BD_POINTS, len(curve)))


def fit_integral(x, y, lo, hi, fit='pchip'):
    """ Integral over [lo, hi] of the fit of y as a function of x
    """
    _check_fit(fit)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if fit == 'pchip':
        return float(PchipInterpolator(x, y).integrate(lo, hi))
    # centred abscissa keeps the Vandermonde system well conditioned
    center = float(np.mean(x))
    poly = np.polyfit(x - center, y, min(3, len(x) - 1))
    antiderivative = np.polyint(poly)
    return float(np.polyval(antiderivative, hi - center)
                 - np.polyval(antiderivative, lo - center))


def _overlap(a, b):
    lo = max(a[0], b[0])
    hi = min(a[-1], b[-1])
    if hi <= lo:
        raise DisjointCurvesError(
            'Curves do not overlap: [{}, {}] vs [{}, {}]'.format(
                a[0], a[-1], b[0], b[-1]))
    return lo, hi


def _mean_difference(anchor_x, anchor_y, test_x, test_y, fit):
    lo, hi = _overlap(anchor_x, test_x)
    anchor = fit_integral(anchor_x, anchor_y, lo, hi, fit)
    test = fit_integral(test_x, test_y, lo, hi, fit)
    return (test - anchor) / (hi - lo)


def bd_rate(anchor, test, fit='pchip'):
    """ Average rate difference of test against anchor in percent

    Negative values are rate savings of test.
    """
    _check_fit(fit)
    _check_length(anchor, test)
    diff = _mean_difference(
        np.asarray(anchor.qualities), anchor.log_rates,
        np.asarray(test.qualities), test.log_rates, fit)
    return (10 ** diff - 1) * 100


def bd_quality(anchor, test, fit='pchip'):
    """ Average quality difference in dB, positive when test is better
    """
    _check_fit(fit)
    _check_length(anchor, test)
    return _mean_difference(
        anchor.log_rates, np.asarray(anchor.qualities),
        test.log_rates, np.asarray(test.qualities), fit)


def quality_iou(a, b):
    a_lo, a_hi = a.quality_span
    b_lo, b_hi = b.quality_span
    union = max(a_hi, b_hi) - min(a_lo, b_lo)
    if union == 0:
        return 1.0
    return max(0.0, min(a_hi, b_hi) - max(a_lo, b_lo)) / union


def compare_curves(anchor, test, fit='pchip'):
    result = BdResult(bd_rate(anchor, test, fit),
                      bd_quality(anchor, test, fit), quality_iou(anchor, test))
    if result.flagged:
        log.debug('Quality ranges overlap by {:.1%} only'.format(result.iou))
    return result


def read_curves_csv(path):
    """ Curves keyed by label from a label,rate_bpp,quality_db file

    Labels keep their order of first appearance.
    """
    points = OrderedDict()
    try:
        with open(path, newline='') as f:
            reader = csv.DictReader(f)
            missing = {'label', 'rate_bpp', 'quality_db'} - set(
                reader.fieldnames or ())
            if missing:
                raise DataError('{} lacks columns {}'.format(
                    path, ', '.join(sorted(missing))))
            for line, row in enumerate(reader, start=2):
                try:
                    point = (float(row['rate_bpp']), float(row['quality_db']))
                except (TypeError, ValueError):
                    raise DataError('{}:{}: invalid number'.format(path, line))
                points.setdefault(row['label'], []).append(point)
    except OSError as e:
        raise SequenceIOError('Cannot read {}: {}'.format(path, e))
    return OrderedDict(
        (label, RdCurve.from_points(pts)) for label, pts in points.items())
