""" Coordinate conventions shared by every projection

Axes: +x at (lon 0, lat 0), +y at (lon 90deg, lat 0), +z at the north pole.
Pixel centers sit at half-integer offsets.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import DomainError

UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Direction:
    """ Unit vector on the image sphere

    Inputs within UNIT_TOLERANCE of unit norm are renormalized, anything
    further away is rejected.
    """
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise DomainError(
                'Direction ({}, {}, {}) is not unit norm'.format(
                    self.x, self.y, self.z))
        object.__setattr__(self, 'x', self.x / norm)
        object.__setattr__(self, 'y', self.y / norm)
        object.__setattr__(self, 'z', self.z / norm)

    @classmethod
    def from_vector(cls, x, y, z):
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise DomainError('Cannot normalize the zero vector')
        return cls(x / norm, y / norm, z / norm)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def angle_to(self, other):
        # atan2 form stays accurate for tiny angles
        a, b = self.as_array(), other.as_array()
        return math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b)))


@dataclass(frozen=True)
class LonLat:
    lon: float
    lat: float

    def __post_init__(self):
        if not -math.pi / 2 <= self.lat <= math.pi / 2:
            raise DomainError('Latitude {} outside [-pi/2, pi/2]'.format(
                self.lat))
        object.__setattr__(self, 'lon', wrap_longitude(self.lon))


def wrap_longitude(lon):
    """ Wrap into [-pi, pi), scalars or arrays
    """
    wrapped = np.mod(np.asarray(lon, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def lonlat_to_xyz(lon, lat):
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if np.any(np.abs(lat) > math.pi / 2):
        raise DomainError('Latitude outside [-pi/2, pi/2]')
    cos_lat = np.cos(lat)
    return cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)


def check_unit(x, y, z, tolerance=UNIT_TOLERANCE):
    norm = np.sqrt(np.asarray(x) ** 2 + np.asarray(y) ** 2 + np.asarray(z) ** 2)
    if np.any(np.abs(norm - 1.0) > tolerance):
        raise DomainError('Direction is not unit norm')


def xyz_to_lonlat(x, y, z):
    """ Inverse of lonlat_to_xyz; longitude is 0 at the poles
    """
    check_unit(x, y, z)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    rho = np.hypot(x, y)
    lon = np.where(rho == 0.0, 0.0, np.arctan2(y, x))
    # atan2 returns +pi on the negative x axis
    lon = np.where(lon >= math.pi, lon - 2 * math.pi, lon)
    lat = np.arctan2(z, rho)
    return lon, lat


def lonlat_to_direction(p):
    x, y, z = lonlat_to_xyz(p.lon, p.lat)
    return Direction(float(x), float(y), float(z))


def direction_to_lonlat(d):
    if not isinstance(d, Direction):
        x, y, z = d
        check_unit(x, y, z)
        d = Direction(x, y, z)
    lon, lat = xyz_to_lonlat(d.x, d.y, d.z)
    return LonLat(float(lon), float(lat))


def pixel_to_unit(i, j, geometry):
    """ Pixel-center unit coordinates of column i, row j

    Accepts scalars or integer arrays.
    """
    i = np.asarray(i)
    j = np.asarray(j)
    if (np.any(i < 0) or np.any(i >= geometry.width)
            or np.any(j < 0) or np.any(j >= geometry.height)):
        raise DomainError('Pixel index outside {}x{}'.format(
            geometry.width, geometry.height))
    u = (i + 0.5) / geometry.width
    v = (j + 0.5) / geometry.height
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def pixel_grid(width, height):
    """ (u, v) arrays of every pixel center, shaped (height, width)
    """
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    return np.meshgrid(u, v)
