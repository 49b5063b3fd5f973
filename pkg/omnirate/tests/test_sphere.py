import math
import unittest

import numpy as np

from omnirate import DomainError, FrameGeometry
from omnirate.sphere import (
    Direction, LonLat, direction_to_lonlat, lonlat_to_direction,
    lonlat_to_xyz, pixel_grid, pixel_to_unit, wrap_longitude, xyz_to_lonlat)


class DirectionTestCase(unittest.TestCase):
    def test_renormalizes_within_tolerance(self):
        d = Direction(1.0 + 1e-10, 0.0, 0.0)
        self.assertEqual(d.x, 1.0)

    def test_rejects_non_unit(self):
        with self.assertRaises(DomainError):
            Direction(1.0, 1.0, 0.0)
        with self.assertRaises(DomainError):
            Direction.from_vector(0.0, 0.0, 0.0)

    def test_angle(self):
        a = Direction(1.0, 0.0, 0.0)
        b = Direction(0.0, 0.0, 1.0)
        self.assertAlmostEqual(a.angle_to(b), math.pi / 2)
        self.assertEqual(a.angle_to(a), 0.0)


class LonLatTestCase(unittest.TestCase):
    def test_axes(self):
        x, y, z = lonlat_to_xyz(0.0, 0.0)
        self.assertEqual((float(x), float(y), float(z)), (1.0, 0.0, 0.0))
        x, y, z = lonlat_to_xyz(math.pi / 2, 0.0)
        self.assertAlmostEqual(float(y), 1.0)
        d = lonlat_to_direction(LonLat(0.0, math.pi / 2))
        self.assertAlmostEqual(d.z, 1.0)

    def test_wrap(self):
        self.assertEqual(wrap_longitude(math.pi), -math.pi)
        self.assertAlmostEqual(wrap_longitude(3 * math.pi / 2), -math.pi / 2)
        self.assertEqual(LonLat(math.pi, 0.0).lon, -math.pi)

    def test_latitude_range(self):
        with self.assertRaises(DomainError):
            LonLat(0.0, 2.0)
        with self.assertRaises(DomainError):
            lonlat_to_xyz(0.0, -1.6)

    def test_pole_longitude_is_zero(self):
        p = direction_to_lonlat(Direction(0.0, 0.0, -1.0))
        self.assertEqual(p.lon, 0.0)
        self.assertAlmostEqual(p.lat, -math.pi / 2)

    def test_negative_x_axis(self):
        lon, lat = xyz_to_lonlat(-1.0, 0.0, 0.0)
        self.assertEqual(float(lon), -math.pi)

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        lon = rng.uniform(-math.pi, math.pi, 1000)
        lat = rng.uniform(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 1000)
        lon2, lat2 = xyz_to_lonlat(*lonlat_to_xyz(lon, lat))
        np.testing.assert_allclose(lon2, lon, atol=1e-12)
        np.testing.assert_allclose(lat2, lat, atol=1e-12)

    def test_rejects_non_unit_xyz(self):
        with self.assertRaises(DomainError):
            xyz_to_lonlat(0.5, 0.0, 0.0)
        with self.assertRaises(DomainError):
            direction_to_lonlat((0.0, 0.5, 0.5))


class PixelTestCase(unittest.TestCase):
    def test_centers(self):
        g = FrameGeometry(4, 2)
        self.assertEqual(pixel_to_unit(0, 0, g), (0.125, 0.25))
        self.assertEqual(pixel_to_unit(3, 1, g), (0.875, 0.75))
        with self.assertRaises(DomainError):
            pixel_to_unit(4, 0, g)

    def test_grid(self):
        u, v = pixel_grid(4, 2)
        self.assertEqual(u.shape, (2, 4))
        self.assertEqual(u[1, 3], 0.875)
        self.assertEqual(v[1, 3], 0.75)
