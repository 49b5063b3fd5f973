import math
import unittest

import numpy as np

from omnirate import DomainError, FrameGeometry
from omnirate.projections import (
    CUBE_FACES, ECP_FACES, FORMATS, ProjectionSpec, WarpFunction,
    default_geometry, face_to_xyz, forward_map, inverse_map, packing_locate,
    packing_place, warp_eval, warp_invert, xyz_to_face)
from omnirate.sphere import Direction


def away_from_tiles(spec, n, rng, margin=1e-6):
    """ Random packed coordinates at least margin away from tile edges
    """
    cols, rows = (1, 1) if spec.is_panoramic else (3, 2)
    a = rng.uniform(margin, 1 - margin, n)
    b = rng.uniform(margin, 1 - margin, n)
    col = rng.integers(0, cols, n)
    row = rng.integers(0, rows, n)
    return (col + a) / cols, (row + b) / rows


def area_density(spec, u, v, h=1e-6):
    """ Solid angle per unit packed area, by central differences
    """
    def d(uu, vv):
        return np.stack(forward_map(spec, uu, vv), axis=-1)
    du = (d(u + h, v) - d(u - h, v)) / (2 * h)
    dv = (d(u, v + h) - d(u, v - h)) / (2 * h)
    return np.linalg.norm(np.cross(du, dv), axis=-1)


def angle_between(a, b):
    """ Angle in radians between rows of a and b, accurate for tiny angles
    """
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


class WarpTestCase(unittest.TestCase):
    def test_families(self):
        poly = WarpFunction('polynomial', (0.34, 0.66))
        for w in (WarpFunction(), WarpFunction('tangent'), poly):
            self.assertAlmostEqual(warp_eval(w, 1.0), 1.0)
            self.assertAlmostEqual(warp_eval(w, -1.0), -1.0)
            self.assertEqual(warp_eval(w, 0.0), 0.0)
            s = np.linspace(-1, 1, 201)
            c = warp_eval(w, s)
            self.assertTrue(np.all(np.diff(c) > 0))
            np.testing.assert_allclose(warp_invert(w, c), s, atol=1e-12)

    def test_polynomial_values(self):
        poly = WarpFunction('polynomial', (0.34, 0.66))
        self.assertAlmostEqual(warp_eval(poly, 0.5), 0.34 * 0.25 + 0.33)
        self.assertAlmostEqual(warp_eval(poly, -0.5), -(0.34 * 0.25 + 0.33))

    def test_tangent_values(self):
        self.assertAlmostEqual(
            warp_eval(WarpFunction('tangent'), 0.5), math.tan(math.pi / 8))

    def test_invalid(self):
        with self.assertRaises(DomainError):
            WarpFunction('polynomial', (0.5, 0.4))
        with self.assertRaises(DomainError):
            WarpFunction('polynomial', (-2.0, 3.0))
        with self.assertRaises(DomainError):
            WarpFunction('cosine')
        with self.assertRaises(DomainError):
            warp_eval(WarpFunction(), 1.5)
        with self.assertRaises(DomainError):
            warp_invert(WarpFunction('tangent'), -1.01)


class SpecTestCase(unittest.TestCase):
    def test_default_geometry(self):
        self.assertEqual(default_geometry('erp'), FrameGeometry(
            2048, 1024, 8, '444'))
        self.assertEqual(default_geometry('acp').width, 1800)
        g = default_geometry('cmp', 0.25)
        self.assertEqual((g.width, g.height), (450, 300))
        g = default_geometry('erp', 0.25)
        self.assertEqual((g.width, g.height), (512, 256))

    def test_from_name(self):
        spec = ProjectionSpec.from_name(' ACP ')
        self.assertEqual(spec.format, 'acp')
        self.assertEqual(spec.warp_coeffs, ((0.34, 0.66), (0.34, 0.66)))
        self.assertEqual(spec.label(), 'ACP')
        spec = ProjectionSpec.from_name('gcp', [(0.3, 0.7), (0.4, 0.6)])
        self.assertEqual(spec.warp_coeffs, ((0.3, 0.7), (0.4, 0.6)))

    def test_invalid(self):
        with self.assertRaises(DomainError):
            ProjectionSpec.from_name('rsp')
        with self.assertRaises(DomainError):
            ProjectionSpec.from_name('cmp', (0.34, 0.66))
        with self.assertRaises(DomainError):
            ProjectionSpec.from_name('acp', (0.5, 0.4))
        with self.assertRaises(DomainError):
            ProjectionSpec.from_name('cmp', geometry=FrameGeometry(100, 100))

    def test_faces(self):
        self.assertEqual(ProjectionSpec.from_name('erp').faces, ('F0',))
        self.assertEqual(ProjectionSpec.from_name('eac').faces, CUBE_FACES)
        self.assertEqual(ProjectionSpec.from_name('ecp').faces, ECP_FACES)

    def test_hec_warps(self):
        spec = ProjectionSpec.from_name('hec')
        for face in ('PX', 'PY', 'NY'):
            ws, wt = spec.face_warps(face)
            self.assertEqual(ws.family, 'tangent')
            self.assertEqual(wt.family, 'polynomial')
        ws, wt = spec.face_warps('NX')
        self.assertEqual((ws.family, wt.family), ('polynomial', 'tangent'))
        ws, wt = spec.face_warps('PZ')
        self.assertEqual((ws.family, wt.family), ('tangent', 'tangent'))


class PackingTestCase(unittest.TestCase):
    def test_place(self):
        self.assertEqual(packing_place('cmp', 'PX', 0.0, 0.0), (0.5, 0.25))
        self.assertEqual(packing_place('cmp', 'NY', -1.0, 1.0), (0.0, 0.0))
        u, v = packing_place('ecp', 'BOTTOM', 0.0, 0.0)
        self.assertAlmostEqual(float(u), 2.5 / 3)
        self.assertAlmostEqual(float(v), 0.75)
        with self.assertRaises(DomainError):
            packing_place('cmp', 'E0', 0.0, 0.0)

    def test_locate(self):
        face, s, t = packing_locate('cmp', 0.5, 0.25)
        self.assertEqual(CUBE_FACES[int(face)], 'PX')
        self.assertEqual((float(s), float(t)), (0.0, 0.0))
        face, s, t = packing_locate('erp', 0.25, 0.75)
        self.assertEqual((int(face), float(s), float(t)), (0, -0.5, -0.5))

    def test_place_locate(self):
        rng = np.random.default_rng(3)
        for fmt in ('cmp', 'ecp'):
            face = rng.integers(0, 6, 500)
            s = rng.uniform(-0.999, 0.999, 500)
            t = rng.uniform(-0.999, 0.999, 500)
            u, v = packing_place(fmt, face, s, t)
            face2, s2, t2 = packing_locate(fmt, u, v)
            np.testing.assert_array_equal(face2, face)
            np.testing.assert_allclose(s2, s, atol=1e-12)
            np.testing.assert_allclose(t2, t, atol=1e-12)


class MappingTestCase(unittest.TestCase):
    def test_round_trip_uv(self):
        rng = np.random.default_rng(11)
        for fmt in FORMATS:
            spec = ProjectionSpec.from_name(fmt)
            u, v = away_from_tiles(spec, 100000, rng)
            x, y, z = forward_map(spec, u, v)
            np.testing.assert_allclose(x * x + y * y + z * z, 1.0, atol=1e-12)
            _, _, _, u2, v2 = inverse_map(spec, x, y, z)
            if spec.is_panoramic:
                # keep away from the poles where longitude is undefined
                keep = np.abs(v - 0.5) < 0.4999
                u, v, u2, v2 = u[keep], v[keep], u2[keep], v2[keep]
            np.testing.assert_allclose(u2, u, atol=1e-9, err_msg=fmt)
            np.testing.assert_allclose(v2, v, atol=1e-9, err_msg=fmt)

    def test_round_trip_directions(self):
        rng = np.random.default_rng(5)
        vec = rng.normal(size=(100000, 3))
        vec /= np.linalg.norm(vec, axis=1)[:, None]
        x, y, z = vec.T
        for fmt in FORMATS:
            spec = ProjectionSpec.from_name(fmt)
            face, s, t, u, v = inverse_map(spec, x, y, z)
            self.assertTrue(np.all((u >= 0) & (u <= 1)), fmt)
            self.assertTrue(np.all((v >= 0) & (v <= 1)), fmt)
            back = np.stack(face_to_xyz(spec, face, s, t), axis=-1)
            self.assertLess(np.max(angle_between(vec, back)), 1e-9, fmt)

    def test_scalar_api(self):
        spec = ProjectionSpec.from_name('erp')
        coord, (u, v) = spec.inverse(Direction(1.0, 0.0, 0.0))
        self.assertEqual(coord.face, 'F0')
        self.assertEqual((coord.s, coord.t), (0.0, 0.0))
        self.assertEqual((u, v), (0.5, 0.5))
        d = spec.forward(0.5, 0.5)
        self.assertAlmostEqual(d.x, 1.0)
        d = ProjectionSpec.from_name('cmp').forward(0.5, 0.25)
        self.assertAlmostEqual(d.x, 1.0)

    def test_outside_unit_square(self):
        spec = ProjectionSpec.from_name('cmp')
        with self.assertRaises(DomainError):
            forward_map(spec, 1.0, 0.5)
        with self.assertRaises(DomainError):
            forward_map(spec, 0.5, -0.1)
        with self.assertRaises(DomainError):
            inverse_map(spec, 0.5, 0.5, 0.5)

    def test_equal_area(self):
        rng = np.random.default_rng(2)
        for fmt in ('aep', 'ecp'):
            spec = ProjectionSpec.from_name(fmt)
            u, v = away_from_tiles(spec, 1000, rng, margin=0.01)
            np.testing.assert_allclose(
                area_density(spec, u, v), 4 * math.pi, rtol=1e-6,
                err_msg=fmt)

    def test_erp_density_follows_latitude(self):
        spec = ProjectionSpec.from_name('erp')
        u = np.full(9, 0.3)
        v = np.linspace(0.05, 0.95, 9)
        lat = (0.5 - v) * math.pi
        np.testing.assert_allclose(
            area_density(spec, u, v), 2 * math.pi ** 2 * np.cos(lat),
            rtol=1e-5)

    def test_eac_is_equiangular(self):
        spec = ProjectionSpec.from_name('eac')
        s = np.linspace(-0.99, 0.99, 23)
        u, v = packing_place('eac', 'PX', s, np.zeros_like(s))
        x, y, z = forward_map(spec, u, v)
        np.testing.assert_allclose(np.arctan2(y, x), s * math.pi / 4,
                                   atol=1e-12)
        np.testing.assert_allclose(z, 0.0, atol=1e-12)

    def test_cube_tie_goes_to_first_face(self):
        spec = ProjectionSpec.from_name('cmp')
        n = 1 / math.sqrt(3)
        face, s, t = xyz_to_face(spec, np.array([n]), np.array([n]),
                                 np.array([n]))
        self.assertEqual(CUBE_FACES[int(face[0])], 'PX')
        self.assertAlmostEqual(float(s[0]), 1.0)
        self.assertAlmostEqual(float(t[0]), 1.0)

    def test_ecp_longitude_zero(self):
        spec = ProjectionSpec.from_name('ecp')
        coord, _ = spec.inverse(Direction(1.0, 0.0, 0.0))
        self.assertEqual(coord.face, 'E1')
        self.assertEqual(coord.s, 1.0)
        self.assertEqual(coord.t, 0.0)

    def test_ecp_caps(self):
        spec = ProjectionSpec.from_name('ecp')
        coord, (u, v) = spec.inverse(Direction(0.0, 0.0, 1.0))
        self.assertEqual(coord.face, 'TOP')
        self.assertEqual((coord.s, coord.t), (0.0, 0.0))
        self.assertAlmostEqual(u, 1.5 / 3)
        coord, _ = spec.inverse(Direction(0.0, 0.0, -1.0))
        self.assertEqual(coord.face, 'BOTTOM')

    def test_centers_of_faces(self):
        spec = ProjectionSpec.from_name('acp')
        axes = {'PX': (1, 0, 0), 'NX': (-1, 0, 0), 'PY': (0, 1, 0),
                'NY': (0, -1, 0), 'PZ': (0, 0, 1), 'NZ': (0, 0, -1)}
        for face, axis in axes.items():
            u, v = packing_place('acp', face, 0.0, 0.0)
            np.testing.assert_allclose(forward_map(spec, u, v), axis,
                                       atol=1e-12, err_msg=face)
