import itertools
import unittest

import numpy as np

from omnirate import ContractError, Frame, FrameGeometry
from omnirate.metrics import frame_quality
from omnirate.projections import FORMATS, ProjectionSpec, default_geometry
from omnirate.resampler import (
    SEAM_MODES, Kernel, chroma_420_to_444, chroma_444_to_420, convert_chroma,
    kernel_weight, max_abs_weight_error, resample_frame)

from .fake import harmonic_erp, random_frame, ripple_erp


def small_spec(fmt, chroma='420', bit_depth=8):
    if fmt in ('erp', 'aep'):
        g = FrameGeometry(96, 48, bit_depth, chroma)
    else:
        g = default_geometry(fmt, 0.05, bit_depth, chroma)
    return ProjectionSpec.from_name(fmt, geometry=g)


def round_trip(frame, fmt, kernel, seams='clamp'):
    erp = ProjectionSpec.from_name('erp', geometry=frame.geometry)
    other = ProjectionSpec.from_name(fmt)
    coded = resample_frame(frame, erp, other, kernel, workers=4, seams=seams)
    return resample_frame(coded, other, erp, kernel, workers=4, seams=seams)


class KernelTestCase(unittest.TestCase):
    def test_weights(self):
        lanczos = Kernel('lanczos', 3)
        self.assertEqual(kernel_weight(lanczos, 0.0), 1.0)
        self.assertAlmostEqual(kernel_weight(lanczos, 1.0), 0.0)
        self.assertEqual(kernel_weight(lanczos, 3.0), 0.0)
        self.assertEqual(kernel_weight(Kernel('bilinear'), 0.25), 0.75)
        self.assertEqual(kernel_weight(Kernel('bilinear'), -1.5), 0.0)
        self.assertEqual(kernel_weight(Kernel('nearest'), 0.49), 1.0)
        self.assertEqual(kernel_weight(Kernel('nearest'), 0.5), 0.0)

    def test_from_name(self):
        self.assertEqual(Kernel.from_name('lanczos'), Kernel('lanczos', 3))
        self.assertEqual(Kernel.from_name('Lanczos-2'), Kernel('lanczos', 2))
        self.assertEqual(Kernel.from_name('lanczos4').taps, 4)
        self.assertEqual(Kernel.from_name('bilinear').taps, 1)
        self.assertEqual(str(Kernel()), 'lanczos-3')
        with self.assertRaises(ContractError):
            Kernel.from_name('bicubic')

    def test_chroma_kernel(self):
        self.assertEqual(Kernel().for_chroma(), Kernel('lanczos', 2))
        self.assertEqual(Kernel('bilinear').for_chroma(), Kernel('bilinear'))

    def test_weights_sum_to_one(self):
        for kernel in (Kernel('nearest'), Kernel('bilinear'),
                       Kernel('lanczos', 2), Kernel('lanczos', 3)):
            self.assertLess(max_abs_weight_error(kernel), 1e-12)


class ResampleTestCase(unittest.TestCase):
    def test_constant_frames_stay_constant(self):
        for src_fmt, dst_fmt, seams in itertools.product(
                FORMATS, FORMATS, SEAM_MODES):
            src_spec = small_spec(src_fmt)
            dst_spec = small_spec(dst_fmt)
            src = Frame.constant(src_spec.coded_geometry, 100, 60, 200)
            out = resample_frame(src, src_spec, dst_spec, seams=seams)
            self.assertEqual(out.geometry, dst_spec.coded_geometry)
            for plane, value in zip(out.planes, (100, 60, 200)):
                self.assertTrue(np.all(plane == value),
                                '{} -> {} ({})'.format(src_fmt, dst_fmt, seams))

    def test_nearest_identity(self):
        rng = np.random.default_rng(1)
        for fmt in FORMATS:
            spec = small_spec(fmt, '444', 10)
            src = random_frame(spec.coded_geometry, rng)
            for seams in SEAM_MODES:
                out = resample_frame(src, spec, spec, Kernel('nearest'),
                                     seams=seams)
                self.assertTrue(out.same_content(src), (fmt, seams))

    def test_lanczos_erp_identity(self):
        spec = small_spec('erp')
        src = harmonic_erp(96, 48, integer=True)
        for seams in SEAM_MODES:
            out = resample_frame(src, spec, spec, Kernel('lanczos', 3),
                                 seams=seams)
            self.assertTrue(out.same_content(src), seams)

    def test_integer_output_is_clipped(self):
        spec = small_spec('erp', '444')
        g = spec.coded_geometry
        y = np.zeros((g.height, g.width), dtype=np.uint8)
        y[:, ::2] = 255
        src = Frame.from_planes([y, y.copy(), y.copy()], g)
        out = resample_frame(src, spec, small_spec('eac', '444'))
        self.assertEqual(out.y.dtype, np.uint8)
        self.assertTrue(out.is_integer)

    def test_workers_do_not_change_output(self):
        src = harmonic_erp(96, 48, integer=True)
        erp = small_spec('erp')
        acp = small_spec('acp')
        one = resample_frame(src, erp, acp, workers=1)
        four = resample_frame(src, erp, acp, workers=4)
        self.assertTrue(one.same_content(four))

    def test_size_mismatch(self):
        src = harmonic_erp(96, 48)
        with self.assertRaises(ContractError):
            resample_frame(src, ProjectionSpec.from_name('erp'),
                           small_spec('cmp'))

    def test_round_trip_quality(self):
        src = harmonic_erp(2048, 1024)
        back = round_trip(src, 'acp', Kernel('lanczos', 3))
        self.assertEqual(back.geometry, src.geometry)
        self.assertGreaterEqual(frame_quality(src, back).yuv_wspsnr, 45.0)

    def test_lanczos_beats_bilinear(self):
        src = ripple_erp(2048, 1024)
        for seams in SEAM_MODES:
            lanczos = frame_quality(
                src, round_trip(src, 'acp', Kernel('lanczos', 3), seams))
            bilinear = frame_quality(
                src, round_trip(src, 'acp', Kernel('bilinear'), seams))
            self.assertGreater(lanczos.wspsnr_y, bilinear.wspsnr_y, seams)

    def test_seam_modes(self):
        src = harmonic_erp(192, 96)
        erp = ProjectionSpec.from_name('erp', geometry=src.geometry)
        cmp = small_spec('cmp')
        coded = resample_frame(src, erp, cmp)
        self.assertTrue(coded.same_content(
            resample_frame(src, erp, cmp, seams='clamp')))
        # reading back from the cube, only the tile edges depend on the mode
        clamp = resample_frame(coded, cmp, erp, seams='clamp')
        sphere = resample_frame(coded, cmp, erp, seams='sphere')
        self.assertFalse(clamp.same_content(sphere))
        self.assertLess(np.mean(np.abs(clamp.y - sphere.y) > 1e-9), 0.5)
        with self.assertRaises(ContractError):
            resample_frame(src, erp, cmp, seams='wrap')


class ChromaTestCase(unittest.TestCase):
    def ramp_444(self, width=16, height=12):
        g = FrameGeometry(width, height, 8, '444')
        x, y = np.meshgrid(np.arange(width, dtype=float),
                           np.arange(height, dtype=float))
        return Frame.from_planes([x + y, 2 * x + 3 * y, 40 + x], g)

    def test_downsample_ramp(self):
        out = chroma_444_to_420(self.ramp_444())
        self.assertEqual(out.geometry.chroma, '420')
        self.assertEqual(out.u.shape, (6, 8))
        m, n = np.meshgrid(np.arange(8), np.arange(6))
        inner = (slice(1, 5), slice(1, 8))
        expected = 2 * (2 * m) + 3 * (2 * n + 0.5)
        np.testing.assert_allclose(out.u[inner], expected[inner])
        np.testing.assert_allclose(out.y, self.ramp_444().y)

    def test_upsample_ramp(self):
        down = chroma_444_to_420(self.ramp_444())
        up = chroma_420_to_444(down)
        self.assertEqual(up.geometry.chroma, '444')
        inner = (slice(3, 9), slice(2, 13))
        np.testing.assert_allclose(up.u[inner], self.ramp_444().u[inner])

    def test_constant_round_trip(self):
        g = FrameGeometry(20, 10, 10, '420')
        f = Frame.constant(g, 700, 300, 900)
        back = convert_chroma(convert_chroma(f, '444'), '420')
        self.assertTrue(back.same_content(f))

    def test_wrong_source_format(self):
        f = Frame.constant(FrameGeometry(8, 8, 8, '420'), 16)
        self.assertIs(convert_chroma(f, '420'), f)
        with self.assertRaises(ContractError):
            chroma_444_to_420(f)
        with self.assertRaises(ContractError):
            chroma_420_to_444(convert_chroma(f, '444'))
        odd = Frame.constant(FrameGeometry(9, 8, 8, '444'), 16)
        with self.assertRaises(ContractError):
            chroma_444_to_420(odd)
