""" Projection formats as mappings between packed frames and the sphere

Every format maps packed unit coordinates (u, v) in [0, 1)^2 to a direction
and back. Packed formats are split in faces laid out on a 3x2 grid; the
face-local coordinates (s, t) lie in [-1, 1]^2 with t pointing up.

All mapping functions are vectorized over numpy arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import DomainError, FrameGeometry, CHROMA_444
from .sphere import Direction, check_unit, xyz_to_lonlat


FORMATS = ('erp', 'aep', 'cmp', 'eac', 'hec', 'acp', 'gcp', 'ecp')
CUBE_FORMATS = ('cmp', 'eac', 'hec', 'acp', 'gcp')
PANORAMIC_FORMATS = ('erp', 'aep')

ERP_FACES = ('F0',)
CUBE_FACES = ('PX', 'NX', 'PY', 'NY', 'PZ', 'NZ')
ECP_FACES = ('E0', 'E1', 'E2', 'E3', 'TOP', 'BOTTOM')

DEFAULT_ACP_COEFFS = (0.34, 0.66)

# Equatorial band of ECP covers |z| <= 2/3, i.e. 2/3 of the sphere area
ECP_BAND_Z = 2.0 / 3.0

DEFAULT_RESOLUTIONS = {
    'erp': (2048, 1024),
    'aep': (2048, 1024),
    'cmp': (1800, 1200),
    'eac': (1800, 1200),
    'hec': (1800, 1200),
    'acp': (1800, 1200),
    'gcp': (1800, 1200),
    'ecp': (1800, 1200),
}

# Coded resolutions of the reference test conditions, including formats
# whose geometry is not implemented here
REFERENCE_RESOLUTIONS = dict(DEFAULT_RESOLUTIONS, **{
    'gcp': (1816, 1232),
    'rsp': (1800, 1200),
    'isp': (1306, 1672),
})

# (col, row) of each face on the 3x2 grid
CUBE_TILES = {
    'NY': (0, 0), 'PX': (1, 0), 'PY': (2, 0),
    'NZ': (0, 1), 'NX': (1, 1), 'PZ': (2, 1),
}
ECP_TILES = {
    'E0': (0, 0), 'E1': (1, 0), 'E2': (2, 0),
    'E3': (0, 1), 'TOP': (1, 1), 'BOTTOM': (2, 1),
}

# direction = axis + c_s * e_s + c_t * e_t, rows in CUBE_FACES order.
# Top row NY|PX|PY is the equatorial strip, bottom row NZ|NX|PZ the strip
# running over the back of the sphere.
_CUBE_AXIS = np.array([
    [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=float)
_CUBE_ES = np.array([
    [0, 1, 0], [0, 0, 1], [-1, 0, 0], [1, 0, 0], [1, 0, 0], [-1, 0, 0]],
    dtype=float)
_CUBE_ET = np.array([
    [0, 0, 1], [0, 1, 0], [0, 0, 1], [0, 0, 1], [0, 1, 0], [0, 1, 0]],
    dtype=float)

# Face axis aligned with the sphere's z axis on the four equatorial faces:
# 't' except for the rotated NX face
_EQUATORIAL_Z_AXIS = {'PX': 't', 'PY': 't', 'NY': 't', 'NX': 's'}


def face_names(fmt):
    if fmt in PANORAMIC_FORMATS:
        return ERP_FACES
    if fmt in CUBE_FORMATS:
        return CUBE_FACES
    if fmt == 'ecp':
        return ECP_FACES
    raise DomainError('Unknown projection format "{}"'.format(fmt))


def tile_positions(fmt):
    return ECP_TILES if fmt == 'ecp' else CUBE_TILES


def _grid(fmt):
    """ 2x3 array of face indices, indexed [row, col]
    """
    names = face_names(fmt)
    grid = np.zeros((2, 3), dtype=int)
    for name, (col, row) in tile_positions(fmt).items():
        grid[row, col] = names.index(name)
    return grid


def face_index(fmt, face):
    names = face_names(fmt)
    if isinstance(face, str):
        if face not in names:
            raise DomainError('Face {} is not valid for {}'.format(face, fmt))
        return names.index(face)
    face = np.asarray(face)
    if np.any(face < 0) or np.any(face >= len(names)):
        raise DomainError('Face index out of range for {}'.format(fmt))
    return face


# Warping

@dataclass(frozen=True)
class WarpFunction:
    """ Odd, strictly increasing map from coded coordinate to cube coordinate

    families: identity, tangent, polynomial (coeffs = (a, b), a + b = 1)
    """
    family: str = 'identity'
    coeffs: tuple = ()

    def __post_init__(self):
        if self.family not in ('identity', 'tangent', 'polynomial'):
            raise DomainError('Unknown warp family "{}"'.format(self.family))
        if self.family == 'polynomial':
            if len(self.coeffs) != 2:
                raise DomainError('Polynomial warp needs (a, b) coefficients')
            a, b = self.coeffs
            if abs(a + b - 1.0) > 1e-12:
                raise DomainError(
                    'Polynomial warp must satisfy a + b = 1, got {} + {}'.format(
                        a, b))
            # derivative 2a|s| + b must stay positive on [0, 1]
            if b <= 0 or 2 * a + b <= 0:
                raise DomainError(
                    'Polynomial warp ({}, {}) is not strictly increasing'.format(
                        a, b))

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == 'identity':
            return s
        if self.family == 'tangent':
            return np.tan(s * (math.pi / 4))
        a, b = self.coeffs
        m = np.abs(s)
        return np.sign(s) * (a * m * m + b * m)

    def invert(self, c):
        c = np.asarray(c, dtype=float)
        if self.family == 'identity':
            return c
        if self.family == 'tangent':
            return np.arctan(c) * (4 / math.pi)
        a, b = self.coeffs
        m = np.abs(c)
        # positive root of a s^2 + b s - m = 0, cancellation-free form
        return np.sign(c) * (2 * m / (b + np.sqrt(b * b + 4 * a * m)))


IDENTITY = WarpFunction('identity')
TANGENT = WarpFunction('tangent')


def _check_unit_interval(values, what):
    if np.any(np.abs(np.asarray(values)) > 1.0):
        raise DomainError('{} outside [-1, 1]'.format(what))


def warp_eval(w, s):
    _check_unit_interval(s, 'Coded coordinate')
    out = w.evaluate(s)
    return float(out) if np.ndim(out) == 0 else out


def warp_invert(w, c):
    _check_unit_interval(c, 'Cube coordinate')
    out = w.invert(c)
    return float(out) if np.ndim(out) == 0 else out


# Specs

def default_geometry(fmt, scale=1.0, bit_depth=8, chroma=CHROMA_444):
    """ Coded geometry of a format, optionally scaled

    Packed formats keep square faces with an even face size, panoramic
    formats keep even dimensions.
    """
    if fmt not in DEFAULT_RESOLUTIONS:
        raise DomainError('Unknown projection format "{}"'.format(fmt))
    width, height = DEFAULT_RESOLUTIONS[fmt]
    if fmt in PANORAMIC_FORMATS:
        width = max(2, 2 * int(round(width * scale / 2)))
        height = max(2, 2 * int(round(height * scale / 2)))
    else:
        face = max(2, 2 * int(round(height / 2 * scale / 2)))
        width, height = 3 * face, 2 * face
    return FrameGeometry(width, height, bit_depth, chroma)


def _normalize_coeffs(fmt, coeffs):
    if fmt not in ('hec', 'acp', 'gcp'):
        if coeffs:
            raise DomainError('Format {} takes no warp coefficients'.format(fmt))
        return ()
    if coeffs is None or len(coeffs) == 0:
        return (DEFAULT_ACP_COEFFS, DEFAULT_ACP_COEFFS)
    coeffs = tuple(coeffs)
    if all(isinstance(c, (int, float)) for c in coeffs):
        pair = tuple(float(c) for c in coeffs)
        return (pair, pair)
    if len(coeffs) != 2:
        raise DomainError(
            'Expected one coefficient pair or one per axis, got {}'.format(
                coeffs))
    return tuple(tuple(float(c) for c in pair) for pair in coeffs)


@dataclass(frozen=True)
class FaceCoord:
    face: str
    s: float
    t: float

    def __post_init__(self):
        if abs(self.s) > 1.0 or abs(self.t) > 1.0:
            raise DomainError('Face coordinates ({}, {}) outside [-1, 1]'.format(
                self.s, self.t))


@dataclass(frozen=True)
class ProjectionSpec:
    """ A projection format with its warp coefficients and coded geometry

    warp_coeffs holds one (a, b) pair per face axis (horizontal, vertical)
    for the polynomial families, and is empty otherwise.
    """
    format: str
    warp_coeffs: tuple
    coded_geometry: FrameGeometry

    def __post_init__(self):
        if self.format not in FORMATS:
            raise DomainError('Unknown projection format "{}"'.format(
                self.format))
        for pair in self.warp_coeffs:
            WarpFunction('polynomial', pair)
        g = self.coded_geometry
        if self.format not in PANORAMIC_FORMATS:
            if g.width % 3 or g.height % 2 or g.width // 3 != g.height // 2:
                raise DomainError(
                    '{} needs a 3x2 grid of square faces, got {}x{}'.format(
                        self.format, g.width, g.height))

    @classmethod
    def from_name(cls, name, coeffs=None, geometry=None, scale=1.0):
        fmt = name.strip().lower()
        if fmt not in FORMATS:
            raise DomainError('Unknown projection format "{}"'.format(name))
        if geometry is None:
            geometry = default_geometry(fmt, scale)
        return cls(fmt, _normalize_coeffs(fmt, coeffs), geometry)

    def with_geometry(self, geometry):
        return ProjectionSpec(self.format, self.warp_coeffs, geometry)

    @property
    def faces(self):
        return face_names(self.format)

    @property
    def is_panoramic(self):
        return self.format in PANORAMIC_FORMATS

    def face_warps(self, face):
        """ (horizontal, vertical) warp functions of a face
        """
        fmt = self.format
        if fmt == 'cmp':
            return IDENTITY, IDENTITY
        if fmt == 'eac':
            return TANGENT, TANGENT
        if fmt == 'acp':
            return (WarpFunction('polynomial', self.warp_coeffs[0]),
                    WarpFunction('polynomial', self.warp_coeffs[1]))
        if fmt == 'gcp':
            return (WarpFunction('polynomial', self.warp_coeffs[0]),
                    WarpFunction('polynomial', self.warp_coeffs[1]))
        if fmt == 'hec':
            poly = WarpFunction('polynomial', self.warp_coeffs[1])
            z_axis = _EQUATORIAL_Z_AXIS.get(face)
            if z_axis == 't':
                return TANGENT, poly
            if z_axis == 's':
                return poly, TANGENT
            return TANGENT, TANGENT
        raise DomainError('Format {} has no cube faces'.format(fmt))

    def forward(self, u, v):
        x, y, z = forward_map(self, u, v)
        return Direction(float(x), float(y), float(z))

    def inverse(self, d):
        face, s, t, u, v = inverse_map(self, d.x, d.y, d.z)
        return (FaceCoord(self.faces[int(face)], float(s), float(t)),
                (float(u), float(v)))

    def label(self):
        return self.format.upper()


# Packing

def packing_place(fmt, face, s, t):
    """ Face-local (s, t) to packed (u, v)
    """
    idx = face_index(fmt, face)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a = (s + 1) / 2
    b = (1 - t) / 2
    if fmt in PANORAMIC_FORMATS:
        return a, b
    names = face_names(fmt)
    tiles = tile_positions(fmt)
    cols = np.array([tiles[n][0] for n in names])
    rows = np.array([tiles[n][1] for n in names])
    return (cols[idx] + a) / 3, (rows[idx] + b) / 2


def packing_locate(fmt, u, v):
    """ Packed (u, v) to (face index, s, t)
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if fmt in PANORAMIC_FORMATS:
        face_names(fmt)
        return np.zeros(u.shape, dtype=int), 2 * u - 1, 1 - 2 * v
    grid = _grid(fmt)
    col = np.clip(np.floor(u * 3).astype(int), 0, 2)
    row = np.clip(np.floor(v * 2).astype(int), 0, 1)
    a = u * 3 - col
    b = v * 2 - row
    return grid[row, col], 2 * a - 1, 1 - 2 * b


# Concentric square <-> disc mapping for the ECP caps

def _square_to_disc(a, b):
    abs_a, abs_b = np.abs(a), np.abs(b)
    major_a = abs_a > abs_b
    safe_a = np.where(a == 0, 1.0, a)
    safe_b = np.where(b == 0, 1.0, b)
    r = np.where(major_a, a, b)
    phi = np.where(major_a,
                   (math.pi / 4) * (b / safe_a),
                   math.pi / 2 - (math.pi / 4) * (a / safe_b))
    return r * np.cos(phi), r * np.sin(phi)


def _disc_to_square(dx, dy):
    r = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    phi = np.where(phi < -math.pi / 4, phi + 2 * math.pi, phi)
    quarter = math.pi / 4
    a = np.select(
        [phi < quarter, phi < 3 * quarter, phi < 5 * quarter],
        [r, r * (math.pi / 2 - phi) / quarter, -r],
        r * (phi - 3 * math.pi / 2) / quarter)
    b = np.select(
        [phi < quarter, phi < 3 * quarter, phi < 5 * quarter],
        [r * phi / quarter, r, -r * (phi - math.pi) / quarter],
        -r)
    return np.clip(a, -1, 1), np.clip(b, -1, 1)


# Face mappings

def _normalize(x, y, z):
    norm = np.sqrt(x * x + y * y + z * z)
    return x / norm, y / norm, z / norm


def _cube_face_to_xyz(spec, face, s, t):
    c_s = np.empty_like(s)
    c_t = np.empty_like(t)
    for idx, name in enumerate(CUBE_FACES):
        mask = face == idx
        if not np.any(mask):
            continue
        warp_s, warp_t = spec.face_warps(name)
        c_s[mask] = warp_s.evaluate(s[mask])
        c_t[mask] = warp_t.evaluate(t[mask])
    vec = (_CUBE_AXIS[face]
           + c_s[..., None] * _CUBE_ES[face]
           + c_t[..., None] * _CUBE_ET[face])
    return _normalize(vec[..., 0], vec[..., 1], vec[..., 2])


def _cube_xyz_to_face(spec, x, y, z):
    # first maximum wins: ties go to the lowest face in CUBE_FACES order
    components = np.stack([x, -x, y, -y, z, -z])
    face = np.argmax(components, axis=0)
    vec = np.stack([x, y, z], axis=-1)
    depth = np.einsum('...i,...i->...', vec, _CUBE_AXIS[face])
    c_s = np.einsum('...i,...i->...', vec, _CUBE_ES[face]) / depth
    c_t = np.einsum('...i,...i->...', vec, _CUBE_ET[face]) / depth
    c_s = np.clip(c_s, -1, 1)
    c_t = np.clip(c_t, -1, 1)
    s = np.empty_like(c_s)
    t = np.empty_like(c_t)
    for idx, name in enumerate(CUBE_FACES):
        mask = face == idx
        if not np.any(mask):
            continue
        warp_s, warp_t = spec.face_warps(name)
        s[mask] = warp_s.invert(c_s[mask])
        t[mask] = warp_t.invert(c_t[mask])
    return face, s, t


def _ecp_face_to_xyz(face, s, t):
    x = np.empty_like(s)
    y = np.empty_like(s)
    z = np.empty_like(s)
    band = face < 4
    if np.any(band):
        lon = -math.pi + (face[band] + 0.5) * (math.pi / 2) + s[band] * (math.pi / 4)
        zb = t[band] * ECP_BAND_Z
        rho = np.sqrt(np.clip(1 - zb * zb, 0, None))
        x[band] = rho * np.cos(lon)
        y[band] = rho * np.sin(lon)
        z[band] = zb
    cap = ~band
    if np.any(cap):
        dx, dy = _square_to_disc(s[cap], t[cap])
        r2 = dx * dx + dy * dy
        zc = 1 - r2 * (1 - ECP_BAND_Z)
        k = np.sqrt((1 - ECP_BAND_Z) * (1 + zc))
        sign = np.where(face[cap] == ECP_FACES.index('TOP'), 1.0, -1.0)
        x[cap] = k * dx
        y[cap] = k * dy
        z[cap] = sign * zc
    return x, y, z


def _ecp_xyz_to_face(x, y, z):
    face = np.empty(x.shape, dtype=int)
    s = np.empty_like(x)
    t = np.empty_like(x)
    band = np.abs(z) <= ECP_BAND_Z
    if np.any(band):
        lon, _ = xyz_to_lonlat(x[band], y[band], z[band])
        pos = (lon + math.pi) / (math.pi / 2)
        k = np.floor(pos).astype(int)
        # a tile boundary belongs to the lower-numbered tile
        k = np.where((pos == k) & (k > 0), k - 1, k)
        k = np.clip(k, 0, 3)
        face[band] = k
        s[band] = np.clip((pos - k) * 2 - 1, -1, 1)
        t[band] = np.clip(z[band] / ECP_BAND_Z, -1, 1)
    cap = ~band
    if np.any(cap):
        zc = np.abs(z[cap])
        denom = np.sqrt((1 + zc) * (1 - ECP_BAND_Z))
        a, b = _disc_to_square(x[cap] / denom, y[cap] / denom)
        face[cap] = np.where(z[cap] > 0, ECP_FACES.index('TOP'),
                             ECP_FACES.index('BOTTOM'))
        s[cap] = a
        t[cap] = b
    return face, s, t


def face_to_xyz(spec, face, s, t):
    """ Face-local coordinates to directions (no range checks)
    """
    face = np.asarray(face, dtype=int)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    fmt = spec.format
    if fmt == 'erp':
        lon = s * math.pi
        lat = t * (math.pi / 2)
        cos_lat = np.cos(lat)
        return cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)
    if fmt == 'aep':
        # equal-area vertical law: z = sin(lat) = 1 - 2v = t
        lon = s * math.pi
        rho = np.sqrt(np.clip(1 - t * t, 0, None))
        return rho * np.cos(lon), rho * np.sin(lon), t.copy()
    if fmt == 'ecp':
        return _ecp_face_to_xyz(face, s, t)
    return _cube_face_to_xyz(spec, face, s, t)


def xyz_to_face(spec, x, y, z):
    """ Directions to (face index, s, t) (no range checks)
    """
    fmt = spec.format
    if fmt in PANORAMIC_FORMATS:
        lon, lat = xyz_to_lonlat(x, y, z)
        s = lon / math.pi
        t = lat / (math.pi / 2) if fmt == 'erp' else np.clip(z, -1, 1)
        return np.zeros(np.shape(x), dtype=int), s, t
    if fmt == 'ecp':
        return _ecp_xyz_to_face(x, y, z)
    return _cube_xyz_to_face(spec, x, y, z)


def forward_map(spec, u, v):
    """ Packed unit coordinates to directions, returns (x, y, z) arrays
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if (np.any(u < 0) or np.any(u >= 1) or np.any(v < 0) or np.any(v >= 1)):
        raise DomainError('Packed coordinates outside [0, 1)')
    face, s, t = packing_locate(spec.format, u, v)
    return face_to_xyz(spec, face, s, t)


def inverse_map(spec, x, y, z):
    """ Directions to (face index, s, t, u, v)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    check_unit(x, y, z)
    face, s, t = xyz_to_face(spec, x, y, z)
    u, v = packing_place(spec.format, face, s, t)
    return face, s, t, u, v
