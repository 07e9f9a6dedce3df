"""Port basis for the scattering matrices.

3D ports are spherical harmonics indexed by p = (l, m); 2D ports are the
angular exponentials X_n(theta) = e^{j n theta}/sqrt(2 pi). Incoming waves
carry the e^{+jkr} radial phase, outgoing ones e^{-jkr}; the radial factors
are normalized so both limit to unit-power far-field templates:

    3D incoming:  k j^{l+1} h_l^(1)(kr) X_lm -> X_lm e^{jkr}/r
    2D incoming:  gamma_n H_n^(1)(kr) X_n    -> X_n  e^{jkr}/sqrt(r)

with gamma_n = sqrt(pi k/2) e^{j(n pi/2 + pi/4)}.

Mode ordering is total and deterministic (3D lexicographic in (l, m); 2D by
n = 0, -1, +1, -2, +2, ...) so that matrix files are reproducible across
runs. The basis origin is the coordinate origin; scatterer placement relative
to it matters and is recorded on the ModeSet.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, SingularPointError
from .specfun import BesselKind, cyl_bessel, cyl_bessel_dx, sph_bessel, sph_harm

FAR_ZONE_KR_MIN = 50.0


@dataclass(frozen=True, order=False)
class ModeIndex:
    """A single port label: (l, m) in 3D, signed order n in 2D."""

    dim: int
    l: int = 0
    m: int = 0
    n: int = 0

    def __post_init__(self):
        if self.dim == 3:
            if self.l < 0 or abs(self.m) > self.l:
                raise DomainError(f"invalid spherical index (l={self.l}, m={self.m})")
        elif self.dim != 2:
            raise DomainError(f"dim must be 2 or 3, got {self.dim}")

    @staticmethod
    def spherical(l: int, m: int) -> "ModeIndex":
        return ModeIndex(dim=3, l=l, m=m)

    @staticmethod
    def angular(n: int) -> "ModeIndex":
        return ModeIndex(dim=2, n=n)

    def __repr__(self):
        if self.dim == 3:
            return f"(l={self.l},m={self.m})"
        return f"(n={self.n})"


def conjugate_mode(p: ModeIndex):
    """Index map p -> p~ and sign with conj(X_p) = sign * X_p~.

    3D: p~ = (l, -m) with sign (-1)^m; 2D: p~ = -n with sign +1.
    An involution that preserves l (respectively |n|).
    """
    if p.dim == 3:
        return ModeIndex.spherical(p.l, -p.m), (-1.0) ** p.m
    return ModeIndex.angular(-p.n), 1.0


def spherical_mode_list(l_max: int):
    return tuple(
        ModeIndex.spherical(l, m) for l in range(l_max + 1) for m in range(-l, l + 1)
    )


def angular_mode_list(n_max: int):
    """2D ordering n = 0, -1, +1, -2, +2, ..."""
    order = [0]
    for n in range(1, n_max + 1):
        order.extend([-n, n])
    return tuple(ModeIndex.angular(n) for n in order)


@dataclass(frozen=True)
class ModeSet:
    """Ordered port basis at a fixed wavenumber."""

    dim: int
    modes: tuple
    k: float
    origin_note: str = "basis centered at the coordinate origin"
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.k <= 0:
            raise DomainError("wavenumber must be positive")
        if self.dim == 2 and len(self.modes) % 2 == 0:
            raise DomainError("2D mode count must be odd (symmetric range -N..N)")
        if self.dim == 3:
            lmax = int(np.sqrt(len(self.modes))) - 1
            if (lmax + 1) ** 2 != len(self.modes):
                raise DomainError("3D mode count must be (l_max+1)^2")
        object.__setattr__(
            self, "_index", {p: i for i, p in enumerate(self.modes)}
        )

    @staticmethod
    def spherical(l_max: int, k: float) -> "ModeSet":
        return ModeSet(dim=3, modes=spherical_mode_list(l_max), k=k)

    @staticmethod
    def angular(n_max: int, k: float) -> "ModeSet":
        return ModeSet(dim=2, modes=angular_mode_list(n_max), k=k)

    @staticmethod
    def with_count(dim: int, count: int, k: float) -> "ModeSet":
        if dim == 2:
            if count % 2 == 0:
                raise DomainError("2D mode count must be odd")
            return ModeSet.angular((count - 1) // 2, k)
        lmax = int(round(np.sqrt(count))) - 1
        if (lmax + 1) ** 2 != count:
            raise DomainError("3D mode count must be a perfect square")
        return ModeSet.spherical(lmax, k)

    def __len__(self):
        return len(self.modes)

    def position(self, p: ModeIndex) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise ContractError(f"mode {p} not in mode set") from None

    def same_modes(self, other: "ModeSet") -> bool:
        return self.dim == other.dim and self.modes == other.modes


def suggested_mode_count(k: float, a: float, c: float, dim: int) -> int:
    """Mode count from the truncation rule l_max = ka + c (ka)^(1/3).

    Returns (l_max+1)^2 in 3D and 2*l_max+1 in 2D. This is a sizing helper;
    scenario configs take the mode count directly.
    """
    if k <= 0 or a <= 0:
        raise DomainError("k and a must be positive")
    if not 2.0 <= c <= 4.0:
        raise DomainError("truncation constant c must lie in [2, 4]")
    ka = k * a
    lmax = int(np.ceil(ka + c * ka ** (1.0 / 3.0)))
    if dim == 3:
        return (lmax + 1) ** 2
    if dim == 2:
        return 2 * lmax + 1
    raise DomainError("dim must be 2 or 3")


# ---------------------------------------------------------------------------
# coordinates
# ---------------------------------------------------------------------------
def polar_coordinates(points, dim, allow_origin=False):
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != dim:
        raise ContractError(f"points must have {dim} components")
    if dim == 2:
        r = np.hypot(pts[..., 0], pts[..., 1])
        theta = np.arctan2(pts[..., 1], pts[..., 0])
    else:
        r = np.sqrt(np.sum(pts**2, axis=-1))
    if np.any(r == 0.0):
        if not allow_origin:
            raise SingularPointError("field evaluation at the basis origin")
        # regular fields are finite at the origin: J_n(0) kills the
        # undefined angle for n != 0; clamp r so special functions accept it
        r = np.where(r == 0.0, 1e-300, r)
    if dim == 2:
        return r, theta, None
    theta = np.arccos(np.clip(pts[..., 2] / np.maximum(r, 1e-300), -1.0, 1.0))
    phi = np.arctan2(pts[..., 1], pts[..., 0])
    return r, theta, phi


def angular_factor(p: ModeIndex, theta, phi=None):
    """X_p evaluated at the given angles."""
    if p.dim == 2:
        return np.exp(1j * p.n * np.asarray(theta)) / np.sqrt(2.0 * np.pi)
    return sph_harm(p.l, p.m, theta, phi)


def gamma_2d(n: int, k: float) -> complex:
    """Amplitude/phase constant of the 2D incoming radial factor."""
    return np.sqrt(np.pi * k / 2.0) * np.exp(1j * (n * np.pi / 2.0 + np.pi / 4.0))


# ---------------------------------------------------------------------------
# wave templates
# ---------------------------------------------------------------------------
def incoming_wave(p: ModeIndex, k: float, points):
    """Exact incoming unit-power mode evaluated at Cartesian points."""
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    r, theta, phi = polar_coordinates(points, p.dim)
    if p.dim == 3:
        radial = k * 1j ** (p.l + 1) * sph_bessel(BesselKind.HANKEL1, p.l, k * r)
        return radial * sph_harm(p.l, p.m, theta, phi)
    radial = gamma_2d(p.n, k) * cyl_bessel(BesselKind.HANKEL1, p.n, k * r)
    return radial * angular_factor(p, theta)


def regular_wave(p: ModeIndex, k: float, points):
    """Standing excitation whose incoming content is exactly mode p.

    Equal to the incoming wave plus its own free-space outgoing response:
    2 k j^{l+1} j_l(kr) X_lm in 3D, 2 gamma_n J_n(kr) X_n in 2D. Regular
    everywhere, so it is the right-hand side solvers can evaluate on any
    boundary regardless of where the origin lies.
    """
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    r, theta, phi = polar_coordinates(points, p.dim, allow_origin=True)
    if p.dim == 3:
        radial = 2.0 * k * 1j ** (p.l + 1) * sph_bessel(BesselKind.REGULAR_J, p.l, k * r)
        return radial * sph_harm(p.l, p.m, theta, phi)
    radial = 2.0 * gamma_2d(p.n, k) * cyl_bessel(BesselKind.REGULAR_J, p.n, k * r)
    return radial * angular_factor(p, theta)


def regular_waves_batch(modes: ModeSet, k: float, points):
    """regular_wave for every mode of a 2D set at once (shared Bessel table)."""
    if modes.dim != 2:
        raise ContractError("batched regular waves implemented for dim=2 only")
    from scipy import special as _scipy_special

    r, theta, _ = polar_coordinates(points, 2, allow_origin=True)
    orders = np.array([p.n for p in modes.modes])
    n_max = int(np.max(np.abs(orders)))
    table = _scipy_special.jv(np.arange(n_max + 1)[:, None], k * r[None, :])
    out = np.zeros((len(r), len(orders)), dtype=complex)
    inv_sqrt2pi = 1.0 / np.sqrt(2.0 * np.pi)
    for col, n in enumerate(orders):
        jn = table[abs(n)] if n >= 0 else (-1.0) ** (abs(n) % 2) * table[abs(n)]
        out[:, col] = (
            2.0 * gamma_2d(int(n), k) * jn * np.exp(1j * n * theta) * inv_sqrt2pi
        )
    return out


def regular_wave_gradient(p: ModeIndex, k: float, points):
    """Cartesian gradient of regular_wave; 2D only (used for Neumann data)."""
    if p.dim != 2:
        raise ContractError("gradient template implemented for dim=2 only")
    pts = np.asarray(points, dtype=float)
    r, theta, _ = polar_coordinates(pts, 2)
    g = 2.0 * gamma_2d(p.n, k)
    ang = angular_factor(p, theta)
    du_dr = g * k * cyl_bessel_dx(BesselKind.REGULAR_J, p.n, k * r) * ang
    du_dth_over_r = g * cyl_bessel(BesselKind.REGULAR_J, p.n, k * r) * (1j * p.n / r) * ang
    ct, st = np.cos(theta), np.sin(theta)
    gx = du_dr * ct - du_dth_over_r * st
    gy = du_dr * st + du_dth_over_r * ct
    return np.stack([gx, gy], axis=-1)


def outgoing_template(m: ModeIndex, k: float, points):
    """Far-zone outgoing basis function conj(X_m) e^{-jkr}/r (2D: /sqrt(r)).

    Only defined in the far zone; kr below the threshold is a domain error.
    """
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    r, theta, phi = polar_coordinates(points, m.dim)
    if np.any(k * r < FAR_ZONE_KR_MIN):
        raise DomainError(
            f"outgoing template undefined in the near zone (need kr >= {FAR_ZONE_KR_MIN})"
        )
    if m.dim == 3:
        return np.conj(sph_harm(m.l, m.m, theta, phi)) * np.exp(-1j * k * r) / r
    return np.conj(angular_factor(m, theta)) * np.exp(-1j * k * r) / np.sqrt(r)
