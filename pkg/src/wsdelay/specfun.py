"""Cylindrical and spherical Bessel/Hankel functions and spherical harmonics.

All evaluations are for positive real arguments. Spherical Bessel functions
are computed by recurrence: j_l by downward (Miller-style) recurrence
normalized against the closed-form j_0/j_1, which is stable for l greater
than x, and y_l by upward recurrence, which is stable everywhere. Cylindrical
functions are delegated to scipy's Amos/Cephes routines behind the same
argument checks.

Spherical harmonics use fully normalized associated Legendre recurrences so
no factorial ratio is ever materialized; the Condon-Shortley phase (-1)^m is
applied exactly once, here.

Everything is pure and reentrant; x may be a scalar or an ndarray.
"""

from enum import Enum

import numpy as np
from scipy import special as _sp

from .errors import CapacityError, DomainError

# Nominal ceilings. Beyond these, double precision under/overflows for
# small arguments (y_l grows like (2l-1)!!/x^(l+1)).
CYL_ORDER_MAX = 200
SPH_DEGREE_MAX = 200

_EULER_GAMMA = 0.5772156649015329


class BesselKind(Enum):
    """Radial function family: regular, incoming (type 1), outgoing (type 2).

    For real arguments the two Hankel kinds are complex conjugates of each
    other.
    """

    REGULAR_J = "j"
    HANKEL1 = "h1"
    HANKEL2 = "h2"


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise DomainError("argument must be positive and finite")
    return x


# ---------------------------------------------------------------------------
# Cylindrical functions (scipy-backed)
# ---------------------------------------------------------------------------
def cyl_bessel(kind: BesselKind, order: int, x, ceiling: int = CYL_ORDER_MAX):
    """J_n(x), H_n^(1)(x) or H_n^(2)(x) for integer order n.

    Negative orders are folded with J_{-n} = (-1)^n J_n (same reflection for
    Y_n, hence for both Hankel kinds).
    """
    x = _check_x(x)
    n = int(order)
    if abs(n) > ceiling:
        raise CapacityError(f"cylindrical order |{n}| exceeds ceiling {ceiling}")
    sign = 1.0 if (n >= 0 or n % 2 == 0) else -1.0
    n = abs(n)
    if kind is BesselKind.REGULAR_J:
        return sign * _sp.jv(n, x)
    if kind is BesselKind.HANKEL1:
        return sign * (_sp.jv(n, x) + 1j * _sp.yv(n, x))
    return sign * (_sp.jv(n, x) - 1j * _sp.yv(n, x))


def cyl_bessel_dx(kind: BesselKind, order: int, x, ceiling: int = CYL_ORDER_MAX):
    """d/dx of the chosen cylindrical function, via f' = (f_{n-1} - f_{n+1})/2."""
    lo = cyl_bessel(kind, order - 1, x, ceiling=ceiling + 1)
    hi = cyl_bessel(kind, order + 1, x, ceiling=ceiling + 1)
    return 0.5 * (lo - hi)


# ---------------------------------------------------------------------------
# Spherical functions (recurrences)
# ---------------------------------------------------------------------------
def _sph_jn_downward(l: int, x: np.ndarray) -> np.ndarray:
    """j_0..j_l by Miller's downward recurrence, rows indexed by degree.

    Values are seeded high above the target degree, recursed down with
    on-the-fly rescaling against overflow, then normalized so the row 0
    (or row 1 near a j_0 zero) matches the closed form.
    """
    x = np.atleast_1d(x)
    xmax = float(np.max(x))
    start = int(max(l, xmax)) + 24 + int(2.0 * np.sqrt(max(l, xmax, 1.0)))
    nrows = max(l, 1) + 1
    jm = np.zeros((nrows, x.size))
    fp = np.zeros_like(x)          # f_{m+1}
    fc = np.full_like(x, 1e-300)   # f_m, arbitrary seed
    for m in range(start, -1, -1):
        if m < nrows:
            jm[m] = fc
        fm = (2 * m + 1) / x * fc - fp
        fp, fc = fc, fm
        big = np.abs(fc) > 1e250
        if np.any(big):
            fc[big] *= 1e-250
            fp[big] *= 1e-250
            jm[:, big] *= 1e-250
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    # j0 and j1 have no common zeros; normalize each column against
    # whichever is farther from its zero.
    use0 = np.abs(j0) >= np.abs(j1)
    denom0 = np.where(jm[0] == 0.0, 1.0, jm[0])
    denom1 = np.where(jm[1] == 0.0, 1.0, jm[1])
    scale = np.where(use0, j0 / denom0, j1 / denom1)
    return (jm * scale)[: l + 1]


def _sph_yn_upward(l: int, x: np.ndarray) -> np.ndarray:
    """y_0..y_l by upward recurrence (stable)."""
    x = np.atleast_1d(x)
    ym = np.zeros((l + 1, x.size))
    y0 = -np.cos(x) / x
    ym[0] = y0
    if l >= 1:
        ym[1] = -np.cos(x) / x**2 - np.sin(x) / x
        for m in range(1, l):
            ym[m + 1] = (2 * m + 1) / x * ym[m] - ym[m - 1]
    return ym


def _sph_jy(l: int, x: np.ndarray):
    xa = np.atleast_1d(_check_x(x))
    j = _sph_jn_downward(l, xa)
    y = _sph_yn_upward(l, xa)
    return j, y


def sph_bessel(kind: BesselKind, degree: int, x, ceiling: int = SPH_DEGREE_MAX):
    """j_l(x), h_l^(1)(x) or h_l^(2)(x) for degree l >= 0."""
    l = int(degree)
    if l < 0:
        raise DomainError("spherical degree must be >= 0")
    if l > ceiling:
        raise CapacityError(f"spherical degree {l} exceeds ceiling {ceiling}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    j, y = _sph_jy(l, x)
    if kind is BesselKind.REGULAR_J:
        out = j[l]
    elif kind is BesselKind.HANKEL1:
        out = j[l] + 1j * y[l]
    else:
        out = j[l] - 1j * y[l]
    return out[0] if scalar else out.reshape(np.shape(x))


def sph_bessel_dx(kind: BesselKind, degree: int, x, ceiling: int = SPH_DEGREE_MAX):
    """d/dx of the chosen spherical function via f_l' = f_{l-1} - (l+1)/x f_l.

    The l = 0 case uses the standard extension f_{-1}: j_{-1} = cos(x)/x,
    y_{-1} = sin(x)/x, so h1_{-1} = e^{jx}/x.
    """
    l = int(degree)
    if l < 0:
        raise DomainError("spherical degree must be >= 0")
    if l > ceiling:
        raise CapacityError(f"spherical degree {l} exceeds ceiling {ceiling}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xa = np.atleast_1d(_check_x(x))
    j, y = _sph_jy(max(l, 1) if l == 0 else l, xa)
    if l == 0:
        jm1 = np.cos(xa) / xa
        ym1 = np.sin(xa) / xa
        if kind is BesselKind.REGULAR_J:
            prev, curr = jm1, j[0]
        elif kind is BesselKind.HANKEL1:
            prev, curr = jm1 + 1j * ym1, j[0] + 1j * y[0]
        else:
            prev, curr = jm1 - 1j * ym1, j[0] - 1j * y[0]
    else:
        if kind is BesselKind.REGULAR_J:
            prev, curr = j[l - 1], j[l]
        elif kind is BesselKind.HANKEL1:
            prev, curr = j[l - 1] + 1j * y[l - 1], j[l] + 1j * y[l]
        else:
            prev, curr = j[l - 1] - 1j * y[l - 1], j[l] - 1j * y[l]
    out = prev - (l + 1) / xa * curr
    return out[0] if scalar else out.reshape(np.shape(x))


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------
def _legendre_normalized(l: int, m: int, costh: np.ndarray, sinth: np.ndarray):
    """NP_l^m = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_l^m(cos th) for m >= 0.

    Computed by the l-increasing recurrence on the pre-normalized functions;
    P_l^m here carries no Condon-Shortley phase.
    """
    npmm = np.full_like(costh, 1.0 / np.sqrt(4.0 * np.pi))
    for mm in range(1, m + 1):
        npmm = npmm * sinth * np.sqrt((2 * mm + 1) / (2.0 * mm))
    if l == m:
        return npmm
    npm1 = np.sqrt(2 * m + 3.0) * costh * npmm
    if l == m + 1:
        return npm1
    prev2, prev1 = npmm, npm1
    for ll in range(m + 2, l + 1):
        a = np.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m))
        b = np.sqrt(
            (2.0 * ll + 1.0)
            * (ll - 1.0 - m)
            * (ll - 1.0 + m)
            / ((2.0 * ll - 3.0) * (ll * ll - m * m))
        )
        curr = a * costh * prev1 - b * prev2
        prev2, prev1 = prev1, curr
    return prev1


def sph_harm(l: int, m: int, theta, phi):
    """Fully normalized spherical harmonic X_lm(theta, phi).

    X_lm = (-1)^m sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_l^m(cos theta) e^{jm phi}
    with the Condon-Shortley phase included here and nowhere else. Satisfies
    conj(X_lm) = (-1)^m X_{l,-m} and unit L2 norm on the sphere.
    """
    l, m = int(l), int(m)
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid harmonic indices (l={l}, m={m})")
    if l > SPH_DEGREE_MAX:
        raise CapacityError(f"degree {l} exceeds ceiling {SPH_DEGREE_MAX}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    costh, sinth = np.cos(theta), np.sin(theta)
    base = _legendre_normalized(l, abs(m), costh, sinth)
    phase = np.exp(1j * m * phi)
    if m >= 0:
        out = (-1.0) ** m * base * phase
    else:
        out = base * phase
    if out.ndim == 0:
        return complex(out)
    return out
