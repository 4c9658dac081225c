"""UTM <-> geodetic conversion on the GRS80 ellipsoid.

Transverse Mercator implemented with the 6th-order Krueger series
(exact-to-sub-mm inside a zone), scale 0.9996, false easting 500 km.
Also provides the small local tangent-plane helpers used for buffer
distances at street scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ArgumentError, OutOfDomainError

# GRS80
_A = 6378137.0
_F = 1.0 / 298.257222101
_E2 = _F * (2.0 - _F)
_E = math.sqrt(_E2)
_N = _F / (2.0 - _F)

_SCALE = 0.9996
_FALSE_EASTING = 500000.0
_FALSE_NORTHING_SOUTH = 10000000.0

# rectifying radius
_A_RECT = _A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)

_ALPHA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 5.0 * _N**3 / 16.0 + 41.0 * _N**4 / 180.0
    - 127.0 * _N**5 / 288.0 + 7891.0 * _N**6 / 37800.0,
    13.0 * _N**2 / 48.0 - 3.0 * _N**3 / 5.0 + 557.0 * _N**4 / 1440.0
    + 281.0 * _N**5 / 630.0 - 1983433.0 * _N**6 / 1935360.0,
    61.0 * _N**3 / 240.0 - 103.0 * _N**4 / 140.0 + 15061.0 * _N**5 / 26880.0
    + 167603.0 * _N**6 / 181440.0,
    49561.0 * _N**4 / 161280.0 - 179.0 * _N**5 / 168.0 + 6601661.0 * _N**6 / 7257600.0,
    34729.0 * _N**5 / 80640.0 - 3418889.0 * _N**6 / 1995840.0,
    212378941.0 * _N**6 / 319334400.0,
)

_BETA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 37.0 * _N**3 / 96.0 - _N**4 / 360.0
    - 81.0 * _N**5 / 512.0 + 96199.0 * _N**6 / 604800.0,
    _N**2 / 48.0 + _N**3 / 15.0 - 437.0 * _N**4 / 1440.0 + 46.0 * _N**5 / 105.0
    - 1118711.0 * _N**6 / 3870720.0,
    17.0 * _N**3 / 480.0 - 37.0 * _N**4 / 840.0 - 209.0 * _N**5 / 4480.0
    + 5569.0 * _N**6 / 90720.0,
    4397.0 * _N**4 / 161280.0 - 11.0 * _N**5 / 504.0 - 830251.0 * _N**6 / 7257600.0,
    4583.0 * _N**5 / 161280.0 - 108847.0 * _N**6 / 3991680.0,
    20648693.0 * _N**6 / 638668800.0,
)

# mean meters per degree of latitude, for local tangent frames
METERS_PER_DEGREE = math.pi / 180.0 * 6371008.8


@dataclass(frozen=True)
class GeodeticPoint:
    lat: float  # degrees
    lon: float  # degrees

    def __post_init__(self):
        if abs(self.lat) > 90.0 or abs(self.lon) > 180.0:
            raise ArgumentError(f"geodetic point out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class UtmPoint:
    easting: float   # m
    northing: float  # m
    zone: int
    hemisphere: str = "N"

    def __post_init__(self):
        if not 1 <= self.zone <= 60:
            raise ArgumentError(f"UTM zone out of range: {self.zone}")
        if self.hemisphere not in ("N", "S"):
            raise ArgumentError(f"hemisphere must be 'N' or 'S', got {self.hemisphere!r}")
        if not 0.0 < self.easting < 1_000_000.0:
            raise ArgumentError(f"easting out of range: {self.easting}")
        if self.northing < 0.0:
            raise ArgumentError(f"northing must be >= 0: {self.northing}")


def central_meridian(zone: int) -> float:
    return 6.0 * zone - 183.0


def geodetic_to_utm(point: GeodeticPoint, zone: int) -> UtmPoint:
    """Forward transverse Mercator, Krueger series."""
    if abs(point.lat) > 84.0:
        raise OutOfDomainError(f"latitude {point.lat} beyond the +/-84 deg series domain")
    phi = math.radians(point.lat)
    lam = math.radians(point.lon - central_meridian(zone))

    sin_phi = math.sin(phi)
    t = math.sinh(math.atanh(sin_phi) - _E * math.atanh(_E * sin_phi))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.asinh(math.sin(lam) / math.hypot(t, math.cos(lam)))

    xi = xi_p
    eta = eta_p
    for j, alpha in enumerate(_ALPHA, start=1):
        xi += alpha * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += alpha * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)

    easting = _FALSE_EASTING + _SCALE * _A_RECT * eta
    northing = _SCALE * _A_RECT * xi
    hemisphere = "N" if point.lat >= 0 else "S"
    if hemisphere == "S":
        northing += _FALSE_NORTHING_SOUTH
    return UtmPoint(easting, northing, zone, hemisphere)


def utm_to_geodetic(point: UtmPoint) -> GeodeticPoint:
    """Inverse transverse Mercator, Krueger series + Newton latitude solve."""
    northing = point.northing
    if point.hemisphere == "S":
        northing -= _FALSE_NORTHING_SOUTH
    xi = northing / (_SCALE * _A_RECT)
    eta = (point.easting - _FALSE_EASTING) / (_SCALE * _A_RECT)

    xi_p = xi
    eta_p = eta
    for j, beta in enumerate(_BETA, start=1):
        xi_p -= beta * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= beta * math.cos(2 * j * xi) * math.sinh(2 * j * eta)

    tau_p = math.sin(xi_p) / math.hypot(math.sinh(eta_p), math.cos(xi_p))

    # invert the conformal-latitude map by Newton iteration on tan(lat)
    tau = tau_p / (1.0 - _E2)
    for _ in range(8):
        sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
        f = tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau) - tau_p
        df = ((math.hypot(1.0, sigma) * math.hypot(1.0, tau) - sigma * tau)
              * (1.0 - _E2) * math.hypot(1.0, tau) / (1.0 + (1.0 - _E2) * tau * tau))
        step = f / df
        tau -= step
        if abs(step) < 1e-16 * max(1.0, abs(tau)):
            break

    lat = math.degrees(math.atan(tau))
    lon = central_meridian(point.zone) + math.degrees(math.atan2(math.sinh(eta_p), math.cos(xi_p)))
    if abs(lat) > 84.0:
        raise OutOfDomainError(f"latitude {lat} beyond the +/-84 deg series domain")
    return GeodeticPoint(lat, lon)


def local_tangent_offset(origin: GeodeticPoint, point: GeodeticPoint) -> tuple[float, float]:
    """(east, north) meters from origin to point, equirectangular approximation."""
    east = (point.lon - origin.lon) * METERS_PER_DEGREE * math.cos(math.radians(origin.lat))
    north = (point.lat - origin.lat) * METERS_PER_DEGREE
    return east, north
