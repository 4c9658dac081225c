"""Independent transverse-Mercator oracle (classic USGS/Snyder series).

Deliberately a different formulation from the production code (which uses
the Krueger alpha/beta series): this one works with the e^2 power series
for the meridian arc and the T/C/A expansion. Agreement between the two
inside a UTM zone is far below the test tolerances.
"""

import math

A = 6378137.0
F = 1.0 / 298.257222101
E2 = F * (2.0 - F)
EP2 = E2 / (1.0 - E2)
K0 = 0.9996
FALSE_EASTING = 500000.0


def _meridian_arc(phi: float) -> float:
    return A * ((1 - E2 / 4 - 3 * E2**2 / 64 - 5 * E2**3 / 256) * phi
                - (3 * E2 / 8 + 3 * E2**2 / 32 + 45 * E2**3 / 1024) * math.sin(2 * phi)
                + (15 * E2**2 / 256 + 45 * E2**3 / 1024) * math.sin(4 * phi)
                - (35 * E2**3 / 3072) * math.sin(6 * phi))


def forward(lat_deg: float, lon_deg: float, zone: int) -> tuple[float, float]:
    """(easting, northing) for the northern hemisphere."""
    phi = math.radians(lat_deg)
    lam = math.radians(lon_deg - (6 * zone - 183))
    n = A / math.sqrt(1 - E2 * math.sin(phi) ** 2)
    t = math.tan(phi) ** 2
    c = EP2 * math.cos(phi) ** 2
    a = lam * math.cos(phi)
    m = _meridian_arc(phi)
    easting = K0 * n * (a + (1 - t + c) * a**3 / 6
                        + (5 - 18 * t + t**2 + 72 * c - 58 * EP2) * a**5 / 120) \
        + FALSE_EASTING
    northing = K0 * (m + n * math.tan(phi) * (a**2 / 2
                     + (5 - t + 9 * c + 4 * c**2) * a**4 / 24
                     + (61 - 58 * t + t**2 + 600 * c - 330 * EP2) * a**6 / 720))
    return easting, northing


def inverse(easting: float, northing: float, zone: int) -> tuple[float, float]:
    """(lat, lon) degrees for the northern hemisphere."""
    m = northing / K0
    mu = m / (A * (1 - E2 / 4 - 3 * E2**2 / 64 - 5 * E2**3 / 256))
    e1 = (1 - math.sqrt(1 - E2)) / (1 + math.sqrt(1 - E2))
    phi1 = (mu + (3 * e1 / 2 - 27 * e1**3 / 32) * math.sin(2 * mu)
            + (21 * e1**2 / 16 - 55 * e1**4 / 32) * math.sin(4 * mu)
            + (151 * e1**3 / 96) * math.sin(6 * mu)
            + (1097 * e1**4 / 512) * math.sin(8 * mu))
    c1 = EP2 * math.cos(phi1) ** 2
    t1 = math.tan(phi1) ** 2
    n1 = A / math.sqrt(1 - E2 * math.sin(phi1) ** 2)
    r1 = A * (1 - E2) / (1 - E2 * math.sin(phi1) ** 2) ** 1.5
    d = (easting - FALSE_EASTING) / (n1 * K0)
    phi = phi1 - (n1 * math.tan(phi1) / r1) * (
        d**2 / 2 - (5 + 3 * t1 + 10 * c1 - 4 * c1**2 - 9 * EP2) * d**4 / 24
        + (61 + 90 * t1 + 298 * c1 + 45 * t1**2 - 252 * EP2 - 3 * c1**2) * d**6 / 720)
    lam = (d - (1 + 2 * t1 + c1) * d**3 / 6
           + (5 - 2 * c1 + 28 * t1 - 3 * c1**2 + 8 * EP2 + 24 * t1**2) * d**5 / 120) \
        / math.cos(phi1)
    return math.degrees(phi), (6 * zone - 183) + math.degrees(lam)
