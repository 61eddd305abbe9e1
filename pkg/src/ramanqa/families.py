"""Canonical Raman peak families and center-based family assignment."""

from __future__ import annotations

import math

# Canonical centers (cm^-1) for the eight families tracked by the schema:
# three TM-O lattice modes, the D/G carbon bands, and three additional
# carbon-region features.
CANONICAL_CENTERS: dict[str, float] = {
    "eg": 476.0,
    "a1g_d": 534.5,
    "a1g_c": 595.5,
    "u1": 1173.3,
    "d": 1330.5,
    "u2": 1508.1,
    "u3": 1564.0,
    "g": 1596.8,
}

FAMILY_NAMES: frozenset[str] = frozenset(CANONICAL_CENTERS)

# Half-width of the assignment window around each canonical center. 20 cm^-1
# keeps the closest pair (u3 at 1564.0, g at 1596.8) disjoint under
# nearest-center assignment.
ASSIGNMENT_WINDOW: float = 20.0

# Families ordered by canonical center, ascending. Iterating in this order
# makes the equidistant tie-break (lower wavenumber wins) fall out of a
# strict less-than comparison.
_BY_CENTER: list[tuple[str, float]] = sorted(
    CANONICAL_CENTERS.items(), key=lambda kv: kv[1]
)


def assign_family(center: float) -> str | None:
    """Assign a fitted center to the nearest canonical family.

    Returns the family name when the nearest canonical center is within
    ASSIGNMENT_WINDOW, else None. Equidistant centers resolve to the
    lower-wavenumber family; distances are quantized to 1e-6 cm^-1 so that
    decimal-equidistant centers actually tie in float arithmetic.
    """
    if not math.isfinite(center):
        raise ValueError(f"peak center must be finite, got {center!r}")
    best_name: str | None = None
    best_dist = math.inf
    for name, canon in _BY_CENTER:
        dist = round(abs(center - canon), 6)
        if dist <= ASSIGNMENT_WINDOW and dist < best_dist:
            best_name = name
            best_dist = dist
    return best_name
