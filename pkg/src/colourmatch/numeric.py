"""Small numeric helpers: rational parsing, snapped floor/ceil, seed derivation."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from .errors import InvalidInputError

# Relative distance under which a float is treated as the nearby integer.
SNAP_REL = 1e-9


def parse_rational(value) -> Fraction:
    """Parse ``"1/10"``, ``"0.1"``, ``0.1`` or a Fraction into a Fraction.

    Floats go through their shortest repr so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"not a rational: {value!r}") from exc


def snap(x: float) -> float:
    r = round(x)
    if abs(x - r) <= SNAP_REL * max(1.0, abs(x)):
        return float(r)
    return x


def floor_snap(x: float) -> int:
    return math.floor(snap(x))


def ceil_snap(x: float) -> int:
    return math.ceil(snap(x))


def real_power(base: int | float, exponent: Fraction | float) -> float:
    """``base ** exponent`` in floating point, snapped to an integer when it is one."""
    return snap(float(base) ** float(exponent))


def derive_rng(seed: int, *tags) -> random.Random:
    """Independent, reproducible stream for one stage of a seeded run."""
    label = ":".join([str(seed), *map(str, tags)])
    return random.Random(label)


def derive_seed(seed: int, *tags) -> int:
    return derive_rng(seed, *tags).getrandbits(63)
