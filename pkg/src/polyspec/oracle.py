"""Closed-form Laplace spectra of rectangles.

The rectangle ``[0, s1] x [0, s2]`` has eigenvalues
``pi^2 (m^2 / s1^2 + n^2 / s2^2)`` with ``m, n >= 1`` (Dirichlet) or
``m, n >= 0`` (Neumann).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .errors import InvalidIndices, InvalidInput, InvalidRational

PI2 = math.pi**2


class RectMode(NamedTuple):
    eigenvalue: float
    m: int
    n: int


@dataclass(frozen=True)
class RectSpec:
    s1: float
    s2: float
    bc: str = "dirichlet"

    def __post_init__(self):
        if not (self.s1 > 0 and self.s2 > 0):
            raise InvalidInput(f"side lengths must be positive, got {self.s1}, {self.s2}")
        if self.bc not in ("dirichlet", "neumann"):
            raise InvalidInput(f"unknown boundary condition {self.bc!r}")

    @property
    def first_index(self) -> int:
        return 1 if self.bc == "dirichlet" else 0


def _mode_value(m, n, s1, s2) -> float:
    return PI2 * (m * m / (s1 * s1) + n * n / (s2 * s2))


def rect_spectrum(spec: RectSpec, k: int) -> list[RectMode]:
    """The ``k`` smallest eigenvalues with their index pairs.

    Ties (to 1e-12 relative) are ordered lexicographically in ``(m, n)``.
    """
    if k < 1:
        raise InvalidInput("k must be at least 1")
    lo = spec.first_index
    N = lo + 4
    while True:
        modes = [
            RectMode(_mode_value(m, n, spec.s1, spec.s2), m, n)
            for m in range(lo, N + 1)
            for n in range(lo, N + 1)
        ]
        modes.sort()
        if len(modes) >= k:
            lam_k = modes[k - 1].eigenvalue
            # every mode with an index beyond N exceeds lam_k
            if min(_mode_value(N + 1, lo, spec.s1, spec.s2), _mode_value(lo, N + 1, spec.s1, spec.s2)) > lam_k * (1 + 1e-12):
                break
        N *= 2
    out: list[RectMode] = []
    i = 0
    while i < len(modes) and len(out) < k:
        j = i
        while j + 1 < len(modes) and modes[j + 1].eigenvalue - modes[i].eigenvalue <= 1e-12 * max(modes[i].eigenvalue, 1.0):
            j += 1
        group = sorted(modes[i:j + 1], key=lambda md: (md.m, md.n))
        out.extend(group)
        i = j + 1
    return out[:k]


class _Unknown:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNKNOWN"

    def __bool__(self):
        raise TypeError("simplicity is undecided; compare against UNKNOWN explicitly")


#: Verdict returned when a bounded collision search is inconclusive.
UNKNOWN = _Unknown()

#: Marker for a squared side ratio declared irrational by the caller.
IRRATIONAL = "irrational"


class Simplicity(NamedTuple):
    verdict: object  # True, False or UNKNOWN
    witness: Union[tuple, None] = None


def _as_fraction(ratio) -> Fraction:
    try:
        f = Fraction(ratio)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidRational(f"cannot read {ratio!r} as an exact rational") from exc
    if isinstance(ratio, float):
        raise InvalidRational("pass rationals exactly (Fraction, int or 'p/q'), not floats")
    if f <= 0:
        raise InvalidRational(f"squared side ratio must be positive, got {f}")
    return f


def rect_is_simple(s1_sq_ratio, bound: int = 50, bc: str = "dirichlet") -> Simplicity:
    """Decide simplicity of a rectangle spectrum from ``(s1/s2)^2``.

    ``s1_sq_ratio`` is either :data:`IRRATIONAL` or an exact rational.  For a
    rational ``p/q`` two modes collide iff ``q m^2 + p n^2`` coincide; index
    pairs up to ``bound`` are searched and the smallest collision is returned
    as witness ``((m, n), (m', n'))``.
    """
    if isinstance(s1_sq_ratio, str) and s1_sq_ratio.lower() == IRRATIONAL:
        return Simplicity(True)
    r = _as_fraction(s1_sq_ratio)
    p, q = r.numerator, r.denominator
    lo = 1 if bc == "dirichlet" else 0
    seen: dict[int, tuple[int, int]] = {}
    best = None
    for m in range(lo, bound + 1):
        for n in range(lo, bound + 1):
            v = q * m * m + p * n * n
            if v in seen:
                if best is None or v < best[0]:
                    best = (v, seen[v], (m, n))
            else:
                seen[v] = (m, n)
    if best is not None:
        return Simplicity(False, (best[1], best[2]))
    return Simplicity(UNKNOWN)


@dataclass(frozen=True)
class RectBranch:
    """Eigenvalue curve ``s -> pi^2 (m^2 / s1^2 + n^2 / s^2)``."""

    s1: float
    m: int
    n: int
    s_range: tuple = (0.0, math.inf)

    def __call__(self, s):
        return PI2 * (self.m**2 / self.s1**2 + self.n**2 / (s * s))

    @property
    def limit(self) -> float:
        return PI2 * self.m**2 / self.s1**2


def rect_branch(s1: float, s_range, mn, bc: str = "dirichlet") -> RectBranch:
    m, n = mn
    lo = 1 if bc == "dirichlet" else 0
    if int(m) != m or int(n) != n or m < lo or n < lo:
        raise InvalidIndices(f"indices {mn} invalid for {bc} condition")
    if s1 <= 0 or min(s_range) <= 0:
        raise InvalidInput("side lengths must be positive")
    return RectBranch(float(s1), int(m), int(n), tuple(s_range))


def rect_crossing(a: RectBranch, b: RectBranch) -> float:
    """Value of ``s`` where two branches with the same ``s1`` meet (nan if none)."""
    dn = a.n**2 - b.n**2
    dm = (b.m**2 - a.m**2) / a.s1**2
    if dm == 0 or dn / dm <= 0:
        return math.nan
    return math.sqrt(dn / dm)
