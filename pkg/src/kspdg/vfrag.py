"""Sorted multiset of vfrag unit weights with prefix sums.

Every edge contributes ``w0`` vfrags of unit weight ``w / w0``. The multiset
is stored run-length encoded (one run per edge, or per explicit
``(unit, count)`` pair) so its size stays proportional to the number of edges
rather than the number of vfrags.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from fractions import Fraction
from itertools import accumulate


class UnitWeightProfile:
    def __init__(self, runs):
        """``runs``: iterable of ``(unit_weight, count)`` with ``unit_weight`` a number or Fraction."""
        items = sorted(((Fraction(u), int(c)) for u, c in runs if c), key=lambda r: r[0])
        for u, c in items:
            if u <= 0 or c < 0:
                raise ValueError("unit weights must be positive and counts non-negative")
        self._units = [u for u, _ in items]
        self._counts = [c for _, c in items]
        self._cum_count = list(accumulate(self._counts, initial=0))
        self._cum_sum = list(accumulate((u * c for u, c in items), initial=Fraction(0)))

    @classmethod
    def from_edges(cls, weights, initials) -> UnitWeightProfile:
        return cls((Fraction(w, w0), w0) for w, w0 in zip(weights, initials))

    @property
    def total(self) -> int:
        return self._cum_count[-1]

    def prefix_sum(self, m: int) -> Fraction:
        """Exact sum of the ``m`` smallest unit weights."""
        if m < 0 or m > self.total:
            raise ValueError(f"phi={m} outside 0..{self.total}")
        if m == 0:
            return Fraction(0)
        i = bisect_left(self._cum_count, m) - 1
        return self._cum_sum[i] + (m - self._cum_count[i]) * self._units[i]

    def __iter__(self):
        for u, c in zip(self._units, self._counts):
            for _ in range(c):
                yield u

    def __len__(self):
        return self.total

    def __eq__(self, other):
        return isinstance(other, UnitWeightProfile) and list(self.runs()) == list(other.runs())

    def runs(self):
        """Merged ``(unit, count)`` runs, equal units combined."""
        out = []
        for u, c in zip(self._units, self._counts):
            if out and out[-1][0] == u:
                out[-1] = (u, out[-1][1] + c)
            else:
                out.append((u, c))
        return out


def bound_distance(profile: UnitWeightProfile, phi: int) -> int:
    """Bound distance of a path with ``phi`` vfrags, floored to the integer grid.

    Flooring keeps the value a lower bound and preserves every comparison
    against integer path distances.
    """
    return math.floor(profile.prefix_sum(phi))
