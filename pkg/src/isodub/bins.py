"""Equal-frequency duration binning for source-side timing tags."""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass

from .errors import ValidationError

BINS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BinBoundaries:
    """Strictly increasing thresholds; n values define n+1 bins.

    A duration d falls in bin = number of boundaries strictly below d, so
    ties at a boundary go to the lower bin. n_bins records the requested
    bin count (the tag space), which can exceed the realized count when
    boundary ties collapse.
    """

    boundaries: tuple[int, ...]
    n_bins: int

    def __post_init__(self):
        prev = None
        for b in self.boundaries:
            if prev is not None and b <= prev:
                raise ValidationError("bin boundaries must be strictly increasing")
            prev = b

    def assign(self, duration: int) -> int:
        return bisect_left(self.boundaries, duration)

    def assign_all(self, durations) -> list[int]:
        return [self.assign(d) for d in durations]

    def to_dict(self) -> dict:
        return {
            "format": "isodub-bins",
            "version": BINS_FORMAT_VERSION,
            "n_bins": self.n_bins,
            "boundaries": list(self.boundaries),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinBoundaries":
        if d.get("format") != "isodub-bins" or d.get("version") != BINS_FORMAT_VERSION:
            raise ValidationError("not a bins file (bad format/version)")
        return cls(tuple(d["boundaries"]), int(d["n_bins"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "BinBoundaries":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def learn_bins(durations, n_bins: int) -> BinBoundaries:
    """Empirical-quantile boundaries giving bins of near-equal population.

    Boundary k (1-based) is the inverted-CDF quantile at k/n_bins; repeated
    quantile values (heavy ties) are collapsed, so fewer than n_bins - 1
    boundaries may result.
    """
    data = sorted(durations)
    if not data:
        raise ValidationError("cannot learn bins from an empty duration list")
    if n_bins < 1:
        raise ValidationError(f"n_bins must be >= 1, got {n_bins}")
    n = len(data)
    boundaries: list[int] = []
    for k in range(1, n_bins):
        # inverted CDF: smallest x with CDF(x) >= k/n_bins
        idx = -(-k * n // n_bins) - 1  # ceil(k*n/n_bins) - 1
        b = data[idx]
        if not boundaries or b > boundaries[-1]:
            boundaries.append(b)
    return BinBoundaries(tuple(boundaries), n_bins)
