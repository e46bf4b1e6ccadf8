"""Adjacent-pixel correlation, corpus histograms and chi-square separability.

The correlation coefficient subtracts the *global* plane mean from both
members of every neighbour pair, rather than the two shifted series' own
means as a textbook Pearson correlation would.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneratePlane, EmptyPopulation, IncompatibleHistograms
from .imagecore import DIRECTIONS, Channel, Direction, ImagePlane, pair_views, split_channels

__all__ = [
    "DEFAULT_BINS",
    "DEFAULT_RANGE",
    "DiscriminabilityReport",
    "Histogram",
    "chi_square_distance",
    "corpus_histogram",
    "correlation_coefficient",
    "correlation_profile",
    "discriminability_report",
]

DEFAULT_BINS = 200
DEFAULT_RANGE = (-1.0, 1.0)


def correlation_coefficient(plane: ImagePlane, direction: Direction) -> float:
    """Correlation between each pixel and its neighbour along ``direction``.

    Raises
    ------
    DegeneratePlane
        If either centered sum of squares in the denominator is zero, e.g. for
        a constant plane.
    """
    samples = plane.samples.astype(np.float64)
    first, second = pair_views(samples, direction.offset)
    if first.size == 0:
        raise DegeneratePlane("no in-bounds pixel pairs for this direction")
    mean = samples.mean()
    a = first - mean
    b = second - mean
    saa = float(np.sum(a * a))
    sbb = float(np.sum(b * b))
    if saa == 0.0 or sbb == 0.0:
        raise DegeneratePlane("zero centered energy; correlation undefined")
    r = float(np.sum(a * b)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def correlation_profile(img) -> dict:
    """All 12 ``(channel, direction) -> r`` values; ``None`` where degenerate."""
    out = {}
    for plane in split_channels(img):
        for d in DIRECTIONS:
            try:
                out[(plane.channel, d)] = correlation_coefficient(plane, d)
            except DegeneratePlane:
                out[(plane.channel, d)] = None
    return out


@dataclass(frozen=True)
class Histogram:
    bin_count: int
    lo: float
    hi: float
    counts: np.ndarray
    population: int = 0
    degenerate: int = 0

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bin_count + 1)

    def to_dict(self) -> dict:
        return {
            "bin_count": self.bin_count,
            "range": [self.lo, self.hi],
            "edges": self.edges.tolist(),
            "masses": self.counts.tolist(),
            "population": self.population,
            "degenerate": self.degenerate,
        }


def _bin_indices(values: np.ndarray, bin_count: int, lo: float, hi: float) -> np.ndarray:
    idx = np.floor((values - lo) / (hi - lo) * bin_count).astype(np.int64)
    # The closed right edge belongs to the last bin.
    return np.minimum(idx, bin_count - 1)


def corpus_histogram(coefficients, bin_count: int = DEFAULT_BINS, range=DEFAULT_RANGE) -> Histogram:
    """Normalized histogram of correlation coefficients.

    ``None`` or NaN entries mark degenerate images; they are tallied in
    ``degenerate`` and left out of the masses.
    """
    lo, hi = float(range[0]), float(range[1])
    if bin_count < 2:
        raise ValueError("bin_count must be at least 2")
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    values = []
    degenerate = 0
    for c in coefficients:
        if c is None or (isinstance(c, float) and math.isnan(c)):
            degenerate += 1
        else:
            values.append(float(c))
    if not values:
        raise EmptyPopulation("no non-degenerate coefficients")
    values = np.asarray(values)
    if values.min() < lo or values.max() > hi:
        raise ValueError(f"coefficient outside histogram range [{lo}, {hi}]")
    counts = np.bincount(_bin_indices(values, bin_count, lo, hi), minlength=bin_count)
    return Histogram(
        bin_count=bin_count,
        lo=lo,
        hi=hi,
        counts=counts / counts.sum(),
        population=len(values),
        degenerate=degenerate,
    )


def chi_square_distance(h1: Histogram, h2: Histogram) -> float:
    """Half the chi-square sum between two normalized histograms, in [0, 1].

    Bins empty in both histograms are skipped.
    """
    if h1.bin_count != h2.bin_count or (h1.lo, h1.hi) != (h2.lo, h2.hi):
        raise IncompatibleHistograms("histograms differ in bin count or range")
    a = np.asarray(h1.counts, dtype=np.float64)
    b = np.asarray(h2.counts, dtype=np.float64)
    s = a + b
    nz = s > 0
    return float(0.5 * np.sum((a[nz] - b[nz]) ** 2 / s[nz]))


@dataclass
class DiscriminabilityReport:
    """Per ``(channel, direction)`` separability of two image populations."""

    bin_count: int
    range: tuple
    natural_size: int
    recolored_size: int
    entries: dict = field(default_factory=dict)

    @property
    def distances(self) -> dict:
        return {k: v["distance"] for k, v in self.entries.items()}

    @property
    def baselines(self) -> dict:
        return {k: v["baseline"] for k, v in self.entries.items()}

    def to_dict(self) -> dict:
        rows = []
        for (channel, direction), e in self.entries.items():
            rows.append(
                {
                    "channel": channel.name,
                    "direction": direction.short,
                    "distance": e["distance"],
                    "baseline": e["baseline"],
                    "natural": e["natural"].to_dict(),
                    "recolored": e["recolored"].to_dict(),
                }
            )
        return {
            "bin_count": self.bin_count,
            "range": list(self.range),
            "natural_size": self.natural_size,
            "recolored_size": self.recolored_size,
            "entries": rows,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def discriminability_report(natural, recolored, bin_count: int = DEFAULT_BINS, range=DEFAULT_RANGE) -> DiscriminabilityReport:
    """Chi-square distance between natural and recolored correlation histograms.

    Also computes a noise floor per combination: the distance between the
    even- and odd-indexed halves of the natural corpus. Both corpora may be
    any iterables; each image is profiled once and then dropped, so large
    generated corpora need not fit in memory.
    """
    nat_profiles = [correlation_profile(im) for im in natural]
    rec_profiles = [correlation_profile(im) for im in recolored]
    if not nat_profiles or not rec_profiles:
        raise EmptyPopulation("both corpora must be non-empty")
    report = DiscriminabilityReport(
        bin_count=bin_count,
        range=(float(range[0]), float(range[1])),
        natural_size=len(nat_profiles),
        recolored_size=len(rec_profiles),
    )
    for channel in Channel:
        for d in DIRECTIONS:
            key = (channel, d)
            nat_r = [p[key] for p in nat_profiles]
            h_nat = corpus_histogram(nat_r, bin_count, range)
            h_rec = corpus_histogram([p[key] for p in rec_profiles], bin_count, range)
            try:
                h_even = corpus_histogram(nat_r[0::2], bin_count, range)
                h_odd = corpus_histogram(nat_r[1::2], bin_count, range)
                baseline = chi_square_distance(h_even, h_odd)
            except EmptyPopulation:
                baseline = None
            report.entries[key] = {
                "distance": chi_square_distance(h_nat, h_rec),
                "baseline": baseline,
                "natural": h_nat,
                "recolored": h_rec,
            }
    return report
