import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import smooth_image
from oracles import naive_r
from recolordetect.exceptions import DegeneratePlane, EmptyPopulation, IncompatibleHistograms
from recolordetect.imagecore import DIRECTIONS, Channel, Direction, ImagePlane, RgbImage
from recolordetect.spatialstats import (
    Histogram,
    chi_square_distance,
    corpus_histogram,
    correlation_coefficient,
    correlation_profile,
    discriminability_report,
)


def plane(arr, ch=Channel.R):
    return ImagePlane(ch, np.asarray(arr, dtype=np.uint8))


def test_constant_plane_degenerate():
    p = plane(np.full((5, 5), 128))
    for d in DIRECTIONS:
        with pytest.raises(DegeneratePlane):
            correlation_coefficient(p, d)


def test_checkerboard_horizontal_is_minus_one():
    yy, xx = np.mgrid[0:8, 0:8]
    p = plane(((xx + yy) % 2) * 255)
    assert correlation_coefficient(p, Direction.HORIZONTAL) == -1.0
    assert correlation_coefficient(p, Direction.VERTICAL) == -1.0
    assert correlation_coefficient(p, Direction.DIAGONAL) == pytest.approx(1.0, abs=1e-15)


def test_vertical_ramp_global_mean():
    p = plane(np.repeat((16 * np.arange(8))[:, None], 8, axis=1))
    r = correlation_coefficient(p, Direction.VERTICAL)
    # Exact value 53760 / 60928 = 15/17; a per-series Pearson would give 1.
    assert r == pytest.approx(15 / 17, abs=1e-12)
    assert r == pytest.approx(naive_r(p.samples, (0, 1)), abs=1e-12)
    assert r < 1.0


def test_matches_naive_oracle(rng):
    for _ in range(40):
        h, w = rng.integers(8, 33, size=2)
        arr = rng.integers(0, 256, (h, w))
        # Mix in smooth content so r spans the range.
        arr = (arr * rng.uniform(0, 1) + np.add.outer(np.arange(h), np.arange(w)) * rng.uniform(0, 4)) % 256
        p = plane(arr.astype(np.uint8))
        for d in DIRECTIONS:
            assert abs(correlation_coefficient(p, d) - naive_r(p.samples, d.offset)) <= 1e-12


@settings(max_examples=80, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(2, 10), st.integers(2, 10))))
def test_bounded(arr):
    p = plane(arr)
    for d in DIRECTIONS:
        try:
            r = correlation_coefficient(p, d)
        except DegeneratePlane:
            continue
        assert -1.0 <= r <= 1.0


def test_profile_has_twelve_entries(rng):
    prof = correlation_profile(smooth_image(rng))
    assert len(prof) == 12
    assert all(-1 <= v <= 1 for v in prof.values())


def test_profile_marks_degenerate_channel():
    arr = np.zeros((6, 6, 3), np.uint8)
    arr[:, :, 0] = np.arange(36).reshape(6, 6)
    prof = correlation_profile(RgbImage(arr))
    assert all(prof[(Channel.G, d)] is None for d in DIRECTIONS)
    assert all(prof[(Channel.R, d)] is not None for d in DIRECTIONS)


def test_histogram_single_bin():
    h = corpus_histogram([0.5, 0.5, 0.5], 10, (-1, 1))
    assert h.counts.tolist().count(1.0) == 1 and h.counts.sum() == 1.0
    assert h.counts[7] == 1.0


def test_histogram_hi_goes_to_last_bin():
    h = corpus_histogram([1.0], 10, (-1, 1))
    assert h.counts[-1] == 1.0
    h = corpus_histogram([-1.0], 10, (-1, 1))
    assert h.counts[0] == 1.0


def test_histogram_matches_binning_oracle(rng):
    values = np.tanh(rng.normal(1.2, 0.8, size=1000))
    n, lo, hi = 200, Fraction(-1), Fraction(1)
    oracle = [0] * n
    for v in values:
        k = math.floor((Fraction(float(v)) - lo) / (hi - lo) * n)
        oracle[min(k, n - 1)] += 1
    h = corpus_histogram(values.tolist(), n, (-1.0, 1.0))
    assert h.population == 1000
    assert (h.counts * 1000).round().astype(int).tolist() == oracle
    assert h.counts.tolist() == [c / 1000 for c in oracle]


def test_histogram_errors_and_degenerate_tally():
    with pytest.raises(EmptyPopulation):
        corpus_histogram([None, float("nan")], 10)
    h = corpus_histogram([0.1, None, 0.2], 10)
    assert (h.population, h.degenerate) == (2, 1)
    with pytest.raises(ValueError):
        corpus_histogram([0.1], 1)
    with pytest.raises(ValueError):
        corpus_histogram([1.5], 10)


def H(masses):
    masses = np.asarray(masses, dtype=np.float64)
    return Histogram(len(masses), -1.0, 1.0, masses, population=1)


def test_chi_square_examples():
    a = H([0.5, 0.5, 0, 0])
    b = H([0.25] * 4)
    assert chi_square_distance(a, a) == 0.0
    assert chi_square_distance(H([0.5, 0.5, 0, 0]), H([0, 0, 0.3, 0.7])) == 1.0
    assert chi_square_distance(a, b) == pytest.approx(1 / 3, abs=1e-15)


def test_chi_square_incompatible():
    with pytest.raises(IncompatibleHistograms):
        chi_square_distance(H([0.5, 0.5]), H([0.5, 0.25, 0.25]))
    other = Histogram(2, 0.0, 1.0, np.array([0.5, 0.5]))
    with pytest.raises(IncompatibleHistograms):
        chi_square_distance(H([0.5, 0.5]), other)


normalized = arrays(np.float64, 12, elements=st.floats(0, 1)).filter(lambda a: a.sum() > 0).map(lambda a: a / a.sum())


@settings(max_examples=200, deadline=None)
@given(normalized, normalized)
def test_chi_square_properties(a, b):
    d = chi_square_distance(H(a), H(b))
    assert d == chi_square_distance(H(b), H(a))
    assert -1e-15 <= d <= 1 + 1e-12
    assert chi_square_distance(H(a), H(a)) == 0.0


def test_report_self_comparison_zero(rng):
    imgs = [smooth_image(rng) for _ in range(6)]
    rep = discriminability_report(imgs, imgs)
    assert len(rep.distances) == 12
    assert all(d == 0.0 for d in rep.distances.values())
    assert all(b is not None and b >= 0 for b in rep.baselines.values())


def test_report_json(rng):
    nat = [smooth_image(rng) for _ in range(4)]
    rec = [RgbImage(np.ascontiguousarray(im.data[:, :, ::-1])) for im in nat]
    doc = json.loads(discriminability_report(nat, rec, bin_count=20).to_json())
    assert doc["natural_size"] == 4 and doc["bin_count"] == 20
    assert len(doc["entries"]) == 12
    e = doc["entries"][0]
    assert {"channel", "direction", "distance", "baseline", "natural", "recolored"} <= set(e)
    assert len(e["natural"]["edges"]) == 21 and abs(sum(e["natural"]["masses"]) - 1) < 1e-12


def test_report_needs_both_corpora(rng):
    with pytest.raises(EmptyPopulation):
        discriminability_report([smooth_image(rng)], [])
