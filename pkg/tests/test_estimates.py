from fractions import Fraction
from math import factorial, inf

import numpy as np
import pytest

from conftest import rainbow
from motifkit.errors import MotifkitError
from motifkit.estimates import (
    ClassEstimate,
    accurate_classes,
    biased_correction,
    colorful_probability,
    effective_total,
    load_truth_csv,
    relative_error,
    save_truth_csv,
    uniform_estimate,
    write_error_csv,
    write_report_csv,
)
from motifkit.graphlets import census
from motifkit.tables import build_tables


def test_colorful_probability_uniform():
    assert colorful_probability(3) == Fraction(6, 27)
    assert colorful_probability(4) == Fraction(24, 256)
    for k in range(2, 10):
        assert colorful_probability(k) == Fraction(factorial(k), k**k)


def test_colorful_probability_biased():
    # the uniform rate is the lam = 1/k special case
    for k in (3, 4, 5):
        assert colorful_probability(k, Fraction(1, k)) == colorful_probability(k)
    lam = Fraction(1, 20)
    k = 4
    want = factorial(k) * lam ** (k - 1) * (1 - (k - 1) * lam)
    assert colorful_probability(k, lam) == want
    # floats convert exactly, so a float lam gives a nearby rational
    as_float = colorful_probability(4, 0.05)
    assert abs(as_float - colorful_probability(4, Fraction(1, 20))) < Fraction(1, 10**12)


def test_colorful_probability_validates():
    with pytest.raises(ValueError):
        colorful_probability(4, Fraction(1, 3))  # 1/(k-1) is out of range
    with pytest.raises(ValueError):
        colorful_probability(4, 0)
    with pytest.raises(ValueError):
        colorful_probability(4, -0.1)


def test_biased_correction_forms():
    k, lam = 4, Fraction(1, 20)
    # a full palette including color 0
    full = biased_correction(k, lam, range(k))
    assert full == factorial(k) * lam ** (k - 1) * (1 - (k - 1) * lam) / 1
    # subsets with and without color 0 differ by the color-0 factor
    with_zero = biased_correction(k, lam, (0, 1))
    without = biased_correction(k, lam, (1, 2))
    assert with_zero == 2 * lam * (1 - 3 * lam)
    assert without == 2 * lam * lam
    # bitmask input means the same thing
    assert biased_correction(k, lam, 0b0011) == with_zero
    assert biased_correction(k, lam, 0b0110) == without
    # lam = 1/k collapses to the uniform subset weight
    assert biased_correction(4, Fraction(1, 4), (1, 2)) == Fraction(2, 16)


def test_effective_total_modes(triangle):
    g = rainbow(triangle, 3)
    canonical = build_tables(g, zero_root=True)
    t, p = effective_total(canonical)
    assert t == 3 and p == Fraction(6, 27)
    skipped = build_tables(g, skip_round=True, zero_root=False)
    t2, p2 = effective_total(skipped)
    assert p2 == p
    assert t2 == p * skipped.star_total + skipped.treelet_total


def _toy_report():
    sigs = census(3)
    tallies = {sigs[0]: 30, sigs[1]: 70}
    sigma = {s: 1 for s in sigs}
    return uniform_estimate(
        tallies, Fraction(50), sigma, 100, Fraction(1, 2), classes=sigs
    )


def test_uniform_estimate_formula():
    report = _toy_report()
    sigs = census(3)
    by_sig = report.by_signature()
    # count = total * hits / (trees * samples * probability)
    assert by_sig[sigs[0]].count == Fraction(50 * 30, 1 * 100) / Fraction(1, 2)
    assert by_sig[sigs[1]].count == Fraction(50 * 70, 1 * 100) / Fraction(1, 2)
    assert by_sig[sigs[0]].weight == Fraction(30, 100)
    assert report.mode == "uniform"
    assert report.samples == 100
    total = sum(r.count for r in report.rows)
    assert all(r.frequency == r.count / total for r in report.rows)
    # rows arrive ordered by falling count
    assert report.rows[0].count >= report.rows[1].count


def test_uniform_estimate_covers_census_zeros():
    sigs = census(4)
    tallies = {sigs[0]: 10}
    sigma = {sigs[0]: 2}
    report = uniform_estimate(
        tallies, Fraction(8), sigma, 10, Fraction(3, 32), classes=sigs
    )
    assert len(report.rows) == len(sigs)
    uncovered = [r for r in report.rows if not r.covered]
    assert len(uncovered) == len(sigs) - 1
    assert all(r.count == 0 and r.samples == 0 for r in uncovered)


def test_uniform_estimate_validates():
    with pytest.raises(ValueError):
        uniform_estimate({}, Fraction(1), {}, 0, Fraction(1, 2))
    sig = census(3)[0]
    with pytest.raises(MotifkitError):
        uniform_estimate({sig: 5}, Fraction(1), {sig: 0}, 5, Fraction(1, 2))


def test_relative_error_conventions():
    report = _toy_report()
    sigs = census(3)
    truth = {sigs[0]: report.by_signature()[sigs[0]].count, sigs[1]: 1}
    errs = relative_error(report, truth)
    assert errs[sigs[0]] == 0.0
    assert errs[sigs[1]] > 0
    zero_truth = {sigs[0]: 0, sigs[1]: 0}
    errs = relative_error(report, zero_truth)
    assert errs[sigs[0]] == inf and errs[sigs[1]] == inf
    # a zero estimate against zero truth is a perfect answer
    empty = uniform_estimate(
        {sigs[0]: 1}, Fraction(1), {sigs[0]: 1}, 1, Fraction(1, 2), classes=sigs
    )
    errs = relative_error(empty, {sigs[0]: 2, sigs[1]: 0})
    assert errs[sigs[1]] == 0.0
    # absent truth entries read as zero truth
    missing = relative_error(empty, {sigs[0]: 2})
    assert missing[sigs[1]] == 0.0


def test_accurate_classes():
    errs = {1: 0.1, 2: -0.2, 3: 0.3, 4: inf, 5: -1.0}
    assert accurate_classes(errs) == 2
    assert accurate_classes(errs, tol=0.35) == 3


def test_report_csv_round_trip(tmp_path):
    report = _toy_report()
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "signature_hex,count_estimate,frequency,samples,covered,mode"
    assert len(lines) == 1 + len(report.rows)
    assert all(line.endswith(",uniform") for line in lines[1:])


def test_truth_csv_round_trip(tmp_path):
    sigs = census(3)
    counts = {sigs[0]: Fraction(7, 2), sigs[1]: 12}
    path = tmp_path / "truth.csv"
    save_truth_csv(counts, path)
    back = load_truth_csv(path)
    assert back == {sigs[0]: Fraction(7, 2), sigs[1]: Fraction(12)}


def test_error_csv(tmp_path):
    report = _toy_report()
    sigs = census(3)
    truth = {s: 10 for s in sigs}
    path = tmp_path / "err.csv"
    write_error_csv(report, truth, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "signature_hex,count_estimate,truth_count,err"
    assert len(lines) == 3


def test_decimal_rendering_is_lossless_enough(tmp_path):
    # a huge exact count must not collapse to float notation
    sig = census(3)[0]
    big = Fraction(10**40 + 1)
    save_truth_csv({sig: big}, tmp_path / "t.csv")
    back = load_truth_csv(tmp_path / "t.csv")
    assert back[sig] == big


def test_class_estimate_fields():
    e = ClassEstimate(
        signature=7, count=Fraction(1), frequency=Fraction(1), samples=3, covered=True
    )
    assert e.weight is None
