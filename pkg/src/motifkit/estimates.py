"""Turn raw sample tallies into count estimates and accuracy reports.

Everything here is exact rational arithmetic: coloring probabilities
are Fractions, per-class estimates are Fractions, and values become
decimal text only when a CSV row is rendered.  Identical tallies
therefore produce identical output bytes.

A note on biased colorings: the stored lambda is a binary float, and
Fraction(lambda) converts that float exactly, so "exact" means exact
with respect to the lambda actually used by the coloring, not to the
decimal literal on the command line.
"""

import csv
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

from .errors import MotifkitError
from .graphlets import signature_hex


def _lam_fraction(k: int, lam) -> Fraction:
    if k < 2:
        raise ValueError("biased coloring needs k >= 2")
    lam = Fraction(lam)
    if not 0 < lam < Fraction(1, k - 1):
        raise ValueError("lambda must lie in (0, 1/(k-1))")
    return lam


def colorful_probability(k: int, lam=None) -> Fraction:
    """Chance that a fixed set of k nodes receives all k colors.

    The uniform coloring gives k!/k^k.  Under the biased coloring,
    color 0 has probability 1-(k-1)*lam and every other color lam, so a
    rainbow assignment exists in k! orders each carrying weight
    lam^(k-1) * (1-(k-1)*lam).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if lam is None:
        return Fraction(math.factorial(k), k**k)
    lam = _lam_fraction(k, lam)
    return math.factorial(k) * lam ** (k - 1) * (1 - (k - 1) * lam)


def biased_correction(k: int, lam, colors=None) -> Fraction:
    """Probability that a fixed node set becomes colorful under the
    biased coloring: all of the given colors, each exactly once.

    colors may be an iterable of color ids or a bitmask; omitted means
    the full k-color set.  With j colors the value is
    j! * lam^(size of colors minus color 0) * (1-(k-1)*lam) when color 0
    is in the set, and j! * lam^j when it is not.
    """
    lam = _lam_fraction(k, lam)
    if colors is None:
        mask = (1 << k) - 1
    elif isinstance(colors, int):
        mask = colors
    else:
        mask = 0
        for c in colors:
            if not 0 <= c < k:
                raise ValueError("color id out of range")
            if mask >> c & 1:
                raise ValueError("repeated color id")
            mask |= 1 << c
    if mask <= 0 or mask >> k:
        raise ValueError("color set out of range")
    j = mask.bit_count()
    p = Fraction(math.factorial(j))
    if mask & 1:
        p *= lam ** (j - 1) * (1 - (k - 1) * lam)
    else:
        p *= lam**j
    return p


def effective_total(tables) -> tuple[Fraction, Fraction]:
    """Copy total the estimator divides by, and the colorful probability.

    Round-skipped tables hold stars outside the table as an uncolored
    total, so the commensurable pool size is p*S plus the non-star
    treelet total; full tables use their treelet total directly.
    """
    p = colorful_probability(tables.k, tables.lam)
    if tables.skip_round:
        return p * tables.star_total + tables.treelet_total, p
    return Fraction(tables.treelet_total), p


# ---------------------------------------------------------------------------
# reports


@dataclass
class ClassEstimate:
    signature: int
    count: Fraction
    frequency: Fraction
    samples: int
    covered: bool
    weight: Fraction | None = None


@dataclass
class EstimateReport:
    mode: str
    treelet_total: Fraction
    probability: Fraction
    samples: int
    rows: list[ClassEstimate] = field(default_factory=list)

    def by_signature(self) -> dict:
        return {row.signature: row for row in self.rows}


def _finish_rows(entries) -> list[ClassEstimate]:
    """Fill frequencies and fix the row order: big classes first."""
    total = sum(e.count for e in entries)
    for e in entries:
        e.frequency = e.count / total if total else Fraction(0)
    return sorted(entries, key=lambda e: (-e.count, e.signature))


def uniform_estimate(tallies, t, sigma, samples: int, p, *, classes=()) -> EstimateReport:
    """Estimates from uniform sampling: per class, hits scaled by the
    copy total over (spanning trees * draws * colorful probability).

    sigma maps signature to its spanning-tree count; classes may list
    extra signatures to report as zero rows.
    """
    if samples <= 0:
        raise ValueError("at least one sample is required")
    t = Fraction(t)
    p = Fraction(p)
    entries = []
    for sig in sorted(set(tallies) | set(classes)):
        hits = int(tallies.get(sig, 0))
        if hits:
            trees = int(sigma.get(sig, 0))
            if trees <= 0:
                raise MotifkitError(
                    "class %s observed but has no spanning-tree weight" % signature_hex(sig)
                )
            count = t * hits / (trees * samples * p)
        else:
            count = Fraction(0)
        entries.append(
            ClassEstimate(
                signature=sig,
                count=count,
                frequency=Fraction(0),
                samples=hits,
                covered=hits > 0,
                weight=Fraction(hits, samples),
            )
        )
    return EstimateReport(
        mode="uniform",
        treelet_total=t,
        probability=p,
        samples=samples,
        rows=_finish_rows(entries),
    )


def relative_error(report: EstimateReport, truth) -> dict:
    """Per-class relative error against ground truth.

    A class the run never estimated scores -1; estimating a class whose
    true count is zero scores +inf; agreeing on zero scores 0.
    """
    est = {row.signature: row.count for row in report.rows}
    errs = {}
    for sig in set(est) | set(truth):
        e = Fraction(est.get(sig, 0))
        t = Fraction(truth.get(sig, 0))
        if t > 0:
            errs[sig] = float(e / t - 1)
        elif e > 0:
            errs[sig] = math.inf
        else:
            errs[sig] = 0.0
    return errs


def accurate_classes(errs, tol: float = 0.25) -> int:
    """How many classes the run got within the given relative error."""
    return sum(1 for e in errs.values() if abs(e) <= tol)


# ---------------------------------------------------------------------------
# CSV rendering

_REPORT_FIELDS = ("signature_hex", "count_estimate", "frequency", "samples", "covered", "mode")


def _decimal_text(value: Fraction) -> str:
    """Decimal rendering that never squeezes through a float.

    Integers print verbatim; other rationals get enough significant
    digits to cover the integer part plus a generous tail.
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    digits = max(0, value.numerator.bit_length() - value.denominator.bit_length())
    with localcontext() as ctx:
        ctx.prec = digits * 302 // 1000 + 30
        return str(Decimal(value.numerator) / Decimal(value.denominator))


def _float_text(value) -> str:
    return "%.12g" % float(value)


def write_report_csv(report: EstimateReport, path) -> None:
    with open(path, "wt", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(_REPORT_FIELDS)
        for row in report.rows:
            out.writerow(
                [
                    signature_hex(row.signature),
                    _decimal_text(row.count),
                    _float_text(row.frequency),
                    row.samples,
                    "true" if row.covered else "false",
                    report.mode,
                ]
            )


def write_error_csv(report: EstimateReport, truth, path) -> None:
    errs = relative_error(report, truth)
    est = {row.signature: row.count for row in report.rows}
    with open(path, "wt", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(("signature_hex", "count_estimate", "truth_count", "err"))
        for sig in sorted(errs):
            out.writerow(
                [
                    signature_hex(sig),
                    _decimal_text(est.get(sig, Fraction(0))),
                    _decimal_text(Fraction(truth.get(sig, 0))),
                    _float_text(errs[sig]),
                ]
            )


def save_truth_csv(counts, path) -> None:
    """Ground-truth counts in the report schema, mode column "oracle"."""
    entries = [
        ClassEstimate(sig, Fraction(c), Fraction(0), 0, True)
        for sig, c in counts.items()
    ]
    report = EstimateReport(
        mode="oracle",
        treelet_total=Fraction(0),
        probability=Fraction(0),
        samples=0,
        rows=_finish_rows(entries),
    )
    write_report_csv(report, path)


def load_truth_csv(path) -> dict:
    from .graphlets import signature_from_hex

    counts = {}
    with open(path, "rt", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            counts[signature_from_hex(row["signature_hex"])] = Fraction(row["count_estimate"])
    return counts
