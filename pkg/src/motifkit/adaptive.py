"""Adaptive shape-switching sampler: cover every graphlet class with a
fixed number of observations while steering away from classes already
covered.

A run advances in epochs.  Within an epoch every sample comes from one
treelet skeleton (uncolored stars act as an extra pseudo-shape on
round-skipped tables); when some class reaches the covering threshold
the epoch ends, per-class weights are re-evaluated, shapes whose draws
would almost surely land on covered classes are retired, and sampling
switches to the shape least likely to hit the covered set.

Weights are kept lazily: shape j adds (spanning trees of class i with
skeleton j) / t_j per draw, so w_i is a rational sum over per-shape
draw counters, evaluated only at epoch ends and finalization.  The
final estimate divides hit counts by these weights and then by the
colorful probability, putting it on the same scale as the uniform
estimator.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import MotifkitError
from .estimates import ClassEstimate, EstimateReport, _finish_rows, effective_total
from .graphlets import census, classify, count_connected_graphs, spanning_profile
from .sampling import GraphletSampler
from .treelets import star_skeleton


def covering_threshold(epsilon: float, delta: float, s: int) -> int:
    """Observations per class before it counts as covered.

    ceil((4 / epsilon^2) * ln(2 s / delta)) with s the number of
    isomorphism classes under consideration.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if s < 1:
        raise ValueError("s must be at least 1")
    return math.ceil(4 / epsilon**2 * math.log(2 * s / delta))


@dataclass
class AdaptiveState:
    """Mutable bookkeeping of one adaptive run."""

    threshold: int
    totals: dict  # skeleton -> Fraction, effective copy total (t_j, stars p*S)
    hits: dict = field(default_factory=dict)  # signature -> observations
    covered: set = field(default_factory=set)
    retired: set = field(default_factory=set)
    draws: dict = field(default_factory=dict)  # skeleton -> samples taken
    profiles: dict = field(default_factory=dict)  # signature -> {skeleton: trees}
    samples: int = 0

    def weight(self, sig: int) -> Fraction:
        row = self.profiles[sig]
        w = Fraction(0)
        for skel, n in self.draws.items():
            trees = row.get(skel, 0)
            if n and trees:
                w += Fraction(n) * trees / self.totals[skel]
        return w


def select_next_shape(state: AdaptiveState):
    """Shape whose next draw is least likely to land on a covered class.

    Retires shapes whose estimated covered-probability reaches
    1 - 1/threshold; returns None when nothing remains eligible.
    """
    bar = 1 - Fraction(1, state.threshold)
    density = {sig: Fraction(state.hits[sig]) / state.weight(sig) for sig in state.covered}
    scores = {}
    for skel, total in state.totals.items():
        if skel in state.retired:
            continue
        hit_mass = Fraction(0)
        for sig, dens in density.items():
            trees = state.profiles[sig].get(skel, 0)
            if trees:
                hit_mass += trees * dens
        score = hit_mass / total
        if score >= bar:
            state.retired.add(skel)
        else:
            scores[skel] = score
    if not scores:
        return None
    return min(scores, key=lambda skel: (scores[skel], skel))


def run_adaptive(
    tables,
    g,
    rng,
    *,
    cbar: int | None = None,
    eps: float | None = None,
    delta: float | None = None,
    max_samples: int | None = None,
    time_budget: float | None = None,
    progress=None,
    trace=None,
    sampler: GraphletSampler | None = None,
) -> EstimateReport:
    """Adaptive estimation of every k-graphlet class count.

    The covering threshold comes from cbar directly or from (eps,
    delta) with s counting all connected k-node classes.  At least one
    of max_samples and time_budget is required; progress, when given,
    receives one dict per epoch; trace, when given, receives every
    (skeleton, signature) draw.
    """
    k = tables.k
    if cbar is None:
        if eps is None or delta is None:
            raise ValueError("either cbar or both eps and delta are required")
        cbar = covering_threshold(eps, delta, count_connected_graphs(k))
    if cbar < 1:
        raise ValueError("covering threshold must be at least 1")
    if max_samples is None and time_budget is None:
        raise ValueError("a sample or time budget is required")

    t_eff, p = effective_total(tables)
    semantics = "balanced" if tables.skip_round else "canonical"
    totals = {skel: Fraction(t) for skel, t in tables.skeleton_totals.items() if t > 0}
    if tables.skip_round and tables.star_total:
        totals[star_skeleton(k)] = p * tables.star_total
    state = AdaptiveState(threshold=cbar, totals=totals)
    if totals:
        if sampler is None:
            sampler = GraphletSampler(tables, g, rng)
        # start from the most frequent shape; ties take the smallest skeleton
        current = min(totals, key=lambda skel: (-totals[skel], skel))
        classes = count_connected_graphs(k)
        epoch = 0
        deadline = time.monotonic() + time_budget if time_budget is not None else None

        def log_epoch():
            if progress is not None:
                progress(
                    {
                        "event": "epoch",
                        "epoch": epoch,
                        "shape": list(current),
                        "samples": state.samples,
                        "covered": len(state.covered),
                    }
                )

        while True:
            if max_samples is not None and state.samples >= max_samples:
                break
            if deadline is not None and time.monotonic() >= deadline:
                break
            nodes = sampler.sample_skeleton(current)
            state.samples += 1
            state.draws[current] = state.draws.get(current, 0) + 1
            sig = classify(g, nodes)
            if trace is not None:
                trace(current, sig)
            state.hits[sig] = state.hits.get(sig, 0) + 1
            if sig not in state.profiles:
                state.profiles[sig] = spanning_profile(sig, k, semantics)
                if state.profiles[sig].get(current, 0) <= 0:
                    raise MotifkitError("sampled class lacks trees of the drawn shape")
            if state.hits[sig] == cbar:
                state.covered.add(sig)
                log_epoch()
                epoch += 1
                if len(state.covered) >= classes:
                    break
                nxt = select_next_shape(state)
                if nxt is None:
                    break
                current = nxt
        log_epoch()

    entries = []
    reported = set(state.hits)
    if k <= 8:
        reported.update(census(k))
    for sig in sorted(reported):
        hits = state.hits.get(sig, 0)
        if hits:
            w = state.weight(sig)
            count = Fraction(hits) / w / p
        else:
            w = None
            count = Fraction(0)
        entries.append(
            ClassEstimate(
                signature=sig,
                count=count,
                frequency=Fraction(0),
                samples=hits,
                covered=sig in state.covered,
                weight=w,
            )
        )
    return EstimateReport(
        mode="ags",
        treelet_total=t_eff,
        probability=p,
        samples=state.samples,
        rows=_finish_rows(entries),
    )
