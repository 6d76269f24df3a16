"""Slot-level Monte Carlo simulator for zero-wait status updating.

One or two sensors serve updates continuously: each sensor regenerates an
update (timestamped with the current slot) the moment its previous one is
delivered, so no idle or queueing time exists.  Per slot the monitor ages
by one; a delivery at slot t carrying generation timestamp g resets the age
to t - g + 1 iff it is fresh, meaning strictly newer than the timestamp in
force.  Two deliveries in one slot resolve to the one with the smaller age;
an exact timestamp tie resolves by a fair coin, and the loser counts as
stale.

Sampling convention: the recorded per-slot age sequence is the value after
the slot's deliveries are applied, which makes a lone deterministic queue
cycle through T+1 .. 2T (mean (3T+1)/2).  Peaks are the pre-delivery age at
slots where a fresh update lands, and the average peak age divides the peak
sum by the fresh-update count.  The initial age is 2, as if a fresh update
had arrived at slot 0; a configurable warm-up prefix is excluded from every
statistic, which makes the initial state irrelevant.

Reproducibility: each round derives its seed from the master seed, and each
round runs three independent streams (sensor A, sensor B, tie coin), so
results are bit-identical for a fixed master seed regardless of thread
count or scheduling.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import stdev

from .model import (
    DETERMINISTIC,
    GEOMETRIC,
    AoiMetrics,
    DualQueueSpec,
    InvalidParameter,
    ServiceModel,
    SimConfig,
    StateKey,
    derive_round_seed,
    derive_stream_seed,
    validate,
)


def sample_service(model: ServiceModel, rng: random.Random) -> int:
    """One service duration in slots: constant T, or geometric on {1, 2, ...}
    with P(s) = p (1-p)^(s-1) drawn by inversion."""
    if model.kind == DETERMINISTIC:
        return model.T
    if model.kind == GEOMETRIC:
        if model.p >= 1.0:
            return 1
        u = rng.random()
        return 1 + int(math.log(1.0 - u) / math.log(1.0 - model.p))
    raise InvalidParameter("model", model.kind, "geometric | deterministic")


def apply_deliveries(
    current_aoi: int,
    deliveries: list[tuple[int, int]],
    t: int,
    rng: random.Random,
) -> tuple[int, list[bool]]:
    """Process the deliveries of one slot against the pre-delivery age.

    ``deliveries`` holds (generation_time, source) pairs.  A delivery is a
    freshness candidate iff its age t - g is strictly below ``current_aoi``.
    Among candidates the smallest age wins; an exact generation-time tie is
    broken by a fair coin.  Returns the post-slot age (the winner's age plus
    one, or ``current_aoi`` + 1 when nothing fresh arrived) and one fresh
    flag per delivery (at most one True).
    """
    threshold = t - current_aoi  # candidate iff g > threshold
    flags = [False] * len(deliveries)
    best_gen = None
    for g, _src in deliveries:
        if g > threshold and (best_gen is None or g > best_gen):
            best_gen = g
    if best_gen is None:
        return current_aoi + 1, flags
    winners = [idx for idx, (g, _src) in enumerate(deliveries) if g == best_gen]
    pick = winners[0] if len(winners) == 1 else winners[rng.randrange(len(winners))]
    flags[pick] = True
    return t - best_gen + 1, flags


@dataclass
class AoiTrace:
    """Per-slot record of one simulated round.

    ``rows`` hold (t, aoi, delivered_a, delivered_b, valid_a, valid_b) with
    ``aoi`` recorded after the slot's deliveries; the first ``warmup_slots``
    rows belong to the warm-up region and are kept, flagged by position
    rather than dropped.
    """

    rows: list[tuple[int, int, int, int, int, int]] = field(default_factory=list)
    warmup_slots: int = 0

    def to_text(self) -> str:
        out = [f"# warmup_slots={self.warmup_slots}"]
        out.append("t,aoi,delivered_a,delivered_b,valid_a,valid_b")
        out.extend(",".join(str(v) for v in row) for row in self.rows)
        return "\n".join(out) + "\n"


def _as_dual(spec: DualQueueSpec | ServiceModel) -> tuple[ServiceModel, ServiceModel | None, int]:
    if isinstance(spec, ServiceModel):
        if not spec.is_discrete:
            raise InvalidParameter("spec", spec.kind, "geometric | deterministic")
        return spec, None, 0
    validate(spec)
    return spec.queue_a, spec.queue_b, spec.effective_dd_offset


def _period_length(queue_a: ServiceModel, queue_b: ServiceModel | None) -> int:
    """Bookkeeping period: the deterministic sensor's service period, or the
    nearest slot equivalent of the slower rate when no deterministic sensor
    exists."""
    ref = queue_b if queue_b is not None else queue_a
    if ref.kind == DETERMINISTIC:
        return ref.T
    return max(1, round(1.0 / ref.service_rate))


@dataclass
class _RoundTotals:
    aoi_sum: int = 0
    slots: int = 0
    peak_sum: int = 0
    valid: int = 0
    obsolete: int = 0
    periods: int = 0
    state_counts: dict[StateKey, int] | None = None

    def metrics(self) -> AoiMetrics:
        deliveries = self.valid + self.obsolete
        freq = None
        if self.state_counts is not None and self.periods > 0:
            freq = {
                key: count / self.periods for key, count in sorted(self.state_counts.items())
            }
        return AoiMetrics(
            avg_aoi=self.aoi_sum / self.slots,
            avg_paoi=self.peak_sum / self.valid if self.valid else float("nan"),
            valid_updates_per_period=self.valid / self.periods,
            obsolete_ratio=self.obsolete / deliveries if deliveries else 0.0,
            state_frequency=freq,
        )


def _run_round(
    spec: DualQueueSpec | ServiceModel,
    config: SimConfig,
    round_seed: int,
    trace: AoiTrace | None = None,
) -> _RoundTotals:
    queue_a, queue_b, offset = _as_dual(spec)
    period = _period_length(queue_a, queue_b)
    track_states = queue_b is not None and queue_b.kind == DETERMINISTIC

    rng_a = random.Random(derive_stream_seed(round_seed, 0))
    rng_b = random.Random(derive_stream_seed(round_seed, 1))
    rng_tie = random.Random(derive_stream_seed(round_seed, 2))

    warm_slots = config.warmup_periods * period
    total_slots = (config.warmup_periods + config.periods_per_round) * period

    gen_a = 0
    next_a = sample_service(queue_a, rng_a)
    if queue_b is not None:
        both_det = queue_a.kind == DETERMINISTIC and queue_b.kind == DETERMINISTIC
        gen_b = offset if both_det else 0
        next_b = gen_b + sample_service(queue_b, rng_b)
    else:
        gen_b = 0
        next_b = total_slots + 1  # never fires

    totals = _RoundTotals(state_counts={} if track_states else None)
    aoi = 2  # age at slot 1, as if a fresh update arrived at slot 0
    prev_k = 0
    cur_k = 0
    for t in range(1, total_slots + 1):
        da = t == next_a
        db = t == next_b
        warm = t <= warm_slots
        if da or db:
            deliveries: list[tuple[int, int]] = []
            if da:
                deliveries.append((gen_a, 0))
            if db:
                deliveries.append((gen_b, 1))
            new_aoi, flags = apply_deliveries(aoi, deliveries, t, rng_tie)
            if not warm:
                fresh = sum(flags)
                totals.valid += fresh
                totals.obsolete += len(deliveries) - fresh
                if fresh:
                    totals.peak_sum += aoi
            if da:
                gen_a = t
                next_a = t + sample_service(queue_a, rng_a)
                cur_k += 1
            if db:
                gen_b = t
                next_b = t + sample_service(queue_b, rng_b)
        else:
            new_aoi = aoi + 1
            flags = []
        if not warm:
            totals.aoi_sum += new_aoi
            totals.slots += 1
        if trace is not None:
            va = vb = 0
            if da and db:
                va, vb = int(flags[0]), int(flags[1])
            elif da:
                va = int(flags[0])
            elif db:
                vb = int(flags[0])
            trace.rows.append((t, new_aoi, int(da), int(db), va, vb))
        if t % period == 0:
            if not warm:
                totals.periods += 1
                if track_states:
                    key = StateKey(prev_k, cur_k)
                    totals.state_counts[key] = totals.state_counts.get(key, 0) + 1
            prev_k = cur_k
            cur_k = 0
        aoi = new_aoi
    return totals


def run(
    spec: DualQueueSpec | ServiceModel,
    config: SimConfig,
    round_seeds: list[int] | None = None,
) -> list[AoiMetrics]:
    """Simulate every round sequentially and return per-round metrics.

    Round r uses ``derive_round_seed(config.master_seed, r)`` unless
    explicit seeds are supplied (tests use identical seeds to force
    degenerate replication).
    """
    seeds = round_seeds or [
        derive_round_seed(config.master_seed, r) for r in range(config.rounds)
    ]
    return [_run_round(spec, config, seed).metrics() for seed in seeds]


def run_trace(
    spec: DualQueueSpec | ServiceModel, config: SimConfig, round_index: int = 0
) -> tuple[AoiMetrics, AoiTrace]:
    """Simulate a single round and keep the full per-slot trace."""
    queue_a, queue_b, _ = _as_dual(spec)
    period = _period_length(queue_a, queue_b)
    trace = AoiTrace(warmup_slots=config.warmup_periods * period)
    totals = _run_round(
        spec, config, derive_round_seed(config.master_seed, round_index), trace=trace
    )
    return totals.metrics(), trace


def estimate_with_ci(
    spec: DualQueueSpec | ServiceModel,
    config: SimConfig,
    threads: int = 1,
    round_seeds: list[int] | None = None,
) -> AoiMetrics:
    """Mean metrics over rounds with the standard error of the round means.

    Rounds may execute on a thread pool; per-round results are combined in
    round order, so the outcome is bit-identical for any thread count.
    """
    seeds = round_seeds or [
        derive_round_seed(config.master_seed, r) for r in range(config.rounds)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rounds = list(pool.map(lambda s: _run_round(spec, config, s), seeds))
    else:
        rounds = [_run_round(spec, config, s) for s in seeds]

    aois = [r.aoi_sum / r.slots for r in rounds]
    paois = [r.peak_sum / r.valid for r in rounds if r.valid]
    n = len(rounds)
    avg_aoi = sum(aois) / n
    avg_paoi = sum(paois) / len(paois) if paois else float("nan")
    stderr_aoi = stdev(aois) / math.sqrt(n) if n >= 2 else None
    stderr_paoi = (
        stdev(paois) / math.sqrt(len(paois)) if len(paois) >= 2 else None
    )
    valid = sum(r.valid for r in rounds)
    obsolete = sum(r.obsolete for r in rounds)
    periods = sum(r.periods for r in rounds)
    freq = None
    if rounds[0].state_counts is not None:
        pooled: dict[StateKey, int] = {}
        for r in rounds:
            for key, count in r.state_counts.items():
                pooled[key] = pooled.get(key, 0) + count
        freq = {key: count / periods for key, count in sorted(pooled.items())}
    return AoiMetrics(
        avg_aoi=avg_aoi,
        avg_paoi=avg_paoi,
        valid_updates_per_period=valid / periods,
        obsolete_ratio=obsolete / (valid + obsolete) if valid + obsolete else 0.0,
        state_frequency=freq,
        stderr_aoi=stderr_aoi,
        stderr_paoi=stderr_paoi,
    )


def empirical_state_frequencies(
    spec: DualQueueSpec, config: SimConfig, threads: int = 1
) -> dict[StateKey, float]:
    """Observed frequency of each (previous, current) completion-count pair
    over period-aligned post-warmup periods; sums to 1."""
    queue_b = spec.queue_b if isinstance(spec, DualQueueSpec) else None
    if queue_b is None or queue_b.kind != DETERMINISTIC:
        raise InvalidParameter("spec", "queue_b", "deterministic queue_b required")
    return estimate_with_ci(spec, config, threads=threads).state_frequency
