"""Exact combinatorial engine for the Geo-D per-period state analysis.

Everything in this module runs in exact integer / rational arithmetic.  It
serves four purposes:

* verify the nested-sum binomial identities used by the closed-form
  derivation, by brute force over uniform compositions;
* compute exact per-state expectations (peak sum, fresh-update count, AoI
  area) by reconstructing the slot-by-slot AoI staircase for every
  equiprobable composition pair, under the same strict freshness and
  tie-break rules the simulator implements;
* evaluate the two published variants of the tabulated per-state
  expectations (the summary table and the step-by-step derivation text),
  which disagree with each other for several state families;
* reassemble the average AoI and peak AoI from per-state expectations and
  adjudicate them against the closed forms.

Ground-truth ordering when sources disagree: enumeration here and the slot
simulator (which agree with each other) outrank the closed forms, which
outrank the derivation-text rows, which outrank nothing.  The plain AoI
closed form is confirmed exactly; the peak-AoI closed form inherits a small
error from the tabulated (k, 1) rows (see ``adjudication_report``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

from .model import DomainError, InvalidParameter, ResourceLimit, StateKey

DEFAULT_CAP = 10_000_000

VARIANT_TABLE = "table"
VARIANT_DERIVATION = "derivation"

SOURCE_ORACLE = "oracle"
SOURCE_TABLE = VARIANT_TABLE
SOURCE_DERIVATION = VARIANT_DERIVATION


class Composition(NamedTuple):
    """Ordered positive parts with sum <= horizon; the slack is the
    remainder.  Conditioned on the number of completions in a period, the
    completion gaps are uniform over these tuples."""

    parts: tuple[int, ...]
    horizon: int

    @property
    def remainder(self) -> int:
        return self.horizon - sum(self.parts)


@dataclass(frozen=True)
class StateExpectations:
    """Exact conditional expectations for one period state: peak sum,
    fresh-update count, and per-slot AoI area over the period."""

    key: StateKey
    e_a: Fraction
    e_v: Fraction
    e_q: Fraction


def _check_cap(size: int, cap: int) -> None:
    if size > cap:
        raise ResourceLimit(f"enumeration size {size} exceeds cap {cap}")


def enumerate_compositions(n: int, T: int, cap: int = DEFAULT_CAP) -> Iterator[Composition]:
    """Yield every ordered tuple of n positive integers with sum <= T,
    exactly C(T, n) of them; n = 0 yields the single empty tuple."""
    if not 0 <= n <= T:
        raise InvalidParameter("n", n, f"[0, {T}]")
    _check_cap(math.comb(T, n), cap)
    yield from (Composition(parts, T) for parts in _raw_compositions(n, T))


def _raw_compositions(n: int, T: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    prefix: list[int] = []

    def rec(budget: int, left: int) -> Iterator[tuple[int, ...]]:
        if left == 0:
            yield tuple(prefix)
            return
        for x in range(1, budget - (left - 1) + 1):
            prefix.append(x)
            yield from rec(budget - x, left - 1)
            prefix.pop()

    yield from rec(T, n)


_COMP_CACHE: dict[tuple[int, int], list[tuple[int, ...]]] = {}


def _compositions_list(n: int, T: int, cap: int) -> list[tuple[int, ...]]:
    key = (n, T)
    if key not in _COMP_CACHE:
        _check_cap(math.comb(T, n), cap)
        _COMP_CACHE[key] = list(_raw_compositions(n, T))
    return _COMP_CACHE[key]


KIND_COUNT = "count"
KIND_LINEAR = "linear"
KIND_SQUARE = "square"
KIND_CROSS = "cross"


def _bound(i: int, n: int, T: int, prefix: tuple[int, ...]) -> int:
    """Upper limit of the i-th summation index given the outer indices:
    T - (n - i) - sum(prefix)."""
    return T - (n - i) - sum(prefix)


def nested_sum_oracle(
    kind: str,
    n: int,
    T: int,
    i: int = 1,
    j: int = 2,
    cap: int = DEFAULT_CAP,
) -> tuple[int, int]:
    """Brute-force nested sum over compositions and its closed binomial form.

    kind = "count":  sum of 1 over the inner sums starting at level i, summed
    over all outer prefixes; closed form is the matching sum of
    C(b_i + n - i, n - i + 1) over prefixes (for i = 1 this is C(T, n)).
    kind = "linear": sum of x_i  -> C(T+1, n+1), independent of i.
    kind = "square": sum of x_i^2 -> C(T+2, n+2) + C(T+1, n+2).
    kind = "cross":  sum of x_i x_j (i != j) -> C(T+2, n+2).

    Returns (brute, closed); the two must be equal.
    """
    if not 1 <= n <= T:
        raise InvalidParameter("n", n, f"[1, {T}]")
    if not 1 <= i <= n:
        raise InvalidParameter("i", i, f"[1, {n}]")
    comps = _compositions_list(n, T, cap)
    if kind == KIND_COUNT:
        brute = 0
        closed = 0
        for prefix, count in _prefix_counts(i, n, T, cap):
            brute += count
            closed += math.comb(_bound(i, n, T, prefix) + n - i, n - i + 1)
        return brute, closed
    if kind == KIND_LINEAR:
        return sum(c[i - 1] for c in comps), math.comb(T + 1, n + 1)
    if kind == KIND_SQUARE:
        return (
            sum(c[i - 1] ** 2 for c in comps),
            math.comb(T + 2, n + 2) + math.comb(T + 1, n + 2),
        )
    if kind == KIND_CROSS:
        if not 1 <= j <= n or i == j:
            raise InvalidParameter("j", j, f"[1, {n}] with j != i")
        return sum(c[i - 1] * c[j - 1] for c in comps), math.comb(T + 2, n + 2)
    raise InvalidParameter("kind", kind, "count | linear | square | cross")


def _prefix_counts(
    i: int, n: int, T: int, cap: int
) -> Iterator[tuple[tuple[int, ...], int]]:
    """For every admissible outer prefix (x_1 .. x_{i-1}), the brute-force
    count of inner tuples (x_i .. x_n)."""
    inner = n - i + 1
    if i == 1:
        yield (), len(_compositions_list(n, T, cap))
        return
    for prefix in _compositions_list(i - 1, T - inner, cap):
        budget = T - sum(prefix)
        yield prefix, len(_compositions_list(inner, budget, cap))


@dataclass(frozen=True)
class LemmaCheck:
    kind: str
    n: int
    T: int
    i: int
    j: int
    brute: int
    closed: int

    @property
    def ok(self) -> bool:
        return self.brute == self.closed


def verify_nested_sums(max_T: int, cap: int = DEFAULT_CAP) -> list[LemmaCheck]:
    """Exhaustively check all four identities for 1 <= n <= T <= max_T,
    every index i (and ordered pair (i, j) for the cross sum)."""
    checks: list[LemmaCheck] = []
    for T in range(1, max_T + 1):
        for n in range(1, T + 1):
            for i in range(1, n + 1):
                for kind in (KIND_COUNT, KIND_LINEAR, KIND_SQUARE):
                    brute, closed = nested_sum_oracle(kind, n, T, i=i, cap=cap)
                    checks.append(LemmaCheck(kind, n, T, i, 0, brute, closed))
                for j in range(1, n + 1):
                    if j == i:
                        continue
                    brute, closed = nested_sum_oracle(
                        KIND_CROSS, n, T, i=i, j=j, cap=cap
                    )
                    checks.append(LemmaCheck(KIND_CROSS, n, T, i, j, brute, closed))
    return checks


def oracle_state_expectations(
    key: StateKey, T: int, cap: int = DEFAULT_CAP
) -> StateExpectations:
    """Exact per-state expectations by staircase reconstruction.

    For each equiprobable pair (previous-period gaps Y, current-period gaps
    X) the period's AoI staircase is replayed slot by slot: a delivery is
    fresh iff its generation timestamp is strictly newer than the one in
    force, simultaneous deliveries resolve to the freshest one, and an
    equal-timestamp tie resolves by a fair coin whose two branches coincide
    in every tracked quantity.  e_q sums the per-slot AoI over the T slots,
    e_a sums the peaks of fresh updates, e_v counts fresh updates.

    The previous period pins the boundary conditions: for k >= 1 the
    freshest timestamp at the period start is the (k-1)-th completion time
    and the in-flight update of the geometric sensor was generated at its
    k-th completion time (possibly exactly on the boundary); for k = 0 both
    are at least a full period old.
    """
    k, n = key
    if not (0 <= k <= T and 0 <= n <= T):
        raise InvalidParameter("key", tuple(key), f"0 <= k, n <= {T}")
    _check_cap(math.comb(T, k) * math.comb(T, n), cap)
    ys = _compositions_list(k, T, cap)
    xs = _compositions_list(n, T, cap)
    sum_a = 0
    sum_v = 0
    sum_q = 0
    for y in ys:
        y_used = sum(y)
        if k >= 1:
            u0 = -(y[-1] + (T - y_used))
            first_gen = -(T - y_used)
        else:
            u0 = -T
            first_gen = -T - 1
        for x in xs:
            times: list[int] = []
            gens: list[int] = []
            acc = 0
            g = first_gen
            for part in x:
                acc += part
                times.append(acc)
                gens.append(g)
                g = acc
            u = u0
            ai = 0
            for s in range(1, T + 1):
                aoi = s - u
                sum_q += aoi
                best = None
                if ai < n and times[ai] == s:
                    best = gens[ai]
                    ai += 1
                if s == T:
                    best = 0 if best is None else max(best, 0)
                if best is not None and best > u:
                    sum_v += 1
                    sum_a += aoi
                    u = best
    count = len(ys) * len(xs)
    return StateExpectations(
        key=StateKey(k, n),
        e_a=Fraction(sum_a, count),
        e_v=Fraction(sum_v, count),
        e_q=Fraction(sum_q, count),
    )


def oracle_all_states(T: int, cap: int = DEFAULT_CAP) -> dict[StateKey, StateExpectations]:
    # the full state sweep enumerates sum_{k,n} C(T,k) C(T,n) = 4^T pairs
    _check_cap(4**T, cap)
    return {
        StateKey(k, n): oracle_state_expectations(StateKey(k, n), T, cap)
        for k in range(T + 1)
        for n in range(T + 1)
    }


def _table_peaks(k: int, n: int, T: int) -> Fraction:
    if k == 0 and n <= 1:
        return Fraction(2 * T)
    if k == 0:
        return T + Fraction(2 * (n - 1) * (T + 1), n + 1)
    if n == 0:
        return Fraction(k * (T - 1) + 3 * T + 1, k + 1)
    if n == 1:
        return Fraction((3 * T - 1) * (3 * T + 1 + k * (T - 1)), 2 * T * (k + 1))
    return Fraction(k * ((2 * n - 1) * T - 3) + n * (5 * T + 3) + 2 * T, (k + 1) * (n + 1))


def _derivation_peaks(k: int, n: int, T: int) -> Fraction:
    if k >= 1 and n == 1:
        # composed from the printed sub-case expectations:
        # (1 - 1/T) (E[A1|separate] + E[A2|separate]) + (1/T) E[A1|simultaneous]
        a1_sep = Fraction(k * (T - 1) + 5 * T - 3, 2 * (k + 1))
        a2_sep = Fraction(T - 1, 2) + Fraction(T - 1, T) * (
            T - Fraction(k * (T + 1), T * (k + 1))
        )
        a1_sim = 2 - Fraction(k * (T + 1), T * (k + 1))
        return Fraction(T - 1, T) * (a1_sep + a2_sep) + Fraction(1, T) * a1_sim
    return _table_peaks(k, n, T)


def _shared_valid(k: int, n: int, T: int) -> Fraction:
    if n == 0 or (k == 0 and n == 1):
        return Fraction(1)
    if k == 0:
        return Fraction(n - 1)
    if n == 1:
        return 2 - Fraction(1, T)
    return Fraction(n)


def _table_area(k: int, n: int, T: int) -> Fraction:
    if k == 0 and n <= 1:
        return Fraction(T * (3 * T + 1), 2)
    if k == 0:
        return Fraction((T + 1) * (-2 + 5 * T + n * (2 + 4 * T)), (n + 1) * (n + 2))
    if n == 0:
        return Fraction(T * (3 + 5 * T + k * (T - 1)), 2 * (k + 1))
    if n == 1:
        return Fraction((4 + k) * T * T - (k - 3) * T + 1, 2 * (k + 1))
    return Fraction(
        (T + 1) * (k * (2 * n * T + T - 6) + n * (5 * T + 3) + 7 * T),
        (k + 1) * (n + 1) * (n + 2),
    )


def _derivation_area(k: int, n: int, T: int) -> Fraction:
    if k == 0 and n <= 1:
        return Fraction(T * (3 * T + 1), 2)
    if k == 0:
        return Fraction(
            -n * n + n * (8 * T * T + 13 * T + 2) + 10 * T * T + 8 * T - 4,
            2 * (n + 1) * (n + 2),
        )
    if n == 0:
        return Fraction(T * ((k + 5) * T + 4), 2 * (k + 1))
    if n == 1:
        return Fraction(
            2 * k * k * T + k * T + k + 6 * T * T + 7 * T + 3, 4 * k + 4
        )
    # transcribed as printed, including the garbled "-4^2" token (= -16)
    inner_k = n * n + n * (-16 - 5 * T + 2) - 2 * T * T + 8 * T + 12
    inner_n = 10 * T * T + 17 * T + 4 - 2 * T * (7 * T + 8)
    return Fraction(
        -(k * inner_k + n * n - n * inner_n), 2 * (k + 1) * (n + 1) * (n + 2)
    )


def table_expectations(key: StateKey, T: int, variant: str) -> StateExpectations:
    """Evaluate one published per-state row exactly.

    ``variant`` selects between the two printings: "table" (the compact
    summary rows) and "derivation" (the totals of the step-by-step text).
    They coincide for the peak and valid columns except the (k, 1) peak row,
    and disagree on four area rows.  Raises DomainError outside a row's
    stated range (keys beyond T, or the k >= 1, n = 1 split at T = 1 which
    collapses its sub-cases).
    """
    k, n = key
    if variant not in (VARIANT_TABLE, VARIANT_DERIVATION):
        raise InvalidParameter("variant", variant, "table | derivation")
    if not (0 <= k <= T and 0 <= n <= T):
        raise DomainError(f"state ({k}, {n}) outside [0, {T}]^2")
    if k >= 1 and n == 1 and T < 2:
        raise DomainError("the (k, 1) rows assume T >= 2")
    if variant == VARIANT_TABLE:
        peaks, area = _table_peaks(k, n, T), _table_area(k, n, T)
    else:
        peaks, area = _derivation_peaks(k, n, T), _derivation_area(k, n, T)
    return StateExpectations(
        key=StateKey(k, n), e_a=peaks, e_v=_shared_valid(k, n, T), e_q=area
    )


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    return Fraction(p)  # floats convert exactly (binary value)


def state_probability_exact(key: StateKey, p: Fraction, T: int) -> Fraction:
    k, n = key
    q = 1 - p
    return (
        math.comb(T, k)
        * p**k
        * q ** (T - k)
        * math.comb(T, n)
        * p**n
        * q ** (T - n)
    )


def closed_form_aoi_exact(p, T: int) -> Fraction:
    """The average-AoI closed form in exact rational arithmetic."""
    p = _as_fraction(p)
    if T == 1 or p == 1:
        return Fraction(2)
    q = 1 - p
    qT = q**T
    q2T = qT * qT
    return (
        2 / p
        + (qT / p) * (-1 + Fraction(2, T) - 3 / (p * T))
        + (q2T / p) * (2 - Fraction(2, T) + 3 / (p * T))
    )


def closed_form_paoi_exact(p, T: int) -> Fraction:
    """The tabulated peak-AoI closed form in exact rational arithmetic."""
    p = _as_fraction(p)
    if T == 1 or p == 1:
        return Fraction(2)
    q = 1 - p
    qTm1 = q ** (T - 1)
    q2Tm1 = q ** (2 * T - 1)
    den = q2Tm1 + qTm1 * (T - 1) * p + T * p
    num = (
        2 * T
        + q2Tm1 * (2 / p - (p / 2 - 2) * (T - 1))
        + qTm1 * (2 - 2 / p - p / 2 - T * p / 2 + T * T * p)
    )
    return num / den


def reconstruct_averages(
    p, T: int, source: str = SOURCE_ORACLE, cap: int = DEFAULT_CAP
) -> tuple[Fraction, Fraction]:
    """(average AoI, average peak AoI) reassembled from per-state rows.

    Average AoI is the probability-weighted per-state area divided by the
    period length; average peak AoI is the weighted peak sum divided by the
    weighted fresh-update count.  ``source`` picks the rows: the exact
    enumeration, or one of the two published variants.
    """
    p = _as_fraction(p)
    if not 0 < p <= 1:
        raise InvalidParameter("p", p, "(0, 1]")
    if source == SOURCE_ORACLE:
        rows = oracle_all_states(T, cap)
    elif source in (VARIANT_TABLE, VARIANT_DERIVATION):
        rows = {
            StateKey(k, n): table_expectations(StateKey(k, n), T, source)
            for k in range(T + 1)
            for n in range(T + 1)
        }
    else:
        raise InvalidParameter("source", source, "oracle | table | derivation")
    area = Fraction(0)
    peaks = Fraction(0)
    valid = Fraction(0)
    for key, row in rows.items():
        pr = state_probability_exact(key, p, T)
        area += pr * row.e_q
        peaks += pr * row.e_a
        valid += pr * row.e_v
    return area / T, peaks / valid


@dataclass(frozen=True)
class AdjudicationRecord:
    """One state, one column: the oracle value against both published
    variants (None where the row domain excludes the state)."""

    key: StateKey
    column: str
    oracle: Fraction
    table: Fraction | None
    derivation: Fraction | None

    @property
    def table_match(self) -> bool | None:
        return None if self.table is None else self.table == self.oracle

    @property
    def derivation_match(self) -> bool | None:
        return None if self.derivation is None else self.derivation == self.oracle


_COLUMNS = ("peaks", "valid", "area")


def adjudicate_states(T: int, cap: int = DEFAULT_CAP) -> list[AdjudicationRecord]:
    records: list[AdjudicationRecord] = []
    oracle = oracle_all_states(T, cap)
    for key, row in sorted(oracle.items()):
        variants: dict[str, StateExpectations | None] = {}
        for variant in (VARIANT_TABLE, VARIANT_DERIVATION):
            try:
                variants[variant] = table_expectations(key, T, variant)
            except DomainError:
                variants[variant] = None
        for column, attr in zip(_COLUMNS, ("e_a", "e_v", "e_q")):
            tab = variants[VARIANT_TABLE]
            der = variants[VARIANT_DERIVATION]
            records.append(
                AdjudicationRecord(
                    key=key,
                    column=column,
                    oracle=getattr(row, attr),
                    table=None if tab is None else getattr(tab, attr),
                    derivation=None if der is None else getattr(der, attr),
                )
            )
    return records


def _family(key: StateKey, T: int) -> str:
    k, n = key
    if k == 0 and n == 0:
        return "(0,0)"
    if k == 0 and n == 1:
        return "(0,1)"
    if k == 0:
        return "(0,n>=2)"
    if n == 0:
        return "(k>=1,0)"
    if n == 1:
        return "(k>=1,1)"
    return "(k>=1,n>=2)"


def adjudication_report(Ts: tuple[int, ...] = (2, 3, 4, 5, 6), cap: int = DEFAULT_CAP) -> str:
    """Human-readable adjudication of both published row variants against
    the exact enumeration, grouped by state family."""
    agree: dict[tuple[str, str, str], bool] = {}
    examples: dict[tuple[str, str, str], str] = {}
    for T in Ts:
        for rec in adjudicate_states(T, cap):
            fam = _family(rec.key, T)
            for variant, value, match in (
                (VARIANT_TABLE, rec.table, rec.table_match),
                (VARIANT_DERIVATION, rec.derivation, rec.derivation_match),
            ):
                if value is None:
                    continue
                slot = (fam, rec.column, variant)
                agree[slot] = agree.get(slot, True) and match
                if not match and slot not in examples:
                    examples[slot] = (
                        f"T={T} state={tuple(rec.key)}: "
                        f"exact={rec.oracle} {variant}={value}"
                    )
    lines = [
        "Per-state expectation adjudication (exact enumeration vs published rows)",
        f"periods T in {list(Ts)}; columns: peaks = expected peak sum,",
        "valid = expected fresh updates, area = expected per-slot AoI sum.",
        "",
        f"{'family':<14} {'column':<7} {'table':<10} {'derivation':<10}",
        "-" * 46,
    ]
    fams = ["(0,0)", "(0,1)", "(0,n>=2)", "(k>=1,0)", "(k>=1,1)", "(k>=1,n>=2)"]
    for fam in fams:
        for column in _COLUMNS:
            marks = []
            for variant in (VARIANT_TABLE, VARIANT_DERIVATION):
                slot = (fam, column, variant)
                if slot not in agree:
                    marks.append("-")
                else:
                    marks.append("match" if agree[slot] else "MISMATCH")
            lines.append(f"{fam:<14} {column:<7} {marks[0]:<10} {marks[1]:<10}")
    mismatches = [slot for slot, ok in agree.items() if not ok]
    if mismatches:
        lines.append("")
        lines.append("First mismatching state per slot:")
        for slot in sorted(mismatches):
            fam, column, variant = slot
            lines.append(f"  {fam} {column} [{variant}]: {examples[slot]}")
    lines.append("")
    lines.append(
        "Reading: the area rows of the summary table are exact (the "
        "derivation-text area totals are not), so the average-AoI closed "
        "form is confirmed.  Both variants' (k>=1, 1) peak rows and the "
        "shared 2 - 1/T valid-count row overcount the boundary-coincidence "
        "sub-case in which the geometric sensor's previous completion lands "
        "exactly on the period boundary: the deterministic sensor's "
        "period-end delivery then repeats the in-force generation timestamp "
        "and is stale under the strict freshness rule.  The peak-AoI closed "
        "form assembled from those rows inherits the same overcount; the "
        "enumeration here and the slot simulator agree with each other and "
        "with the *_strict closed-form variants instead."
    )
    return "\n".join(lines)


@dataclass(frozen=True)
class ReconstructionCheck:
    p: Fraction
    T: int
    metric: str
    reconstructed: Fraction
    closed_form: Fraction

    @property
    def rel_error(self) -> Fraction:
        if self.closed_form == 0:
            return abs(self.reconstructed - self.closed_form)
        return abs(self.reconstructed - self.closed_form) / abs(self.closed_form)


def verify_reconstruction(
    max_T: int,
    p_grid: tuple[Fraction, ...] = (
        Fraction(1, 10),
        Fraction(3, 10),
        Fraction(1, 2),
        Fraction(7, 10),
        Fraction(9, 10),
    ),
    source: str = SOURCE_ORACLE,
    cap: int = DEFAULT_CAP,
) -> list[ReconstructionCheck]:
    """Compare reassembled averages against the closed forms over a grid."""
    checks: list[ReconstructionCheck] = []
    for T in range(1, max_T + 1):
        if source != SOURCE_ORACLE and T < 2:
            continue
        for p in p_grid:
            aoi, paoi = reconstruct_averages(p, T, source=source, cap=cap)
            checks.append(
                ReconstructionCheck(p, T, "aoi", aoi, closed_form_aoi_exact(p, T))
            )
            checks.append(
                ReconstructionCheck(p, T, "paoi", paoi, closed_form_paoi_exact(p, T))
            )
    return checks
