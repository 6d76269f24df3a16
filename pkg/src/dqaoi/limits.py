"""Discrete-to-continuous convergence studies.

A continuous-time system with exponential rate ``lam`` (and deterministic
period ``T_M`` seconds) is approximated by discrete systems on slots of
1/delta seconds: per-slot success probability p = lam/delta and period
T = round(delta * T_M) slots.  Scaling the discrete average age by 1/delta
converts slots back to seconds; as delta grows the scaled values approach
the continuous references.  The same recipe sends the two-geometric system
to the two-exponential one, and a geometric service time scaled by 1/delta
to an exponential service time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_forms import (
    ContinuousParams,
    GeoDParams,
    _aoi_geo_d_raw,
    _paoi_geo_d_raw,
    avg_aoi_geo_geo,
    m_d_reference,
    m_m_reference,
)
from .model import InvalidParameter

GEO_D_TO_M_D = "geo-d"
GEO_GEO_TO_M_M = "geo-geo"


@dataclass(frozen=True)
class ConvergenceRow:
    """One slot-division factor: the discretized parameters, the scaled
    discrete value (seconds), the continuous reference (seconds), and the
    errors.  ``exact_T`` keeps delta * T_M so rounding-induced error stays
    attributable."""

    delta: int
    p: float
    T: int
    scaled_discrete: float
    continuous_ref: float
    abs_err: float
    rel_err: float
    exact_T: float = 0.0

    @classmethod
    def build(cls, delta, p, T, scaled, ref, exact_T):
        err = abs(scaled - ref)
        return cls(delta, p, T, scaled, ref, err, err / abs(ref), exact_T)


CSV_HEADER = "delta,p,T,scaled_discrete,continuous_ref,abs_err,rel_err"


def discretize(lam: float, T_M: float, delta: int) -> GeoDParams:
    """Geo-D parameters on slots of 1/delta seconds: p = lam/delta and
    T = round(delta * T_M) (ties to even).  Requires delta > lam so that
    p < 1, and delta * T_M >= 1 so at least one slot covers the period."""
    if not lam > 0:
        raise InvalidParameter("lam", lam, "(0, inf)")
    if delta <= lam:
        raise InvalidParameter("delta", delta, f"integers > lam={lam}")
    T = round(delta * T_M)
    if T < 1:
        raise InvalidParameter("delta*T_M", delta * T_M, ">= 1 after rounding")
    return GeoDParams(p=lam / delta, T=T)


def convergence_table(
    system: str,
    deltas: list[int],
    *,
    lam: float | None = None,
    T_M: float | None = None,
    mu_a: float | None = None,
    mu_b: float | None = None,
    metric: str = "aoi",
) -> list[ConvergenceRow]:
    """Scaled discrete values against the continuous reference.

    system = "geo-d": needs lam and T_M; metric may be "aoi" or "paoi".
    system = "geo-geo": needs mu_a and mu_b; metric must be "aoi" (no
    peak-age reference exists for the two-exponential system).
    """
    if list(deltas) != sorted(deltas):
        raise InvalidParameter("deltas", deltas, "ascending")
    rows: list[ConvergenceRow] = []
    if system == GEO_D_TO_M_D:
        if lam is None or T_M is None:
            raise InvalidParameter("lam/T_M", None, "required for geo-d")
        aoi_ref, paoi_ref = m_d_reference(ContinuousParams(lam, T_M))
        ref = {"aoi": aoi_ref, "paoi": paoi_ref}[metric]
        fn = {"aoi": _aoi_geo_d_raw, "paoi": _paoi_geo_d_raw}[metric]
        for delta in deltas:
            params = discretize(lam, T_M, delta)
            scaled = fn(params.p, params.T) / delta
            rows.append(
                ConvergenceRow.build(delta, params.p, params.T, scaled, ref, delta * T_M)
            )
        return rows
    if system == GEO_GEO_TO_M_M:
        if mu_a is None or mu_b is None:
            raise InvalidParameter("mu_a/mu_b", None, "required for geo-geo")
        if metric != "aoi":
            raise InvalidParameter("metric", metric, "aoi (no peak-age reference)")
        ref = m_m_reference(mu_a, mu_b)
        for delta in deltas:
            if delta <= max(mu_a, mu_b):
                raise InvalidParameter("delta", delta, f"> max rate {max(mu_a, mu_b)}")
            scaled = avg_aoi_geo_geo(mu_a / delta, mu_b / delta) / delta
            rows.append(
                ConvergenceRow.build(
                    delta, mu_a / delta, 0, scaled, ref, float(delta)
                )
            )
        return rows
    raise InvalidParameter("system", system, "geo-d | geo-geo")


def rows_to_csv(rows: list[ConvergenceRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.delta},{r.p!r},{r.T},{r.scaled_discrete!r},"
            f"{r.continuous_ref!r},{r.abs_err!r},{r.rel_err!r}"
        )
    return "\n".join(lines) + "\n"


def geo_to_exp_distance(r: float, delta: int) -> float:
    """Sup-norm distance, on the jump grid m = j/delta, between the CDF of a
    geometric service time scaled by 1/delta (success r/delta per slot) and
    the exponential CDF with rate r.

    Evaluated analytically: sup over j >= 0 of |exp(-r j / delta) -
    (1 - r/delta)^j|, truncated once both tails fall below 1e-18.
    """
    if not r > 0:
        raise InvalidParameter("r", r, "(0, inf)")
    if delta <= r:
        raise InvalidParameter("delta", delta, f"integers > r={r}")
    p = r / delta
    # both tails below 1e-18 beyond j_max
    j_max = int(math.ceil(42.0 / min(p, r / delta))) + 1
    j = np.arange(0, j_max + 1, dtype=np.float64)
    exp_tail = np.exp(-r * j / delta)
    geo_tail = np.exp(j * math.log1p(-p))
    return float(np.max(np.abs(exp_tail - geo_tail)))
