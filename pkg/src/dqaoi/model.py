"""Shared domain types, parameter validation, and deterministic seed derivation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class InvalidParameter(ValueError):
    """A parameter falls outside its allowed range."""

    def __init__(self, name: str, value, allowed: str):
        self.name = name
        self.value = value
        self.allowed = allowed
        super().__init__(f"{name}={value!r} not in {allowed}")


class ResourceLimit(RuntimeError):
    """An exact enumeration would exceed its configured size cap."""


class DomainError(ValueError):
    """A tabulated expression was evaluated outside its stated row domain."""


GEOMETRIC = "geometric"
DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class ServiceModel:
    """Service-time law of one queue.

    Discrete laws (slot units): geometric with per-slot success probability
    ``p``, or deterministic with period ``T`` slots.  The exponential law
    (rate per second) exists only as a continuous analytic reference and is
    rejected by the simulator.
    """

    kind: str
    p: float | None = None
    T: int | None = None
    rate: float | None = None

    @classmethod
    def geometric(cls, p: float) -> ServiceModel:
        if not 0.0 < p <= 1.0:
            raise InvalidParameter("p", p, "(0, 1]")
        return cls(GEOMETRIC, p=float(p))

    @classmethod
    def deterministic(cls, T: int) -> ServiceModel:
        if not (isinstance(T, int) and T >= 1):
            raise InvalidParameter("T", T, "integers >= 1")
        return cls(DETERMINISTIC, T=T)

    @classmethod
    def exponential(cls, rate: float) -> ServiceModel:
        if not rate > 0.0:
            raise InvalidParameter("rate", rate, "(0, inf)")
        return cls(EXPONENTIAL, rate=float(rate))

    @property
    def is_discrete(self) -> bool:
        return self.kind in (GEOMETRIC, DETERMINISTIC)

    @property
    def service_rate(self) -> float:
        """Completions per slot (discrete) or per second (exponential)."""
        if self.kind == GEOMETRIC:
            return self.p
        if self.kind == DETERMINISTIC:
            return 1.0 / self.T
        return self.rate

    def describe(self) -> str:
        if self.kind == GEOMETRIC:
            return f"Geo(p={self.p})"
        if self.kind == DETERMINISTIC:
            return f"D(T={self.T})"
        return f"M(rate={self.rate})"


@dataclass(frozen=True)
class DualQueueSpec:
    """Two parallel zero-wait queues updating one monitor.

    ``dd_offset_slots`` shifts queue B's service start and is meaningful only
    when both queues are deterministic; the simulator applies it modulo
    queue B's period (so a period of 1 slot degenerates to offset 0).
    """

    queue_a: ServiceModel
    queue_b: ServiceModel
    dd_offset_slots: int = 1

    def __post_init__(self):
        if self.dd_offset_slots < 0:
            raise InvalidParameter("dd_offset_slots", self.dd_offset_slots, ">= 0")

    @property
    def effective_dd_offset(self) -> int:
        if (
            self.queue_a.kind == DETERMINISTIC
            and self.queue_b.kind == DETERMINISTIC
        ):
            return self.dd_offset_slots % self.queue_b.T
        return self.dd_offset_slots

    def describe(self) -> str:
        return f"{self.queue_a.describe()} | {self.queue_b.describe()}"


def validate(spec: DualQueueSpec) -> None:
    """Reject specs the slot simulator cannot run.

    Construction already enforces per-queue parameter ranges; this check adds
    the simulation-only constraint that both service laws are discrete.
    """
    for name, queue in (("queue_a", spec.queue_a), ("queue_b", spec.queue_b)):
        if not queue.is_discrete:
            raise InvalidParameter(name, queue.kind, "geometric | deterministic")


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo protocol: periods of the reference sensor per round,
    number of independent rounds, master seed, and warm-up periods dropped
    from every recorded statistic."""

    periods_per_round: int = 5000
    rounds: int = 10
    master_seed: int = 1
    warmup_periods: int = 10

    def __post_init__(self):
        if self.periods_per_round < 1:
            raise InvalidParameter("periods_per_round", self.periods_per_round, ">= 1")
        if self.rounds < 1:
            raise InvalidParameter("rounds", self.rounds, ">= 1")
        if not 0 <= self.warmup_periods < self.periods_per_round:
            raise InvalidParameter(
                "warmup_periods", self.warmup_periods, "[0, periods_per_round)"
            )


class StateKey(NamedTuple):
    """Period state: completions of the geometric sensor in the previous
    period (k) and in the current period (n)."""

    k: int
    n: int


@dataclass(frozen=True)
class AoiMetrics:
    """Average age metrics, either exact/analytic (stderr fields absent) or
    estimated over simulation rounds."""

    avg_aoi: float
    avg_paoi: float
    valid_updates_per_period: float
    obsolete_ratio: float
    state_frequency: dict[StateKey, float] | None = None
    stderr_aoi: float | None = None
    stderr_paoi: float | None = None

    def __post_init__(self):
        if self.avg_aoi < 2.0 - 1e-9:
            raise InvalidParameter("avg_aoi", self.avg_aoi, ">= 2 (discrete floor)")
        if self.avg_paoi < 2.0 - 1e-9:
            raise InvalidParameter("avg_paoi", self.avg_paoi, ">= 2 (discrete floor)")
        if not 0.0 <= self.obsolete_ratio <= 1.0:
            raise InvalidParameter("obsolete_ratio", self.obsolete_ratio, "[0, 1]")
        if self.state_frequency is not None:
            total = sum(self.state_frequency.values())
            if abs(total - 1.0) > 1e-12:
                raise InvalidParameter("state_frequency", total, "sums to 1 +/- 1e-12")


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03


def _mix64(x: int) -> int:
    """SplitMix64 avalanche finalizer; a bijection on 64-bit words."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_round_seed(master_seed: int, round_index: int) -> int:
    """Seed for one simulation round.

    Bit-exact definition: ``mix64((master_seed + (round_index + 1) * GOLDEN)
    mod 2**64)`` where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64
    finalizer.  The additive step is a bijection mod 2**64 and the finalizer
    is a bijection, so the map is injective in ``round_index`` for any fixed
    master seed.
    """
    if round_index < 0:
        raise InvalidParameter("round_index", round_index, ">= 0")
    return _mix64((master_seed + (round_index + 1) * _GOLDEN) & _MASK64)


def derive_stream_seed(round_seed: int, stream_index: int) -> int:
    """Seed for one RNG stream (sensor A, sensor B, tie coin) within a round.

    Bit-exact definition: ``mix64(round_seed XOR (stream_index * GOLDEN +
    SALT) mod 2**64)`` with SALT = 0xD1B54A32D192ED03; injective in
    ``stream_index`` for a fixed round seed.
    """
    if stream_index < 0:
        raise InvalidParameter("stream_index", stream_index, ">= 0")
    return _mix64(round_seed ^ ((stream_index * _GOLDEN + _STREAM_SALT) & _MASK64))
