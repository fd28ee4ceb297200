"""Physical-layer models.

Round-trip propagation follows 2*L*n/c with n the fiber group index.  The
receiver SNR starts from a configurable baseline and falls dB-for-dB (scaled
by a coupling factor) with attenuation added on the path; pre-FEC BER uses
the per-bit QPSK mapping

    BER = 1/2 * erfc( sqrt( 10^((SNR_dB - penalty_dB)/10) / 2 ) )

where the implementation penalty calibrates the ideal curve to hardware
SNR/BER operating points.  Attenuation ramps are linear in time and
materialise into link state at telemetry sample instants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from scipy.special import erfcinv

from .errors import IllegalTransition, PathNotOperational, RampConflict
from .simkernel import Kernel, SECOND, SimRng, SimTime
from .topology import (
    OpticalPath,
    RingTopology,
    TransponderNode,
    TransponderState,
)

SPEED_OF_LIGHT_M_PER_S = 299792458.0

# Receiver SNR is clamped here and treated as loss-of-signal below it.
LOS_FLOOR_DB = -10.0

BER_FLOOR = 1e-300
BER_CEIL = 0.5

# Jitter applied to transponder phase durations when sampling is enabled.
TRANSPONDER_JITTER_CV = 0.02


@dataclass(frozen=True)
class PhysicalConstants:
    c_m_per_s: float = SPEED_OF_LIGHT_M_PER_S
    default_group_index: float = 1.4680


@dataclass
class AttenuationRamp:
    """Linear added-loss ramp on one link, e.g. a motorised attenuator."""

    link_id: str
    rate_db_per_s: float
    start_time: SimTime
    snr_coupling: float = 1.0  # dB of SNR lost per dB of added attenuation

    def __post_init__(self) -> None:
        if self.rate_db_per_s <= 0:
            raise ValueError("ramp rate must be positive")
        if not 0 < self.snr_coupling <= 1.5:
            raise ValueError("snr_coupling outside (0, 1.5]")

    def added_db(self, t: SimTime) -> float:
        if t <= self.start_time:
            return 0.0
        return self.rate_db_per_s * (t - self.start_time) / SECOND


@dataclass
class SignalModel:
    """Receiver baseline and fail criterion.

    The default baseline of 21.84 dB back-propagates the slow-ramp operating
    point to zero added loss; 0.25 dB of implementation penalty lines the
    ideal QPSK curve up with measured SNR/BER pairs.  The fail criterion
    defaults to the common HD-FEC pre-FEC BER limit.
    """

    snr0_db: float = 21.84
    implementation_penalty_db: float = 0.25
    fail_ber_above: Optional[float] = 3.8e-3
    fail_snr_below_db: Optional[float] = None

    def __post_init__(self) -> None:
        if self.implementation_penalty_db < 0:
            raise ValueError("implementation penalty must be >= 0")
        if self.fail_ber_above is None and self.fail_snr_below_db is None:
            raise ValueError("signal model needs a fail criterion")
        if self.snr0_db <= self.fail_snr_db():
            raise ValueError("baseline SNR must sit above the fail threshold")

    def fail_snr_db(self) -> float:
        """SNR at which the fail criterion is crossed."""
        if self.fail_snr_below_db is not None:
            return self.fail_snr_below_db
        x = float(erfcinv(2.0 * self.fail_ber_above))
        return 10.0 * math.log10(2.0 * x * x) + self.implementation_penalty_db


@dataclass(frozen=True)
class TelemetrySample:
    t: SimTime
    snr_db: float
    pre_fec_ber: float


def rt_propagation_delay(length_m: float, group_index: float) -> int:
    """Round-trip propagation delay in integer nanoseconds (nearest)."""
    if length_m < 0:
        raise ValueError("length must be >= 0")
    if not 1.0 <= group_index <= 2.0:
        raise ValueError("group index outside [1, 2]")
    return round(2.0 * length_m * group_index / SPEED_OF_LIGHT_M_PER_S * 1e9)


def ber_from_snr(snr_db: float, model: SignalModel) -> float:
    """Pre-FEC BER for a given receiver SNR, clamped to [1e-300, 0.5].

    Strictly decreasing in SNR until the floor clamp.
    """
    lin = 10.0 ** ((snr_db - model.implementation_penalty_db) / 10.0)
    ber = 0.5 * math.erfc(math.sqrt(lin / 2.0))
    return min(max(ber, BER_FLOOR), BER_CEIL)


def transponder_lifecycle(
    tp: TransponderNode,
    configure_at: SimTime,
    kernel: Kernel,
    rng: Optional[SimRng] = None,
    jitter_cv: float = TRANSPONDER_JITTER_CV,
) -> list[tuple[SimTime, TransponderState]]:
    """Drive a transponder Off -> Configuring -> LaserWarmup -> Operational.

    Durations come from the node's nominal config/warm-up times; when ``rng``
    is given they are lognormal draws with the configured coefficient of
    variation, otherwise exact.  Returns the planned (time, state) schedule;
    the state mutations happen as kernel events fire.
    """
    if tp.state is not TransponderState.OFF or tp.lifecycle_pending:
        raise IllegalTransition(
            f"transponder {tp.id} is {tp.state.value}, lifecycle needs Off")
    if rng is None:
        config_ns = tp.config_duration_ns
        warmup_ns = tp.warmup_duration_ns
    else:
        config_ns = round(rng.lognormal_mean_cv(tp.config_duration_ns / SECOND, jitter_cv) * SECOND)
        warmup_ns = round(rng.lognormal_mean_cv(tp.warmup_duration_ns / SECOND, jitter_cv) * SECOND)

    schedule = [
        (configure_at, TransponderState.CONFIGURING),
        (configure_at + config_ns, TransponderState.LASER_WARMUP),
        (configure_at + config_ns + warmup_ns, TransponderState.OPERATIONAL),
    ]
    tp.lifecycle_pending = True

    def make_setter(state: TransponderState):
        def setter() -> None:
            tp.state = state
        return setter

    for at, state in schedule:
        kernel.schedule(make_setter(state), at, kind=f"tp:{tp.id}:{state.value}")
    return schedule


def transponder_teardown(tp: TransponderNode) -> None:
    """Any state back to Off; releases the claim."""
    tp.state = TransponderState.OFF
    tp.lifecycle_pending = False
    tp.claimed_by = None


class RampHandle:
    def __init__(self, ramp: AttenuationRamp):
        self.ramp = ramp
        self.active = True


class OpticalPlant:
    """Time-varying physical state: ramps, receiver SNR, telemetry.

    Ramp state materialises into ``FiberLink.added_attenuation_db`` whenever
    telemetry is sampled, so observable plant state advances at the telemetry
    period while analytic queries stay exact at any instant.
    """

    def __init__(self, topo: RingTopology,
                 constants: PhysicalConstants = PhysicalConstants()):
        self.topo = topo
        self.constants = constants
        self._ramps: dict[str, RampHandle] = {}

    def apply_attenuation_ramp(self, ramp: AttenuationRamp) -> RampHandle:
        if ramp.link_id not in self.topo.links:
            raise KeyError(f"unknown link {ramp.link_id!r}")
        existing = self._ramps.get(ramp.link_id)
        if existing is not None and existing.active:
            raise RampConflict(f"link {ramp.link_id} already has an active ramp")
        handle = RampHandle(ramp)
        self._ramps[ramp.link_id] = handle
        return handle

    def clear_ramp(self, handle: RampHandle, reset_attenuation: bool = True) -> None:
        handle.active = False
        if reset_attenuation:
            self.topo.links[handle.ramp.link_id].added_attenuation_db = 0.0

    def added_attenuation_db(self, link_id: str, t: SimTime) -> float:
        handle = self._ramps.get(link_id)
        if handle is None or not handle.active:
            return self.topo.links[link_id].added_attenuation_db
        return handle.ramp.added_db(t)

    def materialise_ramps(self, t: SimTime) -> None:
        for handle in self._ramps.values():
            if handle.active:
                link = self.topo.links[handle.ramp.link_id]
                link.added_attenuation_db = handle.ramp.added_db(t)

    def _require_operational(self, path: OpticalPath) -> None:
        if path.channel is None:
            raise PathNotOperational(f"path {path.source}->{path.destination} has no channel")
        for tp_id in (path.source, path.destination):
            tp = self.topo.transponders[tp_id]
            if tp.state is not TransponderState.OPERATIONAL:
                raise PathNotOperational(f"transponder {tp_id} is {tp.state.value}")

    def snr_at_receiver(self, path: OpticalPath, t: SimTime, model: SignalModel) -> float:
        """Baseline SNR minus coupled added loss over the path, LOS-clamped."""
        self._require_operational(path)
        snr = model.snr0_db
        for link_id in path.links:
            handle = self._ramps.get(link_id)
            coupling = handle.ramp.snr_coupling if handle is not None and handle.active else 1.0
            snr -= coupling * self.added_attenuation_db(link_id, t)
        return max(snr, LOS_FLOOR_DB)

    def is_los(self, snr_db: float) -> bool:
        return snr_db <= LOS_FLOOR_DB

    def sample_telemetry(self, path: OpticalPath, t: SimTime, model: SignalModel,
                         noise_sigma_db: float, rng: SimRng) -> TelemetrySample:
        self.materialise_ramps(t)
        snr = self.snr_at_receiver(path, t, model)
        if noise_sigma_db:
            snr += rng.normal(0.0, noise_sigma_db)
        return TelemetrySample(t=t, snr_db=snr, pre_fec_ber=ber_from_snr(snr, model))
