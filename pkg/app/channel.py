import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# Internal imports
from app.utils import DomainError, NON_POSITIVE_DISTANCE, TOO_MANY_ONES

SPEED_OF_LIGHT_MM_S = 3.0e11
TISSUE_REFRACTIVE_FACTOR = 2.0
BISECTION_TOL_MM = 1e-9
MAX_BISECTION_STEPS = 200


class ChannelParams(BaseModel):
    """
    Log-distance + linear absorption surrogate for in-body THz path loss.

    Defaults put the communication range at ~20 mm ("up to a few centimeters").
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    ref_loss_db: float = 60.0
    ref_distance: float = Field(default=1.0, gt=0)
    spreading_exponent: float = Field(default=2.0, ge=0)
    absorption_db_per_mm: float = Field(default=1.0, ge=0)
    link_budget_db: float = 106.02


class RangingModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_r: float = Field(default=1.0, ge=0)
    bandwidth: float = Field(default=1e12, gt=0)  # informational only


class TsOokParams(BaseModel):
    """
    TS-OOK timing and per-pulse energy.

    Units: seconds, picojoules, picowatts (pW * s = pJ).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    pulse_duration: float = Field(default=1e-13, gt=0)
    beta_ratio: float = Field(default=1000.0, ge=100)
    e_tx_pulse: float = Field(default=1.0, ge=0)
    e_rx_pulse: float = Field(default=0.5, ge=0)
    p_idle: float = Field(default=100.0, ge=0)

    @property
    def beta(self) -> float:
        return self.beta_ratio * self.pulse_duration


def path_loss(d: float, params: ChannelParams) -> float:
    if d <= 0:
        raise DomainError(f"{NON_POSITIVE_DISTANCE}: {d}")
    return (
        params.ref_loss_db
        + 10.0 * params.spreading_exponent * math.log10(d / params.ref_distance)
        + params.absorption_db_per_mm * d
    )


def comm_range(params: ChannelParams) -> float:
    """
    Distance at which path loss uses up the whole link budget.

    Returns 0 when the budget does not even cover the reference loss.
    """
    if params.link_budget_db < path_loss(params.ref_distance, params):
        return 0.0

    lo = params.ref_distance
    hi = 2.0 * lo
    while path_loss(hi, params) < params.link_budget_db:
        lo, hi = hi, 2.0 * hi
        if math.isinf(hi):
            return math.inf

    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= BISECTION_TOL_MM:
            break
        mid = 0.5 * (lo + hi)
        if path_loss(mid, params) < params.link_budget_db:
            lo = mid
        else:
            hi = mid

    d_star = 0.5 * (lo + hi)
    logging.debug(f"Communication range for budget {params.link_budget_db} dB: {d_star} mm")
    return d_star


def measure_range(true_d: float, model: RangingModel, rng: np.random.Generator) -> float:
    """
    Noisy two-way ToF range, clamped at zero.
    """
    if model.sigma_r == 0:
        return true_d
    return max(0.0, true_d + rng.normal(0.0, model.sigma_r))


def measure_ranges(true_d: np.ndarray, model: RangingModel, rng: np.random.Generator) -> np.ndarray:
    """
    Vectorised measure_range for whole cohorts.
    """
    if model.sigma_r == 0:
        return true_d.astype(float, copy=True)
    return np.maximum(0.0, true_d + rng.normal(0.0, model.sigma_r, size=true_d.shape))


def ranging_resolution(bandwidth: float, refractive_factor: float = TISSUE_REFRACTIVE_FACTOR) -> float:
    """
    Raw two-way ToF resolution in mm for a given bandwidth.
    """
    return SPEED_OF_LIGHT_MM_S / (2.0 * bandwidth * refractive_factor)


def tsook_packet_cost(bits: int, ones: int, params: TsOokParams) -> tuple[float, float]:
    """
    Transmit-side cost of a TS-OOK packet.

    Ones cost a pulse; zeros are silence. Idle power runs for the whole packet.

    Returns:
        tuple[float, float]: (duration in seconds, energy in pJ)
    """
    if ones > bits:
        raise DomainError(f"{TOO_MANY_ONES}: ones={ones}, bits={bits}")
    duration = bits * params.beta
    energy = ones * params.e_tx_pulse + duration * params.p_idle
    return duration, energy


def rx_packet_cost(bits: int, params: TsOokParams) -> tuple[float, float]:
    """
    Receive-side cost: the receiver samples every bit slot.
    """
    duration = bits * params.beta
    energy = bits * params.e_rx_pulse + duration * params.p_idle
    return duration, energy
