//! Link energy accounting, per-node batteries and the energy factor.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EnergyError {
    #[error("reception probability must lie in (0, 1], got {0}")]
    ReceptionProbability(f64),
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("battery capacity must be positive and finite")]
    Capacity,
    #[error("mission fraction remaining must lie in [0, 1], got {0}")]
    MissionRemaining(f64),
}

/// Radio parameters of a wireless link used for the expected-energy model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEnergyParams {
    pub reception_probability: f64,
    pub xmtr_power_w: f64,
    pub rcvr_power_w: f64,
    pub data_rate_bps: f64,
    pub ack_rate_bps: f64,
    pub ack_bits: u64,
}

impl LinkEnergyParams {
    /// Low-rate, sub-watt profile resembling a LoRaWAN end device
    /// (SF7/125 kHz ≈ 5.47 kb/s, ~100 mW transmit draw, ~40 mW receive draw,
    /// lossless link since no retransmits are modelled).
    pub fn lorawan_like() -> Self {
        LinkEnergyParams {
            reception_probability: 1.0,
            xmtr_power_w: 0.1,
            rcvr_power_w: 0.04,
            data_rate_bps: 5470.0,
            ack_rate_bps: 5470.0,
            ack_bits: 512,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let p = self.reception_probability;
        if !(p > 0.0 && p <= 1.0) {
            return Err(EnergyError::ReceptionProbability(p));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.xmtr_power_w) {
            return Err(EnergyError::NonPositive("xmtr_power_w"));
        }
        if !positive(self.rcvr_power_w) {
            return Err(EnergyError::NonPositive("rcvr_power_w"));
        }
        if !positive(self.data_rate_bps) {
            return Err(EnergyError::NonPositive("data_rate_bps"));
        }
        if !positive(self.ack_rate_bps) {
            return Err(EnergyError::NonPositive("ack_rate_bps"));
        }
        if self.ack_bits == 0 {
            return Err(EnergyError::NonPositive("ack_bits"));
        }
        Ok(())
    }
}

/// Expected energy in joules to deliver `payload_bits` over a link with
/// stop-and-wait acknowledgement, using the retransmission upper bound as
/// the point estimate:
///
/// `(1/p²)·P_xmtr·x/r_data + (1/p)·P_rcvr/r_ack·x_ack`
pub fn expected_transmit_energy(params: &LinkEnergyParams, payload_bits: u64) -> f64 {
    let p = params.reception_probability;
    let transmit = params.xmtr_power_w * payload_bits as f64 / params.data_rate_bps;
    let receive_ack = params.rcvr_power_w / params.ack_rate_bps * params.ack_bits as f64;
    transmit / (p * p) + receive_ack / p
}

/// Exponential forwarding-cost multiplier: `0.001 · 10^(4·batt_used) · msn_remain`.
pub fn energy_factor(battery: &BatteryState) -> f64 {
    energy_factor_raw(battery.batt_used(), battery.msn_remain())
}

pub fn energy_factor_raw(batt_used: f64, msn_remain: f64) -> f64 {
    0.001 * libm::pow(10.0, 4.0 * batt_used) * msn_remain
}

/// Battery of one node. `consumed` never decreases and never exceeds
/// `capacity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    capacity_j: f64,
    consumed_j: f64,
    msn_remain: f64,
}

impl BatteryState {
    pub fn new(capacity_j: f64) -> Result<Self, EnergyError> {
        if !(capacity_j > 0.0 && capacity_j.is_finite()) {
            return Err(EnergyError::Capacity);
        }
        Ok(BatteryState { capacity_j, consumed_j: 0.0, msn_remain: 1.0 })
    }

    pub fn with_consumed(mut self, consumed_j: f64) -> Self {
        self.consumed_j = consumed_j.clamp(0.0, self.capacity_j);
        self
    }

    pub fn capacity(&self) -> f64 {
        self.capacity_j
    }

    pub fn consumed(&self) -> f64 {
        self.consumed_j
    }

    pub fn batt_used(&self) -> f64 {
        self.consumed_j / self.capacity_j
    }

    pub fn msn_remain(&self) -> f64 {
        self.msn_remain
    }

    pub fn set_msn_remain(&mut self, fraction: f64) -> Result<(), EnergyError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(EnergyError::MissionRemaining(fraction));
        }
        self.msn_remain = fraction;
        Ok(())
    }

    pub fn is_depleted(&self) -> bool {
        self.consumed_j >= self.capacity_j
    }

    /// Charges `joules` against the battery, clamping at capacity.
    /// Returns `true` if the battery is depleted afterwards.
    pub fn drain(&mut self, joules: f64) -> bool {
        debug_assert!(joules >= 0.0, "negative drain {joules}");
        if joules > 0.0 {
            self.consumed_j = (self.consumed_j + joules).min(self.capacity_j);
        }
        self.is_depleted()
    }
}
