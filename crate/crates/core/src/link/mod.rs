//! End-to-end SNR and rate evaluation for IRS-aided links.

mod area;
mod cascade;
mod mimo;
mod multiuser;
mod siso;

pub use area::{area_min_power, point_config, received_power, wide_beam_config, Area, AreaCoverage};
pub use cascade::{
    configure_chain, configure_double, dominant_singular_pair, double_reflection, evaluate_chain, ChainEvaluation,
    SingleLinks,
};
pub use mimo::{
    assemble_from_channels, assemble_multi_irs_channel, configure_mimo_panels, kkt_residuals, mimo_capacity,
    multi_irs_channels, water_filling, MimoCapacity, MultiIrsChannels, WaterFilling,
};
pub use multiuser::{
    centralized_user_channels, distributed_effective_channel, multiuser_centralized_rate, multiuser_distributed_rate,
    zero_forcing, MultiUserRates, ZeroForcing,
};
pub use siso::{configure_single, siso_single_reflection, SisoChannels};

use crate::error::{invalid, Result};

/// Transmit power and receiver noise, both in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitBudget {
    pub p_t: f64,
    pub noise_power: f64,
}

impl TransmitBudget {
    pub fn new(p_t: f64, noise_power: f64) -> Result<Self> {
        if !(p_t.is_finite() && p_t > 0.0) {
            return Err(invalid("p_t", "must be positive"));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(invalid("noise_power", "must be positive"));
        }
        Ok(Self { p_t, noise_power })
    }

    pub fn with_power(self, p_t: f64) -> Self {
        Self { p_t, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTerm {
    pub label: String,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub snr: f64,
    pub rate: f64,
    pub signal_power: f64,
    pub noise_terms: Vec<NoiseTerm>,
}

impl LinkReport {
    pub(crate) fn from_terms(signal_power: f64, noise_terms: Vec<NoiseTerm>) -> Self {
        let noise: f64 = noise_terms.iter().map(|t| t.power).sum();
        let snr = signal_power / noise;
        Self {
            snr,
            rate: (1.0 + snr).log2(),
            signal_power,
            noise_terms,
        }
    }

    pub fn total_noise(&self) -> f64 {
        self.noise_terms.iter().map(|t| t.power).sum()
    }
}

pub(crate) fn receiver_noise(power: f64) -> NoiseTerm {
    NoiseTerm {
        label: "receiver".into(),
        power,
    }
}

/// Report for a link whose only impairment is receiver noise.
pub fn receiver_noise_report(budget: &TransmitBudget, signal_power: f64) -> LinkReport {
    LinkReport::from_terms(signal_power, vec![receiver_noise(budget.noise_power)])
}
