use nalgebra::DVector;

use super::cascade::dominant_singular_pair;
use super::{receiver_noise, LinkReport, NoiseTerm, TransmitBudget};
use crate::error::{Error, Result};
use crate::irs::{amplification_for_incident, co_phase_align_to, verify_power_profile, IrsPanel};
use crate::propagation::{los_channel, Endpoint, LinkModels, C64};

/// Effective single-stream channels around one IRS: `h1` from the transmitter
/// to each element, `h2` from each element to the receiver, plus an optional
/// direct path. The received sample is
/// `y = direct s + sum_n h2[n] a_n e^{j phi_n} (h1[n] s + v_n) + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoChannels {
    pub h1: DVector<C64>,
    pub h2: DVector<C64>,
    pub direct: Option<C64>,
}

impl SisoChannels {
    /// LoS channels for a transmitter/receiver pair around `panel`. Multi-antenna
    /// ends use a fixed maximum-ratio beam towards the IRS.
    pub fn from_geometry(
        tx: &Endpoint,
        panel: &IrsPanel,
        rx: &Endpoint,
        models: &LinkModels,
        wavelength: f64,
        include_direct: bool,
    ) -> Result<Self> {
        let irs = Endpoint {
            position: panel.position,
            geometry: panel.geometry,
        };
        let g1 = los_channel(tx, &irs, &models.bs_irs, wavelength)?;
        let g2 = los_channel(&irs, rx, &models.irs_user, wavelength)?;
        let (_, v_tx) = dominant_singular_pair(&g1.entries);
        let (w_rx, _) = dominant_singular_pair(&g2.entries);
        let h1 = &g1.entries * &v_tx;
        let h2 = (w_rx.adjoint() * &g2.entries).transpose();
        let direct = if include_direct {
            let gd = los_channel(tx, rx, &models.bs_user, wavelength)?;
            Some((w_rx.adjoint() * &gd.entries * &v_tx)[(0, 0)])
        } else {
            None
        };
        Ok(Self { h1, h2, direct })
    }
}

fn check_dims(ch: &SisoChannels, panel: &IrsPanel) -> Result<()> {
    let n = panel.element_count();
    if ch.h1.len() != n || ch.h2.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "h1 has {}, h2 has {} entries for a {n}-element panel",
            ch.h1.len(),
            ch.h2.len()
        )));
    }
    Ok(())
}

/// Closed-form SNR of a single-reflection link with the panel's current
/// configuration.
pub fn siso_single_reflection(budget: &TransmitBudget, ch: &SisoChannels, panel: &IrsPanel) -> Result<LinkReport> {
    check_dims(ch, panel)?;
    let incident: Vec<f64> = ch.h1.iter().map(|h| budget.p_t * h.norm_sqr()).collect();
    let power = verify_power_profile(panel, &incident);
    if !power.satisfied {
        return Err(Error::InvalidConfig(format!(
            "output power exceeds budget by factor {:.6}",
            power.excess_ratio
        )));
    }
    let coef = panel.config.coefficients();
    let mut c = ch.direct.unwrap_or_default();
    let mut amp_noise = 0.0;
    for n in 0..panel.element_count() {
        let out = ch.h2[n] * coef[n];
        c += out * ch.h1[n];
        amp_noise += panel.element_noise(n) * out.norm_sqr();
    }
    let mut terms = vec![receiver_noise(budget.noise_power)];
    if panel.active_count() > 0 {
        terms.push(NoiseTerm {
            label: "irs amplification".into(),
            power: amp_noise,
        });
    }
    Ok(LinkReport::from_terms(budget.p_t * c.norm_sqr(), terms))
}

/// Co-phase the panel for `ch` (aligned with the direct path when present) and
/// set the active amplitude to meet its budget with equality.
pub fn configure_single(panel: &IrsPanel, ch: &SisoChannels, p_t: f64) -> Result<IrsPanel> {
    check_dims(ch, panel)?;
    let reference = match ch.direct {
        Some(d) if d.norm() > 0.0 => d.arg(),
        _ => 0.0,
    };
    let mut cfg = co_phase_align_to(ch.h1.as_slice(), ch.h2.as_slice(), reference)?;
    let n_active = panel.active_count();
    if n_active > 0 {
        let incident: Vec<f64> = ch.h1.iter().take(n_active).map(|h| p_t * h.norm_sqr()).collect();
        let a = amplification_for_incident(panel, &incident)?.factor;
        cfg.amplitudes[..n_active].iter_mut().for_each(|x| *x = a);
    }
    panel.clone().with_config(cfg)
}
