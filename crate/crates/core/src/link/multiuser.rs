use nalgebra::{DMatrix, DVector};

use super::cascade::dominant_singular_pair;
use super::siso::{configure_single, siso_single_reflection, SisoChannels};
use super::TransmitBudget;
use crate::error::{Error, Result};
use crate::irs::{co_phase_align, IrsPanel};
use crate::propagation::{los_channel, Endpoint, LinkModels, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserRates {
    pub snr: Vec<f64>,
    pub rates: Vec<f64>,
    /// Fraction of time each user is served.
    pub time_shares: Vec<f64>,
    pub sum_rate: f64,
}

impl MultiUserRates {
    fn new(snr: Vec<f64>, time_shares: Vec<f64>) -> Self {
        let rates: Vec<f64> = snr
            .iter()
            .zip(&time_shares)
            .map(|(s, t)| t * (1.0 + s).log2())
            .collect();
        let sum_rate = rates.iter().sum();
        Self {
            snr,
            rates,
            time_shares,
            sum_rate,
        }
    }
}

/// Zero-forcing precoder with unit-norm columns and equal power per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForcing {
    /// `M x K`, column `k` serves user `k`.
    pub precoder: DMatrix<C64>,
    pub snr: Vec<f64>,
    /// Worst ratio of leaked interference to useful signal over users.
    pub interference_ratio: f64,
}

/// ZF over the effective channel rows `g` (`K x M`) with `p_t / K` per user.
pub fn zero_forcing(g: &DMatrix<C64>, budget: &TransmitBudget) -> Result<ZeroForcing> {
    let (k, m) = g.shape();
    if k == 0 {
        return Err(Error::Empty("user list"));
    }
    if m < k {
        return Err(Error::ZeroForcingInfeasible { antennas: m, users: k });
    }
    let gram = g * g.adjoint();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::InvalidConfig("user channels are linearly dependent".into()))?;
    let mut w = g.adjoint() * &inv;
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        col /= C64::from(n);
    }
    let p = budget.p_t / k as f64;
    let gw = g * &w;
    let mut snr = Vec::with_capacity(k);
    let mut interference_ratio: f64 = 0.0;
    for i in 0..k {
        let signal = p * gw[(i, i)].norm_sqr();
        let leak: f64 = (0..k).filter(|&j| j != i).map(|j| p * gw[(i, j)].norm_sqr()).sum();
        interference_ratio = interference_ratio.max(leak / signal);
        snr.push(signal / budget.noise_power);
    }
    Ok(ZeroForcing {
        precoder: w,
        snr,
        interference_ratio,
    })
}

/// Single-stream channels from the BS (beam fixed towards the IRS) to every user
/// through one shared panel.
pub fn centralized_user_channels(
    bs: &Endpoint,
    users: &[Endpoint],
    panel: &IrsPanel,
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<Vec<SisoChannels>> {
    users
        .iter()
        .map(|u| SisoChannels::from_geometry(bs, panel, u, models, wavelength, include_direct))
        .collect()
}

/// TDMA with equal time shares; the panel is re-phased for whichever user is
/// being served and uses all its elements.
pub fn multiuser_centralized_rate(
    budget: &TransmitBudget,
    bs: &Endpoint,
    users: &[Endpoint],
    panel: &IrsPanel,
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<MultiUserRates> {
    if users.is_empty() {
        return Err(Error::Empty("user list"));
    }
    let channels = centralized_user_channels(bs, users, panel, models, wavelength, include_direct)?;
    let snr = channels
        .iter()
        .map(|ch| {
            let p = configure_single(panel, ch, budget.p_t)?;
            Ok(siso_single_reflection(budget, ch, &p)?.snr)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = users.len();
    Ok(MultiUserRates::new(snr, vec![1.0 / k as f64; k]))
}

/// Effective rows `g_k = sum_j h2_{kj}^T Phi_j H1_j (+ direct_k)` for the
/// distributed layout, after co-phasing panel `k` for user `k`. Returns the
/// configured panels and the `K x M` channel.
pub fn distributed_effective_channel(
    bs: &Endpoint,
    users: &[Endpoint],
    panels: &[IrsPanel],
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<(Vec<IrsPanel>, DMatrix<C64>)> {
    if users.is_empty() {
        return Err(Error::Empty("user list"));
    }
    if panels.len() != users.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} panels for {} users",
            panels.len(),
            users.len()
        )));
    }
    let m = bs.geometry.element_count;
    let mut h1 = Vec::with_capacity(panels.len());
    let mut configured = Vec::with_capacity(panels.len());
    for (k, p) in panels.iter().enumerate() {
        if p.active_count() > 0 {
            return Err(Error::InvalidConfig("distributed layout expects passive panels".into()));
        }
        let irs = Endpoint {
            position: p.position,
            geometry: p.geometry,
        };
        let g1 = los_channel(bs, &irs, &models.bs_irs, wavelength)?.entries;
        let g2 = los_channel(&irs, &users[k], &models.irs_user, wavelength)?.entries;
        let (u1, _) = dominant_singular_pair(&g1);
        let cfg = co_phase_align(u1.as_slice(), g2.row(0).transpose().as_slice())?;
        configured.push(p.clone().with_config(cfg)?);
        h1.push(g1);
    }
    let mut g = DMatrix::zeros(users.len(), m);
    for (k, user) in users.iter().enumerate() {
        let mut row: DVector<C64> = DVector::zeros(m);
        for (p, g1) in configured.iter().zip(&h1) {
            let irs = Endpoint {
                position: p.position,
                geometry: p.geometry,
            };
            let g2 = los_channel(&irs, user, &models.irs_user, wavelength)?.entries;
            let out = g2.row(0).transpose().component_mul(&p.coefficients());
            row += g1.transpose() * out;
        }
        if include_direct {
            let d = los_channel(bs, user, &models.bs_user, wavelength)?.entries;
            row += d.row(0).transpose();
        }
        g.set_row(k, &row.transpose());
    }
    Ok((configured, g))
}

/// One panel per user, zero-forcing at the BS with equal power, all users
/// served simultaneously.
pub fn multiuser_distributed_rate(
    budget: &TransmitBudget,
    bs: &Endpoint,
    users: &[Endpoint],
    panels: &[IrsPanel],
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<MultiUserRates> {
    let m = bs.geometry.element_count;
    if m < users.len() {
        return Err(Error::ZeroForcingInfeasible {
            antennas: m,
            users: users.len(),
        });
    }
    let (_, g) = distributed_effective_channel(bs, users, panels, models, wavelength, include_direct)?;
    let zf = zero_forcing(&g, budget)?;
    let k = users.len();
    Ok(MultiUserRates::new(zf.snr, vec![1.0; k]))
}
