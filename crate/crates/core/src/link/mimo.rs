use nalgebra::DMatrix;

use super::cascade::dominant_singular_pair;
use super::TransmitBudget;
use crate::error::{Error, Result};
use crate::irs::{co_phase_align, IrsPanel};
use crate::propagation::{los_channel, ChannelMatrix, Endpoint, LinkModels, C64};

/// Water-filling power allocation over parallel eigenmodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub powers: Vec<f64>,
    /// Water level `mu`; zero when no mode has gain.
    pub water_level: f64,
    pub rate: f64,
}

/// Allocate `p_t` over modes with singular values `sv` and noise `noise`:
/// `p_i = max(0, mu - noise / sv_i^2)`, `sum p_i = p_t`.
pub fn water_filling(sv: &[f64], p_t: f64, noise: f64) -> WaterFilling {
    let floors: Vec<f64> = sv
        .iter()
        .map(|s| if *s > 0.0 { noise / (s * s) } else { f64::INFINITY })
        .collect();
    let mut order: Vec<usize> = (0..sv.len()).filter(|&i| floors[i].is_finite()).collect();
    order.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]).then(a.cmp(&b)));
    let mut powers = vec![0.0; sv.len()];
    if order.is_empty() || p_t <= 0.0 {
        return WaterFilling {
            powers,
            water_level: 0.0,
            rate: 0.0,
        };
    }
    let mut mu = 0.0;
    let mut active = 0;
    let mut floor_sum = 0.0;
    for (m, &i) in order.iter().enumerate() {
        let candidate = (p_t + floor_sum + floors[i]) / (m + 1) as f64;
        if candidate <= floors[i] {
            break;
        }
        floor_sum += floors[i];
        mu = candidate;
        active = m + 1;
    }
    for &i in &order[..active] {
        powers[i] = (mu - floors[i]).max(0.0);
    }
    // fold rounding residue into the strongest mode so the budget is exact
    let residue = p_t - powers.iter().sum::<f64>();
    powers[order[0]] += residue;
    let rate = powers
        .iter()
        .zip(sv)
        .map(|(p, s)| (1.0 + p * s * s / noise).log2())
        .sum();
    WaterFilling {
        powers,
        water_level: mu,
        rate,
    }
}

/// Largest violation of the water-filling KKT conditions, relative to `p_t`:
/// budget, non-negativity, stationarity on active modes and complementary
/// slackness on inactive ones.
pub fn kkt_residuals(sv: &[f64], p_t: f64, noise: f64, wf: &WaterFilling) -> f64 {
    let scale = p_t.max(wf.water_level).max(f64::MIN_POSITIVE);
    let mut worst = (wf.powers.iter().sum::<f64>() - p_t).abs();
    for (p, s) in wf.powers.iter().zip(sv) {
        worst = worst.max((-p).max(0.0));
        if *s <= 0.0 {
            worst = worst.max(p.abs());
            continue;
        }
        let floor = noise / (s * s);
        if *p > 0.0 {
            worst = worst.max((p + floor - wf.water_level).abs());
        } else {
            worst = worst.max((wf.water_level - floor).max(0.0));
        }
    }
    worst / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoCapacity {
    pub rate: f64,
    pub singular_values: Vec<f64>,
    pub allocation: WaterFilling,
}

/// Water-filling capacity of `channel` under `budget`.
pub fn mimo_capacity(budget: &TransmitBudget, channel: &ChannelMatrix) -> MimoCapacity {
    let mut sv: Vec<f64> = channel.entries.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let allocation = water_filling(&sv, budget.p_t, budget.noise_power);
    MimoCapacity {
        rate: allocation.rate,
        singular_values: sv,
        allocation,
    }
}

/// Per-panel LoS blocks: `bs_to_irs[k]` is `N_k x M`, `irs_to_user[k]` is
/// `U x N_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIrsChannels {
    pub bs_to_irs: Vec<DMatrix<C64>>,
    pub irs_to_user: Vec<DMatrix<C64>>,
    pub direct: Option<DMatrix<C64>>,
    pub wavelength: f64,
}

pub fn multi_irs_channels(
    bs: &Endpoint,
    user: &Endpoint,
    panels: &[IrsPanel],
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<MultiIrsChannels> {
    if panels.is_empty() {
        return Err(Error::Empty("IRS panel list"));
    }
    let mut bs_to_irs = Vec::with_capacity(panels.len());
    let mut irs_to_user = Vec::with_capacity(panels.len());
    for p in panels {
        let irs = Endpoint {
            position: p.position,
            geometry: p.geometry,
        };
        bs_to_irs.push(los_channel(bs, &irs, &models.bs_irs, wavelength)?.entries);
        irs_to_user.push(los_channel(&irs, user, &models.irs_user, wavelength)?.entries);
    }
    let direct = if include_direct {
        Some(los_channel(bs, user, &models.bs_user, wavelength)?.entries)
    } else {
        None
    };
    Ok(MultiIrsChannels {
        bs_to_irs,
        irs_to_user,
        direct,
        wavelength,
    })
}

/// `H = sum_k H2_k Phi_k H1_k (+ direct)` with each panel's current configuration.
pub fn assemble_from_channels(ch: &MultiIrsChannels, panels: &[IrsPanel]) -> Result<ChannelMatrix> {
    if panels.len() != ch.bs_to_irs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} panels for {} channel pairs",
            panels.len(),
            ch.bs_to_irs.len()
        )));
    }
    let rows = ch.irs_to_user[0].nrows();
    let cols = ch.bs_to_irs[0].ncols();
    let mut h = match &ch.direct {
        Some(d) => d.clone(),
        None => DMatrix::zeros(rows, cols),
    };
    for ((p, h1), h2) in panels.iter().zip(&ch.bs_to_irs).zip(&ch.irs_to_user) {
        if h1.nrows() != p.element_count() || h2.ncols() != p.element_count() {
            return Err(Error::DimensionMismatch("panel size differs from its channels".into()));
        }
        let coef = p.coefficients();
        let scaled = DMatrix::from_fn(h2.nrows(), h2.ncols(), |r, c| h2[(r, c)] * coef[c]);
        h += scaled * h1;
    }
    ChannelMatrix::new(h, ch.wavelength)
}

/// Co-phase each panel for its own rank-1 sub-channel, i.e. maximize the
/// singular value `|v2^H Phi_k u1|` of `H2_k Phi_k H1_k`.
pub fn configure_mimo_panels(ch: &MultiIrsChannels, panels: &[IrsPanel]) -> Result<Vec<IrsPanel>> {
    panels
        .iter()
        .zip(ch.bs_to_irs.iter().zip(&ch.irs_to_user))
        .map(|(p, (h1, h2))| {
            let (u1, _) = dominant_singular_pair(h1);
            let (_, v2) = dominant_singular_pair(h2);
            let out: Vec<C64> = v2.iter().map(|z| z.conj()).collect();
            let cfg = co_phase_align(u1.as_slice(), &out)?;
            p.clone().with_config(cfg)
        })
        .collect()
}

/// Effective MIMO channel through `panels` (configurations as given).
pub fn assemble_multi_irs_channel(
    bs: &Endpoint,
    user: &Endpoint,
    panels: &[IrsPanel],
    models: &LinkModels,
    wavelength: f64,
    include_direct: bool,
) -> Result<ChannelMatrix> {
    let ch = multi_irs_channels(bs, user, panels, models, wavelength, include_direct)?;
    assemble_from_channels(&ch, panels)
}
