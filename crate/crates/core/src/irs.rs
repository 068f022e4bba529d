//! IRS panels and reflection configurations.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::propagation::{ArrayGeometry, Position, C64};

const TWO_PI: f64 = 2.0 * PI;
const POWER_RTOL: f64 = 1e-9;

/// Wrap a phase into `[0, 2pi)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerConstraint {
    /// Budget bounds the summed output power of all active elements.
    Total,
    /// Budget bounds the output power of every active element.
    PerElement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveParams {
    /// Amplification power budget in watts.
    pub budget: f64,
    pub constraint: PowerConstraint,
    /// Amplification noise power injected per active element, in watts.
    pub noise_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PanelKind {
    Passive,
    Active(ActiveParams),
    /// Elements `0..n_active` are active, the rest passive.
    Hybrid {
        n_active: usize,
        active: ActiveParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    pub phases: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl ReflectionConfig {
    pub fn identity(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
            amplitudes: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Per-element complex reflection coefficients `a_n exp(j phi_n)`.
    pub fn coefficients(&self) -> Vec<C64> {
        self.phases
            .iter()
            .zip(&self.amplitudes)
            .map(|(&p, &a)| C64::from_polar(a, p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsPanel {
    pub position: Position,
    pub geometry: ArrayGeometry,
    pub kind: PanelKind,
    pub config: ReflectionConfig,
}

impl IrsPanel {
    pub fn new(position: Position, geometry: ArrayGeometry, kind: PanelKind) -> Result<Self> {
        if let PanelKind::Hybrid { n_active, .. } = kind {
            if n_active > geometry.element_count {
                return Err(invalid(
                    "n_active",
                    format!("{n_active} exceeds {} elements", geometry.element_count),
                ));
            }
        }
        if let Some(p) = kind_params(&kind) {
            if !(p.budget.is_finite() && p.budget >= 0.0) {
                return Err(invalid("amp_power_budget", "must be finite and >= 0"));
            }
            if !(p.noise_power.is_finite() && p.noise_power >= 0.0) {
                return Err(invalid("amp_noise_power", "must be finite and >= 0"));
            }
        }
        Ok(Self {
            position,
            geometry,
            kind,
            config: ReflectionConfig::identity(geometry.element_count),
        })
    }

    pub fn element_count(&self) -> usize {
        self.geometry.element_count
    }

    pub fn active_count(&self) -> usize {
        match self.kind {
            PanelKind::Passive => 0,
            PanelKind::Active(_) => self.element_count(),
            PanelKind::Hybrid { n_active, .. } => n_active,
        }
    }

    pub fn is_active_element(&self, n: usize) -> bool {
        n < self.active_count()
    }

    pub fn active_params(&self) -> Option<&ActiveParams> {
        kind_params(&self.kind)
    }

    /// Amplification noise power of element `n` (zero for passive elements).
    pub fn element_noise(&self, n: usize) -> f64 {
        match self.active_params() {
            Some(p) if self.is_active_element(n) => p.noise_power,
            _ => 0.0,
        }
    }

    pub fn with_config(mut self, config: ReflectionConfig) -> Result<Self> {
        if config.len() != self.element_count() || config.amplitudes.len() != self.element_count() {
            return Err(Error::DimensionMismatch(format!(
                "config has {} entries, panel has {} elements",
                config.len(),
                self.element_count()
            )));
        }
        self.config = config;
        Ok(self)
    }

    pub fn moved_to(mut self, position: Position) -> Self {
        self.position = position;
        self
    }

    /// Diagonal reflection matrix entries.
    pub fn coefficients(&self) -> DVector<C64> {
        DVector::from_vec(self.config.coefficients())
    }
}

fn kind_params(kind: &PanelKind) -> Option<&ActiveParams> {
    match kind {
        PanelKind::Passive => None,
        PanelKind::Active(p) => Some(p),
        PanelKind::Hybrid { active, .. } => Some(active),
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("lengths {a} and {b} differ")));
    }
    if a == 0 {
        return Err(Error::Empty("channel vector"));
    }
    Ok(())
}

/// Closed-form co-phasing: `phi_n = -arg(h_in[n] h_out[n])`, unit amplitudes.
pub fn co_phase_align(h_in: &[C64], h_out: &[C64]) -> Result<ReflectionConfig> {
    co_phase_align_to(h_in, h_out, 0.0)
}

/// Co-phasing towards a reference phase, so every cascade term
/// `h_out[n] e^{j phi_n} h_in[n]` lands on `reference`. Used when the cascade
/// must add coherently to another fixed contribution.
pub fn co_phase_align_to(h_in: &[C64], h_out: &[C64], reference: f64) -> Result<ReflectionConfig> {
    check_lengths(h_in.len(), h_out.len())?;
    let phases = h_in
        .iter()
        .zip(h_out)
        .map(|(a, b)| wrap_phase(reference - (a * b).arg()))
        .collect();
    Ok(ReflectionConfig {
        phases,
        amplitudes: vec![1.0; h_in.len()],
    })
}

/// `sum_n h_out[n] a_n e^{j phi_n} h_in[n]`.
pub fn cascade_sum(h_in: &[C64], h_out: &[C64], config: &ReflectionConfig) -> Result<C64> {
    check_lengths(h_in.len(), h_out.len())?;
    check_lengths(h_in.len(), config.len())?;
    Ok(h_in
        .iter()
        .zip(h_out)
        .zip(config.coefficients())
        .map(|((a, b), c)| a * b * c)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    pub factor: f64,
    /// Set when the budget is zero and the active elements are switched off.
    pub zero_budget: bool,
}

/// Shared amplitude for the active elements of `panel`, given the incident
/// signal power per element, meeting the power budget with equality.
pub fn amplification_factor(panel: &IrsPanel, incident_power_per_element: f64) -> Result<Amplification> {
    let n = panel.active_count();
    amplification_for_incident(panel, &vec![incident_power_per_element; n])
}

/// As [`amplification_factor`] with a per-element incident power profile
/// (one entry per active element). With a total constraint the budget is met
/// with equality; with a per-element constraint the tightest element binds.
pub fn amplification_for_incident(panel: &IrsPanel, incident: &[f64]) -> Result<Amplification> {
    let params = panel.active_params().ok_or(Error::NotActive)?;
    let n = panel.active_count();
    if n == 0 {
        return Err(Error::NotActive);
    }
    if incident.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} incident powers for {n} active elements",
            incident.len()
        )));
    }
    if incident.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid("incident_power", "must be finite and >= 0"));
    }
    if params.budget == 0.0 {
        return Ok(Amplification {
            factor: 0.0,
            zero_budget: true,
        });
    }
    let sigma_v = params.noise_power;
    let factor = match params.constraint {
        PowerConstraint::Total => {
            let load: f64 = incident.iter().map(|p| p + sigma_v).sum();
            (params.budget / load).sqrt()
        }
        PowerConstraint::PerElement => incident
            .iter()
            .map(|p| (params.budget / (p + sigma_v)).sqrt())
            .fold(f64::INFINITY, f64::min),
    };
    if !factor.is_finite() {
        return Err(invalid(
            "incident_power",
            "zero incident and noise power leaves the amplification unbounded",
        ));
    }
    Ok(Amplification {
        factor,
        zero_budget: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    /// Output power of every element; zero for passive elements.
    pub per_element: Vec<f64>,
    pub total: f64,
    pub budget: Option<f64>,
    pub satisfied: bool,
    /// Ratio of the binding output power to the budget (1 at equality).
    pub excess_ratio: f64,
}

pub fn verify_power(panel: &IrsPanel, incident_power_per_element: f64) -> PowerReport {
    verify_power_profile(panel, &vec![incident_power_per_element; panel.element_count()])
}

/// Power check with a per-element incident power profile (all elements).
pub fn verify_power_profile(panel: &IrsPanel, incident: &[f64]) -> PowerReport {
    let passive_ok = (0..panel.element_count())
        .filter(|&n| !panel.is_active_element(n))
        .all(|n| (panel.config.amplitudes[n] - 1.0).abs() <= 1e-12);
    let Some(params) = panel.active_params() else {
        return PowerReport {
            per_element: vec![0.0; panel.element_count()],
            total: 0.0,
            budget: None,
            satisfied: passive_ok,
            excess_ratio: 0.0,
        };
    };
    let per_element: Vec<f64> = (0..panel.element_count())
        .map(|n| {
            if panel.is_active_element(n) {
                let a = panel.config.amplitudes[n];
                a * a * (incident.get(n).copied().unwrap_or(0.0) + params.noise_power)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = per_element.iter().sum();
    let binding = match params.constraint {
        PowerConstraint::Total => total,
        PowerConstraint::PerElement => per_element.iter().cloned().fold(0.0, f64::max),
    };
    let excess_ratio = if params.budget > 0.0 {
        binding / params.budget
    } else if binding > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    PowerReport {
        per_element,
        total,
        budget: Some(params.budget),
        satisfied: passive_ok && excess_ratio <= 1.0 + POWER_RTOL,
        excess_ratio,
    }
}

/// Snap phases to the nearest of `2^bits` uniform levels, ties to the lower
/// level. Amplitudes are untouched.
pub fn quantize_phases(config: &ReflectionConfig, bits: u32) -> Result<ReflectionConfig> {
    if bits == 0 || bits > 30 {
        return Err(invalid("bits", format!("{bits} outside 1..=30")));
    }
    let levels = 1u64 << bits;
    let step = TWO_PI / levels as f64;
    let phases = config
        .phases
        .iter()
        .map(|&p| {
            let x = wrap_phase(p) / step;
            let k = (x - 0.5).ceil() as u64 % levels;
            k as f64 * step
        })
        .collect();
    Ok(ReflectionConfig {
        phases,
        amplitudes: config.amplitudes.clone(),
    })
}

/// Split a panel into co-located active (first `n_active` elements) and
/// passive sub-panels. The active sub-panel inherits the amplification budget.
pub fn split_hybrid(panel: &IrsPanel, n_active: usize) -> Result<(Option<IrsPanel>, Option<IrsPanel>)> {
    let n = panel.element_count();
    if n_active > n {
        return Err(invalid("n_active", format!("{n_active} exceeds {n} elements")));
    }
    let params = panel.active_params().copied();
    if n_active > 0 && params.is_none() {
        return Err(Error::NotActive);
    }
    let sub = |range: std::ops::Range<usize>, kind: PanelKind| -> Result<Option<IrsPanel>> {
        if range.is_empty() {
            return Ok(None);
        }
        let geometry = panel.geometry.resized(range.len())?;
        let config = ReflectionConfig {
            phases: panel.config.phases[range.clone()].to_vec(),
            amplitudes: match kind {
                PanelKind::Passive => vec![1.0; range.len()],
                _ => panel.config.amplitudes[range].to_vec(),
            },
        };
        Ok(Some(IrsPanel {
            position: panel.position,
            geometry,
            kind,
            config,
        }))
    };
    let active = match params {
        Some(p) => sub(0..n_active, PanelKind::Active(p))?,
        None => None,
    };
    let passive = sub(n_active..n, PanelKind::Passive)?;
    Ok((active, passive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn geom(n: usize) -> ArrayGeometry {
        ArrayGeometry::linear(n, 0.05, Vector3::x()).unwrap()
    }

    fn active(n: usize, budget: f64, constraint: PowerConstraint, noise: f64) -> IrsPanel {
        IrsPanel::new(
            Position::xy(0.0, 0.0),
            geom(n),
            PanelKind::Active(ActiveParams {
                budget,
                constraint,
                noise_power: noise,
            }),
        )
        .unwrap()
    }

    #[test]
    fn co_phase_examples() {
        let one = [C64::new(1.0, 0.0)];
        let cfg = co_phase_align(&one, &one).unwrap();
        assert_eq!(cfg.phases, vec![0.0]);
        assert!((cascade_sum(&one, &one, &cfg).unwrap().norm() - 1.0).abs() < 1e-15);

        let h_in = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let h_out = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let cfg = co_phase_align(&h_in, &h_out).unwrap();
        assert!(cfg.phases[0].abs() < 1e-15);
        assert!((cfg.phases[1] - 1.5 * PI).abs() < 1e-12);
        assert!((cascade_sum(&h_in, &h_out, &cfg).unwrap().norm() - 2.0).abs() < 1e-12);

        // exhaustive phase grid on the second element never beats the closed form
        let steps = 4096;
        let best = (0..steps)
            .map(|k| {
                let c = ReflectionConfig {
                    phases: vec![0.0, TWO_PI * k as f64 / steps as f64],
                    amplitudes: vec![1.0; 2],
                };
                cascade_sum(&h_in, &h_out, &c).unwrap().norm()
            })
            .fold(0.0, f64::max);
        assert!(best <= 2.0 + 1e-12);

        assert!(co_phase_align(&h_in, &one).is_err());
    }

    #[test]
    fn amplification_examples() {
        let p = active(1, 1.0, PowerConstraint::Total, 0.5);
        assert!((amplification_factor(&p, 0.5).unwrap().factor - 1.0).abs() < 1e-15);
        let p = active(1, 4.0, PowerConstraint::Total, 0.5);
        assert!((amplification_factor(&p, 0.5).unwrap().factor - 2.0).abs() < 1e-15);
        let p = active(16, 1e-3, PowerConstraint::Total, 1e-10);
        let a = amplification_factor(&p, 1e-6).unwrap().factor;
        let expected = (1e-3f64 / (16.0 * (1e-6 + 1e-10))).sqrt();
        assert!((a - expected).abs() < 1e-12);
        assert!((a - 7.906).abs() < 1e-3);
        let p = active(4, 2e-3, PowerConstraint::PerElement, 1e-3);
        assert!((amplification_factor(&p, 1e-3).unwrap().factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplification_errors_and_zero_budget() {
        let passive = IrsPanel::new(Position::xy(0.0, 0.0), geom(4), PanelKind::Passive).unwrap();
        assert_eq!(amplification_factor(&passive, 1.0), Err(Error::NotActive));
        let p = active(4, 0.0, PowerConstraint::Total, 1e-3);
        let a = amplification_factor(&p, 1.0).unwrap();
        assert_eq!(a.factor, 0.0);
        assert!(a.zero_budget);
    }

    #[test]
    fn verify_power_examples() {
        let passive = IrsPanel::new(Position::xy(0.0, 0.0), geom(4), PanelKind::Passive).unwrap();
        assert!(verify_power(&passive, 123.0).satisfied);

        let p = active(8, 1e-2, PowerConstraint::Total, 1e-6);
        let a = amplification_factor(&p, 1e-4).unwrap().factor;
        let cfg = ReflectionConfig {
            phases: vec![0.0; 8],
            amplitudes: vec![a; 8],
        };
        let p = p.with_config(cfg).unwrap();
        let rep = verify_power(&p, 1e-4);
        assert!(rep.satisfied);
        assert!((rep.excess_ratio - 1.0).abs() < 1e-9);

        let doubled = ReflectionConfig {
            phases: vec![0.0; 8],
            amplitudes: vec![2.0 * a; 8],
        };
        let p = p.with_config(doubled).unwrap();
        let rep = verify_power(&p, 1e-4);
        assert!(!rep.satisfied);
        let direct: f64 = 8.0 * (2.0 * a).powi(2) * (1e-4 + 1e-6);
        assert!((rep.total - direct).abs() < 1e-15);
        assert!((rep.excess_ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn quantize_examples() {
        let cfg = ReflectionConfig {
            phases: vec![0.0, PI],
            amplitudes: vec![1.0, 1.0],
        };
        assert_eq!(quantize_phases(&cfg, 1).unwrap(), cfg);

        let cfg = ReflectionConfig {
            phases: vec![PI / 3.0],
            amplitudes: vec![1.0],
        };
        assert!((quantize_phases(&cfg, 2).unwrap().phases[0] - PI / 2.0).abs() < 1e-15);

        // tie goes to the lower level
        let cfg = ReflectionConfig {
            phases: vec![PI / 4.0],
            amplitudes: vec![1.0],
        };
        assert_eq!(quantize_phases(&cfg, 2).unwrap().phases[0], 0.0);

        assert!(quantize_phases(&cfg, 0).is_err());
    }

    #[test]
    fn split_hybrid_bookkeeping() {
        let params = ActiveParams {
            budget: 1e-2,
            constraint: PowerConstraint::Total,
            noise_power: 1e-10,
        };
        let panel = IrsPanel::new(
            Position::new(1.0, 2.0, 3.0).unwrap(),
            geom(10),
            PanelKind::Hybrid {
                n_active: 4,
                active: params,
            },
        )
        .unwrap();
        let (a, p) = split_hybrid(&panel, 0).unwrap();
        assert!(a.is_none());
        assert_eq!(p.unwrap().element_count(), 10);
        let (a, p) = split_hybrid(&panel, 10).unwrap();
        assert_eq!(a.unwrap().element_count(), 10);
        assert!(p.is_none());
        let (a, p) = split_hybrid(&panel, 4).unwrap();
        let (a, p) = (a.unwrap(), p.unwrap());
        assert_eq!((a.element_count(), p.element_count()), (4, 6));
        assert_eq!(a.position, p.position);
        assert_eq!(a.active_params(), Some(&params));
        assert_eq!(p.kind, PanelKind::Passive);
        assert!(split_hybrid(&panel, 11).is_err());
    }

    #[test]
    fn hybrid_noise_only_on_active_elements() {
        let panel = IrsPanel::new(
            Position::xy(0.0, 0.0),
            geom(5),
            PanelKind::Hybrid {
                n_active: 2,
                active: ActiveParams {
                    budget: 1.0,
                    constraint: PowerConstraint::Total,
                    noise_power: 0.25,
                },
            },
        )
        .unwrap();
        let noise: Vec<f64> = (0..5).map(|n| panel.element_noise(n)).collect();
        assert_eq!(noise, vec![0.25, 0.25, 0.0, 0.0, 0.0]);
    }
}
