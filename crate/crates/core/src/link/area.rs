use nalgebra::DVector;
use rayon::prelude::*;

use super::siso::{configure_single, SisoChannels};
use super::TransmitBudget;
use crate::error::{invalid, Error, Result};
use crate::irs::{wrap_phase, IrsPanel, ReflectionConfig};
use crate::propagation::{los_channel, Endpoint, LinkModels, Position, C64};

/// Horizontal rectangle at height `z`, sampled on an `nx x ny` grid
/// (endpoints included; a single sample sits at the midpoint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Area {
    pub const DEFAULT_GRID: usize = 21;

    pub fn new(x: (f64, f64), y: (f64, f64), z: f64) -> Result<Self> {
        Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            z,
            nx: Self::DEFAULT_GRID,
            ny: Self::DEFAULT_GRID,
        }
        .validated()
    }

    pub fn point(p: Position) -> Self {
        Self {
            x_min: p.x,
            x_max: p.x,
            y_min: p.y,
            y_max: p.y,
            z: p.z,
            nx: 1,
            ny: 1,
        }
    }

    pub fn with_grid(self, nx: usize, ny: usize) -> Result<Self> {
        Self { nx, ny, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let vals = [self.x_min, self.x_max, self.y_min, self.y_max, self.z];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("area bounds"));
        }
        if self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(invalid("area", "max bound below min bound"));
        }
        if self.z < 0.0 {
            return Err(invalid("area", "z must be >= 0"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Empty("area grid"));
        }
        Ok(self)
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Grid points, x varying fastest.
    pub fn points(&self) -> Vec<Position> {
        let xs = Self::axis(self.x_min, self.x_max, self.nx);
        let ys = Self::axis(self.y_min, self.y_max, self.ny);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                out.push(Position { x, y, z: self.z });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaCoverage {
    pub min_power: f64,
    pub argmin: Position,
    pub points: Vec<Position>,
    pub powers: Vec<f64>,
}

/// BS-to-IRS element channel with the BS beam fixed on the IRS.
fn incoming(bs: &Endpoint, panel: &IrsPanel, models: &LinkModels, wavelength: f64) -> Result<DVector<C64>> {
    let irs = Endpoint {
        position: panel.position,
        geometry: panel.geometry,
    };
    let g1 = los_channel(bs, &irs, &models.bs_irs, wavelength)?;
    let (_, v) = super::cascade::dominant_singular_pair(&g1.entries);
    Ok(&g1.entries * v)
}

fn power_at(
    p_t: f64,
    h1: &DVector<C64>,
    coef: &DVector<C64>,
    panel: &IrsPanel,
    point: Position,
    models: &LinkModels,
    wavelength: f64,
) -> Result<f64> {
    let irs = Endpoint {
        position: panel.position,
        geometry: panel.geometry,
    };
    let g2 = los_channel(&irs, &Endpoint::single(point), &models.irs_user, wavelength)?;
    let c: C64 = (0..h1.len()).map(|n| g2.entries[(0, n)] * coef[n] * h1[n]).sum();
    Ok(p_t * c.norm_sqr())
}

/// Received signal power at `point` (single antenna) with the panel's current
/// configuration; the direct link is not included.
pub fn received_power(
    p_t: f64,
    bs: &Endpoint,
    panel: &IrsPanel,
    point: Position,
    models: &LinkModels,
    wavelength: f64,
) -> Result<f64> {
    let h1 = incoming(bs, panel, models, wavelength)?;
    power_at(p_t, &h1, &panel.coefficients(), panel, point, models, wavelength)
}

/// Worst-case received power over the area grid for a static configuration.
pub fn area_min_power(
    budget: &TransmitBudget,
    bs: &Endpoint,
    panel: &IrsPanel,
    area: &Area,
    models: &LinkModels,
    wavelength: f64,
) -> Result<AreaCoverage> {
    let points = area.points();
    if points.is_empty() {
        return Err(Error::Empty("area"));
    }
    let h1 = incoming(bs, panel, models, wavelength)?;
    let coef = panel.coefficients();
    let powers = points
        .par_iter()
        .map(|p| power_at(budget.p_t, &h1, &coef, panel, *p, models, wavelength))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, p) in powers.iter().enumerate() {
        if *p < powers[best] {
            best = i;
        }
    }
    Ok(AreaCoverage {
        min_power: powers[best],
        argmin: points[best],
        points,
        powers,
    })
}

/// Panel co-phased for a single receive point.
pub fn point_config(
    bs: &Endpoint,
    panel: &IrsPanel,
    point: Position,
    models: &LinkModels,
    wavelength: f64,
) -> Result<IrsPanel> {
    let ch = SisoChannels::from_geometry(bs, panel, &Endpoint::single(point), models, wavelength, false)?;
    configure_single(panel, &ch, 1.0)
}

/// Static wide-beam configuration covering `points`: the incident phase is
/// cancelled and, along each array axis, the outgoing spatial frequency sweeps
/// linearly across the aperture over the range spanned by the points (a
/// quadratic phase profile). A single point reduces to co-phasing.
pub fn wide_beam_config(
    bs: &Endpoint,
    panel: &IrsPanel,
    points: &[Position],
    models: &LinkModels,
    wavelength: f64,
) -> Result<IrsPanel> {
    if points.is_empty() {
        return Err(Error::Empty("coverage points"));
    }
    let h1 = incoming(bs, panel, models, wavelength)?;
    let (e1, e2) = panel.geometry.axes();
    let irs = panel.position.to_vector();
    let mut range = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for p in points {
        let u = (p.to_vector() - irs).normalize();
        for (r, e) in range.iter_mut().zip([e1, e2]) {
            let f = u.dot(&e);
            r.0 = r.0.min(f);
            r.1 = r.1.max(f);
        }
    }
    let offsets = panel.geometry.element_offsets();
    let mut extent = [0.0f64; 2];
    for o in &offsets {
        extent[0] = extent[0].max(o.dot(&e1));
        extent[1] = extent[1].max(o.dot(&e2));
    }
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let phases = offsets
        .iter()
        .zip(h1.iter())
        .map(|(o, h)| {
            let mut out = 0.0;
            for (j, e) in [e1, e2].iter().enumerate() {
                let s = o.dot(e);
                let (fa, fb) = range[j];
                out += fa * s;
                if extent[j] > 0.0 {
                    out += (fb - fa) * s * s / (2.0 * extent[j]);
                }
            }
            wrap_phase(-h.arg() - k * out)
        })
        .collect();
    let cfg = ReflectionConfig {
        phases,
        amplitudes: panel.config.amplitudes.clone(),
    };
    panel.clone().with_config(cfg)
}
