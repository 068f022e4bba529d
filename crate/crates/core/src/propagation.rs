//! Radio channel primitives: path loss, far-field array responses, and
//! line-of-sight / Rician channel matrices.
//!
//! Channels follow the far-field planar-wavefront model. A link from `tx` to
//! `rx` is the rank-1 outer product
//!
//! ```text
//! H = sqrt(PL(d)) * exp(-j 2 pi d / lambda) * a_rx(u) * a_tx(u)^H
//! ```
//!
//! where `u` is the unit propagation direction from `tx` to `rx` and `a(u)` is
//! the steering vector of each array evaluated along that direction.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 2.6e9;
/// Reference gain at 1 m, -30 dB.
pub const DEFAULT_BETA0: f64 = 1e-3;

pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Point in meters; the ground plane is `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite("position"));
        }
        if z < 0.0 {
            return Err(invalid("position.z", format!("{z} is below ground")));
        }
        Ok(Self { x, y, z })
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self { x: v.x, y: v.y, z: v.z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (other.to_vector() - self.to_vector()).norm()
    }

    /// Unit vector pointing from `self` towards `other`.
    pub fn direction_to(&self, other: &Position) -> Result<Vector3<f64>> {
        let d = other.to_vector() - self.to_vector();
        let n = d.norm();
        if n == 0.0 {
            return Err(Error::CoincidentPositions);
        }
        Ok(d / n)
    }
}

/// Distance-based path loss `beta0 * d^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub beta0: f64,
    pub alpha: f64,
}

impl PathLossModel {
    pub fn new(beta0: f64, alpha: f64) -> Result<Self> {
        if !(beta0.is_finite() && beta0 > 0.0) {
            return Err(invalid("beta0", format!("{beta0} must be positive")));
        }
        if !(alpha.is_finite() && alpha >= 2.0) {
            return Err(invalid("alpha", format!("{alpha} must be >= 2")));
        }
        Ok(Self { beta0, alpha })
    }

    pub fn gain(&self, d: f64) -> Result<f64> {
        path_loss(d, self)
    }
}

/// Linear power gain at distance `d`. Distances below the 1 m reference are
/// clamped to 1 m.
pub fn path_loss(d: f64, model: &PathLossModel) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::NonFinite("distance"));
    }
    let d = d.max(1.0);
    Ok(model.beta0 * d.powf(-model.alpha))
}

/// Path-loss models per link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModels {
    pub bs_irs: PathLossModel,
    pub irs_user: PathLossModel,
    pub bs_user: PathLossModel,
    pub inter_irs: PathLossModel,
}

impl Default for LinkModels {
    fn default() -> Self {
        Self::with_beta0(DEFAULT_BETA0)
    }
}

impl LinkModels {
    pub fn with_beta0(beta0: f64) -> Self {
        Self {
            bs_irs: PathLossModel { beta0, alpha: 2.2 },
            irs_user: PathLossModel { beta0, alpha: 2.8 },
            bs_user: PathLossModel { beta0, alpha: 3.5 },
            inter_irs: PathLossModel { beta0, alpha: 2.2 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Linear,
    Planar { rows: usize, cols: usize },
}

/// Element layout of an antenna array or IRS. Element `n` of a linear array
/// sits at `n * spacing` along `orientation`. Planar arrays index elements
/// row-major, columns along `orientation` and rows along the in-plane axis
/// closest to vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub element_count: usize,
    pub element_spacing: f64,
    pub orientation: Vector3<f64>,
    pub layout: Layout,
}

impl ArrayGeometry {
    pub fn single() -> Self {
        Self {
            element_count: 1,
            element_spacing: 1.0,
            orientation: Vector3::x(),
            layout: Layout::Linear,
        }
    }

    pub fn linear(n: usize, spacing: f64, orientation: Vector3<f64>) -> Result<Self> {
        Self {
            element_count: n,
            element_spacing: spacing,
            orientation,
            layout: Layout::Linear,
        }
        .validated()
    }

    pub fn planar(rows: usize, cols: usize, spacing: f64, orientation: Vector3<f64>) -> Result<Self> {
        Self {
            element_count: rows * cols,
            element_spacing: spacing,
            orientation,
            layout: Layout::Planar { rows, cols },
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.element_count == 0 {
            return Err(invalid("element_count", "must be >= 1"));
        }
        if !(self.element_spacing.is_finite() && self.element_spacing > 0.0) {
            return Err(invalid("element_spacing", "must be positive"));
        }
        let n = self.orientation.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDirection(format!("array orientation has norm {n}")));
        }
        if let Layout::Planar { rows, cols } = self.layout {
            if rows * cols != self.element_count {
                return Err(invalid(
                    "layout",
                    format!("{rows}x{cols} does not hold {} elements", self.element_count),
                ));
            }
        }
        Ok(self)
    }

    /// Same layout family with a different element count. Planar layouts keep
    /// their column count when it divides `n`, otherwise fall back to linear.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let layout = match self.layout {
            Layout::Planar { cols, .. } if cols > 0 && n.is_multiple_of(cols) => {
                Layout::Planar { rows: n / cols, cols }
            }
            _ => Layout::Linear,
        };
        Self {
            element_count: n,
            layout,
            ..*self
        }
        .validated()
    }

    /// In-plane axes (column axis, row axis).
    pub fn axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let u = self.orientation;
        let reference = if u.z.abs() > 0.999 { Vector3::x() } else { Vector3::z() };
        let v = (reference - u * u.dot(&reference)).normalize();
        (u, v)
    }

    /// Element offsets relative to the array reference point.
    pub fn element_offsets(&self) -> Vec<Vector3<f64>> {
        let d = self.element_spacing;
        match self.layout {
            Layout::Linear => (0..self.element_count)
                .map(|n| self.orientation * (n as f64 * d))
                .collect(),
            Layout::Planar { rows, cols } => {
                let (u, v) = self.axes();
                let mut out = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        out.push(u * (c as f64 * d) + v * (r as f64 * d));
                    }
                }
                out
            }
        }
    }
}

/// An array (or single antenna) placed in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub position: Position,
    pub geometry: ArrayGeometry,
}

impl Endpoint {
    pub fn single(position: Position) -> Self {
        Self {
            position,
            geometry: ArrayGeometry::single(),
        }
    }
}

/// Complex channel block, `rx_dim x tx_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<C64>,
    pub wavelength: f64,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<C64>, wavelength: f64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("channel has an empty dimension".into()));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("channel entry"));
        }
        Ok(Self { entries, wavelength })
    }

    pub fn rx_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tx_dim(&self) -> usize {
        self.entries.ncols()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Column `j` as a vector (the channel seen from transmit antenna `j`).
    pub fn column(&self, j: usize) -> DVector<C64> {
        self.entries.column(j).into_owned()
    }

    /// Row `i` transposed into a column vector (no conjugation).
    pub fn row_vector(&self, i: usize) -> DVector<C64> {
        self.entries.row(i).transpose()
    }
}

/// Far-field response; entry `n` is `exp(-j 2 pi / lambda * <p_n, direction>)`.
pub fn steering_vector(geometry: &ArrayGeometry, direction: &Vector3<f64>, wavelength: f64) -> Result<DVector<C64>> {
    let norm = direction.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::InvalidDirection("zero or non-finite direction".into()));
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDirection(format!("direction has norm {norm}")));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(invalid("wavelength", "must be positive"));
    }
    let k = 2.0 * std::f64::consts::PI / wavelength;
    Ok(DVector::from_iterator(
        geometry.element_count,
        geometry
            .element_offsets()
            .into_iter()
            .map(|p| C64::from_polar(1.0, -k * p.dot(direction))),
    ))
}

/// Rank-1 line-of-sight channel from `tx` to `rx`.
pub fn los_channel(tx: &Endpoint, rx: &Endpoint, model: &PathLossModel, wavelength: f64) -> Result<ChannelMatrix> {
    let d = tx.position.distance(&rx.position);
    if d == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    let u = tx.position.direction_to(&rx.position)?;
    let a_tx = steering_vector(&tx.geometry, &u, wavelength)?;
    let a_rx = steering_vector(&rx.geometry, &u, wavelength)?;
    let amp = path_loss(d, model)?.sqrt();
    let common = C64::from_polar(amp, -2.0 * std::f64::consts::PI * d / wavelength);
    let entries = (a_rx * a_tx.adjoint()) * common;
    ChannelMatrix::new(entries, wavelength)
}

/// Rician mixture of a LoS component and i.i.d. circular Gaussian scattering,
/// normalized so `E[||H||_F^2] = ||los||_F^2`. `k_factor = inf` returns `los`.
pub fn rician_channel(los: &ChannelMatrix, k_factor: f64, seed: u64) -> Result<ChannelMatrix> {
    if k_factor.is_nan() || k_factor < 0.0 {
        return Err(invalid("k_factor", format!("{k_factor} must be >= 0")));
    }
    if k_factor.is_infinite() {
        return Ok(los.clone());
    }
    let (r, c) = los.entries.shape();
    let var = los.frobenius_sq() / (r * c) as f64;
    let sigma = (var / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scatter = DMatrix::from_fn(r, c, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * sigma, im * sigma)
    });
    let w_los = (k_factor / (k_factor + 1.0)).sqrt();
    let w_nlos = (1.0 / (k_factor + 1.0)).sqrt();
    let entries = los.entries.map(|z| z * w_los) + scatter.map(|z| z * w_nlos);
    ChannelMatrix::new(entries, los.wavelength)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
