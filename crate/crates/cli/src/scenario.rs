//! Scenario files: TOML with every free parameter explicit. Parsing fills in
//! defaults and `Scenario::to_toml` echoes the normalized result.

use std::path::Path;

use irs_core::irs::{ActiveParams, IrsPanel, PanelKind, PowerConstraint};
use irs_core::link::{Area, TransmitBudget};
use irs_core::propagation::{dbm_to_watts, wavelength, ArrayGeometry, Endpoint, LinkModels, PathLossModel, Position};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

fn d_carrier() -> f64 {
    2.6e9
}
fn d_tx_power() -> f64 {
    30.0
}
fn d_noise() -> f64 {
    -90.0
}
fn d_amp_noise() -> f64 {
    -70.0
}
fn d_k_factor() -> f64 {
    f64::INFINITY
}
fn d_one() -> usize {
    1
}
fn d_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}
fn d_spacing() -> f64 {
    0.5
}
fn d_amp_budget() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "d_carrier")]
    pub carrier_hz: f64,
    #[serde(default = "d_tx_power")]
    pub tx_power_dbm: f64,
    #[serde(default = "d_noise")]
    pub noise_dbm: f64,
    /// Amplification noise per active element.
    #[serde(default = "d_amp_noise")]
    pub amp_noise_dbm: f64,
    /// Rician K-factor of the inter-IRS channel; `inf` is pure LoS.
    #[serde(default = "d_k_factor")]
    pub k_factor: f64,
    #[serde(default)]
    pub include_direct: bool,
    #[serde(default)]
    pub path_loss: PathLossConfig,
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeConfig>,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<ObstacleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig2: Option<Fig2Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig3: Option<Fig3Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig4: Option<Fig4Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<RoutingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fieldtrial: Option<FieldtrialConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossConfig {
    /// Path loss at the 1 m reference distance.
    pub beta0_db: f64,
    pub bs_irs: f64,
    pub irs_user: f64,
    pub bs_user: f64,
    pub inter_irs: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            beta0_db: -30.0,
            bs_irs: 2.2,
            irs_user: 2.8,
            bs_user: 3.5,
            inter_irs: 2.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Bs,
    User,
    Irs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrsKind {
    #[default]
    Passive,
    Active,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    Total,
    PerElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    pub role: NodeRole,
    /// Meters; z is the height above ground.
    pub position: [f64; 3],
    /// Antennas for BSs and users, reflecting elements for IRSs.
    #[serde(default = "d_one")]
    pub elements: usize,
    /// Column count of a planar array; absent means linear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<usize>,
    #[serde(default = "d_axis")]
    pub axis: [f64; 3],
    #[serde(default = "d_spacing")]
    pub spacing_wavelengths: f64,
    #[serde(default)]
    pub kind: IrsKind,
    /// Active elements of a hybrid panel.
    #[serde(default)]
    pub n_active: usize,
    #[serde(default = "d_amp_budget")]
    pub amp_budget_dbm: f64,
    #[serde(default)]
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "snake_case")]
pub enum ObstacleConfig {
    Segment { a: [f64; 2], b: [f64; 2] },
    Box { min: [f64; 2], max: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Config {
    pub bs: String,
    pub user: String,
    /// K panels means the first K entries.
    pub panels: Vec<String>,
    pub k_values: Vec<usize>,
    pub total_elements: usize,
    pub tx_power_dbm: Vec<f64>,
    #[serde(default = "d_coarse_step")]
    pub coarse_step: usize,
}

fn d_coarse_step() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Config {
    pub bs: String,
    pub users: Vec<String>,
    /// Its array axis and spacing are used for every panel.
    pub central: String,
    /// One panel per user, same order.
    pub distributed: Vec<String>,
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Config {
    pub bs: String,
    pub user: String,
    /// Active panel whose axis, spacing and budget both orders use.
    pub active: String,
    pub first_segment: [[f64; 3]; 2],
    pub second_segment: [[f64; 3]; 2],
    #[serde(default = "d_grid_step")]
    pub grid_step: f64,
    pub n_values: Vec<usize>,
    #[serde(default = "d_split_divisions")]
    pub split_divisions: usize,
    #[serde(default)]
    pub include_single_links: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationConfig>,
}

fn d_grid_step() -> f64 {
    1.0
}
fn d_split_divisions() -> usize {
    32
}

/// Element split between two fixed panels, kinds taken from the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationConfig {
    pub bs: String,
    pub user: String,
    pub irs1: String,
    pub irs2: String,
    pub n_values: Vec<usize>,
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub include_single_links: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementConfig {
    pub tx: String,
    pub rx: String,
    /// Panel template; its position is ignored.
    pub panel: String,
    #[serde(default = "d_standoff")]
    pub standoff: f64,
    #[serde(default = "d_grid_step")]
    pub grid_step: f64,
    #[serde(default = "d_refinement")]
    pub refinement_levels: u32,
    /// Horizontal rectangle to search instead of the Tx-Rx segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangle: Option<RectangleConfig>,
    /// Active element counts for the hybrid comparison; empty skips it.
    #[serde(default)]
    pub hybrid_n_active: Vec<usize>,
}

fn d_standoff() -> f64 {
    1.0
}
fn d_refinement() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaConfig {
    pub center: [f64; 2],
    pub half_width: [f64; 2],
    pub z: f64,
    #[serde(default = "d_grid")]
    pub grid: [usize; 2],
}

fn d_grid() -> [usize; 2] {
    [Area::DEFAULT_GRID, Area::DEFAULT_GRID]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub bs: String,
    pub bs_side_irs: String,
    pub user_side_irs: String,
    pub area: AreaConfig,
    pub n_values: Vec<usize>,
    /// D-MIMO BS counts; the BSs sit on an arc around the BS-side panel.
    pub b_values: Vec<usize>,
    pub dmimo_radius: f64,
    /// Angular spread of the arc, radians, centered on the direction from the
    /// panel to `bs`.
    pub dmimo_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingConfig {
    pub bs: String,
    pub user: String,
    pub max_hops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldtrialConfig {
    /// Measurement log, relative to the scenario file; absent uses the
    /// bundled synthetic log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
    /// Thresholds whose "fraction at or below" is reported.
    #[serde(default = "d_thresholds")]
    pub rsrp_thresholds_dbm: Vec<f64>,
}

fn d_thresholds() -> Vec<f64> {
    vec![-110.0, -100.0, -90.0]
}

/// 1-based line of the first occurrence of `needle`, for error messages.
fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.lines().position(|l| l.contains(needle)).map(|i| i + 1)
}

/// 1-based line on which `key` is assigned.
fn key_line(text: &str, key: &str) -> Option<usize> {
    if key.is_empty() {
        return None;
    }
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| {
        let field = e.message().split('`').nth(1).unwrap_or("").to_string();
        // unknown keys get the span of their enclosing table
        let line = key_line(text, &field).or_else(|| e.span().map(|r| text[..r.start].lines().count().max(1)));
        CliError::Scenario {
            field,
            line,
            message: e.message().to_string(),
        }
    })?;
    s.validate().map_err(|e| match e {
        CliError::Scenario { field, message, .. } => {
            let leaf = field.rsplit('.').next().unwrap_or(&field).to_string();
            CliError::Scenario {
                line: line_of(text, &format!("{leaf} ")).or_else(|| line_of(text, &leaf)),
                field,
                message,
            }
        }
        e => e,
    })?;
    Ok(s)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

fn bad(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Scenario {
        field: field.into(),
        line: None,
        message: message.into(),
    }
}

impl Scenario {
    /// Normalized dump with every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the normalized dump.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(bad(name, format!("{v} is not finite")))
            }
        };
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(bad("carrier_hz", "must be positive"));
        }
        finite("tx_power_dbm", self.tx_power_dbm)?;
        finite("noise_dbm", self.noise_dbm)?;
        finite("amp_noise_dbm", self.amp_noise_dbm)?;
        if self.k_factor.is_nan() || self.k_factor < 0.0 {
            return Err(bad("k_factor", "must be >= 0 (inf for pure LoS)"));
        }
        let pl = &self.path_loss;
        for (name, a) in [
            ("path_loss.bs_irs", pl.bs_irs),
            ("path_loss.irs_user", pl.irs_user),
            ("path_loss.bs_user", pl.bs_user),
            ("path_loss.inter_irs", pl.inter_irs),
        ] {
            if !(a.is_finite() && a > 0.0) {
                return Err(bad(name, "path-loss exponent must be positive"));
            }
        }
        finite("path_loss.beta0_db", pl.beta0_db)?;
        for (i, n) in self.nodes.iter().enumerate() {
            let f = |k: &str| format!("node[{i}].{k}");
            if self.nodes[..i].iter().any(|m| m.id == n.id) {
                return Err(bad(f("id"), format!("duplicate node id `{}`", n.id)));
            }
            if n.position.iter().any(|v| !v.is_finite()) || n.position[2] < 0.0 {
                return Err(bad(f("position"), "must be finite with z >= 0"));
            }
            if n.elements == 0 {
                return Err(bad(f("elements"), "must be >= 1"));
            }
            if let Some(c) = n.columns {
                if c == 0 || n.elements % c != 0 {
                    return Err(bad(
                        f("columns"),
                        format!("{c} does not divide {} elements", n.elements),
                    ));
                }
            }
            let norm = Vector3::from(n.axis).norm();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(bad(f("axis"), "must be a non-zero vector"));
            }
            if !(n.spacing_wavelengths.is_finite() && n.spacing_wavelengths > 0.0) {
                return Err(bad(f("spacing_wavelengths"), "must be positive"));
            }
            finite(&f("amp_budget_dbm"), n.amp_budget_dbm)?;
            if n.kind == IrsKind::Hybrid && n.n_active > n.elements {
                return Err(bad(f("n_active"), "exceeds the element count"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let pts = match o {
                ObstacleConfig::Segment { a, b } => [a, b],
                ObstacleConfig::Box { min, max } => {
                    if max[0] < min[0] || max[1] < min[1] {
                        return Err(bad(format!("obstacle[{i}].max"), "must not be below min"));
                    }
                    [min, max]
                }
            };
            if pts.iter().flat_map(|p| p.iter()).any(|v| !v.is_finite()) {
                return Err(bad(format!("obstacle[{i}]"), "coordinates must be finite"));
            }
        }
        self.validate_sections()
    }

    fn expect_role(&self, field: &str, id: &str, role: NodeRole) -> Result<()> {
        match self.nodes.iter().find(|n| n.id == id) {
            None => Err(bad(field, format!("unknown node `{id}`"))),
            Some(n) if n.role != role => Err(bad(field, format!("node `{id}` is a {:?}, expected {role:?}", n.role))),
            Some(_) => Ok(()),
        }
    }

    fn validate_sections(&self) -> Result<()> {
        use NodeRole::*;
        let nonempty = |field: &str, len: usize| {
            if len == 0 {
                Err(bad(field, "must not be empty"))
            } else {
                Ok(())
            }
        };
        if let Some(c) = &self.fig2 {
            self.expect_role("fig2.bs", &c.bs, Bs)?;
            self.expect_role("fig2.user", &c.user, User)?;
            for p in &c.panels {
                self.expect_role("fig2.panels", p, Irs)?;
            }
            nonempty("fig2.k_values", c.k_values.len())?;
            nonempty("fig2.tx_power_dbm", c.tx_power_dbm.len())?;
            for &k in &c.k_values {
                if k == 0 || k > c.panels.len() || k > c.total_elements {
                    return Err(bad(
                        "fig2.k_values",
                        format!("K = {k} needs 1..={} panels", c.panels.len()),
                    ));
                }
            }
            if c.coarse_step == 0 {
                return Err(bad("fig2.coarse_step", "must be >= 1"));
            }
        }
        if let Some(c) = &self.fig3 {
            self.expect_role("fig3.bs", &c.bs, Bs)?;
            for u in &c.users {
                self.expect_role("fig3.users", u, User)?;
            }
            self.expect_role("fig3.central", &c.central, Irs)?;
            for d in &c.distributed {
                self.expect_role("fig3.distributed", d, Irs)?;
            }
            nonempty("fig3.users", c.users.len())?;
            if c.distributed.len() != c.users.len() {
                return Err(bad("fig3.distributed", "needs one panel per user"));
            }
            nonempty("fig3.n_values", c.n_values.len())?;
            if let Some(n) = c.n_values.iter().find(|n| **n == 0 || **n % c.users.len() != 0) {
                return Err(bad(
                    "fig3.n_values",
                    format!("{n} does not split evenly over {} users", c.users.len()),
                ));
            }
        }
        if let Some(c) = &self.fig4 {
            self.expect_role("fig4.bs", &c.bs, Bs)?;
            self.expect_role("fig4.user", &c.user, User)?;
            self.expect_role("fig4.active", &c.active, Irs)?;
            nonempty("fig4.n_values", c.n_values.len())?;
            if c.n_values.iter().any(|n| *n < 2) {
                return Err(bad("fig4.n_values", "every N must be >= 2"));
            }
            if !(c.grid_step.is_finite() && c.grid_step > 0.0) {
                return Err(bad("fig4.grid_step", "must be positive"));
            }
            if let Some(a) = &c.allocation {
                self.expect_role("fig4.allocation.bs", &a.bs, Bs)?;
                self.expect_role("fig4.allocation.user", &a.user, User)?;
                self.expect_role("fig4.allocation.irs1", &a.irs1, Irs)?;
                self.expect_role("fig4.allocation.irs2", &a.irs2, Irs)?;
                if a.n_values.iter().any(|n| *n < 2) {
                    return Err(bad("fig4.allocation.n_values", "every N must be >= 2"));
                }
            }
        }
        if let Some(c) = &self.placement {
            self.expect_role("placement.tx", &c.tx, Bs)?;
            self.expect_role("placement.rx", &c.rx, User)?;
            self.expect_role("placement.panel", &c.panel, Irs)?;
            if !(c.grid_step.is_finite() && c.grid_step > 0.0) {
                return Err(bad("placement.grid_step", "must be positive"));
            }
            if !(c.standoff.is_finite() && c.standoff >= 0.0) {
                return Err(bad("placement.standoff", "must be >= 0"));
            }
            let n = self.node(&c.panel)?.elements;
            if c.hybrid_n_active.iter().any(|k| *k > n) {
                return Err(bad(
                    "placement.hybrid_n_active",
                    format!("exceeds the panel's {n} elements"),
                ));
            }
        }
        if let Some(c) = &self.coverage {
            self.expect_role("coverage.bs", &c.bs, Bs)?;
            self.expect_role("coverage.bs_side_irs", &c.bs_side_irs, Irs)?;
            self.expect_role("coverage.user_side_irs", &c.user_side_irs, Irs)?;
            nonempty("coverage.n_values", c.n_values.len())?;
            nonempty("coverage.b_values", c.b_values.len())?;
            if c.b_values.contains(&0) {
                return Err(bad("coverage.b_values", "every B must be >= 1"));
            }
            if c.area.half_width.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
                return Err(bad("coverage.area.half_width", "must be >= 0"));
            }
            if !(c.dmimo_radius.is_finite() && c.dmimo_radius > 0.0) {
                return Err(bad("coverage.dmimo_radius", "must be positive"));
            }
        }
        if let Some(c) = &self.routing {
            self.expect_role("routing.bs", &c.bs, Bs)?;
            self.expect_role("routing.user", &c.user, User)?;
            if c.max_hops == 0 {
                return Err(bad("routing.max_hops", "must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Result<&NodeConfig> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| bad("node", format!("unknown node `{id}`")))
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    pub fn models(&self) -> Result<LinkModels> {
        let pl = &self.path_loss;
        let beta0 = 10f64.powf(pl.beta0_db / 10.0);
        let m = |a: f64| PathLossModel::new(beta0, a);
        Ok(LinkModels {
            bs_irs: m(pl.bs_irs)?,
            irs_user: m(pl.irs_user)?,
            bs_user: m(pl.bs_user)?,
            inter_irs: m(pl.inter_irs)?,
        })
    }

    pub fn budget(&self) -> Result<TransmitBudget> {
        Ok(TransmitBudget::new(
            dbm_to_watts(self.tx_power_dbm),
            dbm_to_watts(self.noise_dbm),
        )?)
    }

    pub fn position(&self, id: &str) -> Result<Position> {
        let p = self.node(id)?.position;
        Ok(Position::new(p[0], p[1], p[2])?)
    }

    /// Array geometry of a node, optionally resized.
    pub fn geometry(&self, id: &str, elements: Option<usize>) -> Result<ArrayGeometry> {
        let n = self.node(id)?;
        let axis = Vector3::from(n.axis).normalize();
        let spacing = n.spacing_wavelengths * self.wavelength();
        let g = match n.columns {
            Some(c) => ArrayGeometry::planar(n.elements / c, c, spacing, axis)?,
            None => ArrayGeometry::linear(n.elements, spacing, axis)?,
        };
        Ok(match elements {
            Some(k) => g.resized(k)?,
            None => g,
        })
    }

    pub fn endpoint(&self, id: &str) -> Result<Endpoint> {
        Ok(Endpoint {
            position: self.position(id)?,
            geometry: self.geometry(id, None)?,
        })
    }

    pub fn active_params(&self, id: &str) -> Result<ActiveParams> {
        let n = self.node(id)?;
        Ok(ActiveParams {
            budget: dbm_to_watts(n.amp_budget_dbm),
            constraint: match n.constraint {
                Constraint::Total => PowerConstraint::Total,
                Constraint::PerElement => PowerConstraint::PerElement,
            },
            noise_power: dbm_to_watts(self.amp_noise_dbm),
        })
    }

    pub fn panel_kind(&self, id: &str) -> Result<PanelKind> {
        let n = self.node(id)?;
        Ok(match n.kind {
            IrsKind::Passive => PanelKind::Passive,
            IrsKind::Active => PanelKind::Active(self.active_params(id)?),
            IrsKind::Hybrid => PanelKind::Hybrid {
                n_active: n.n_active,
                active: self.active_params(id)?,
            },
        })
    }

    /// Panel at the node's position, optionally resized (a hybrid panel keeps
    /// its active count, capped at the new size).
    pub fn panel(&self, id: &str, elements: Option<usize>) -> Result<IrsPanel> {
        let geometry = self.geometry(id, elements)?;
        let kind = match self.panel_kind(id)? {
            PanelKind::Hybrid { n_active, active } if n_active >= geometry.element_count => PanelKind::Active(active),
            k => k,
        };
        Ok(IrsPanel::new(self.position(id)?, geometry, kind)?)
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Mismatch(format!("scenario has no [{name}] section")))
    }
}
