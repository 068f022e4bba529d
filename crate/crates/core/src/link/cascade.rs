//! Multi-IRS cascades: double reflection (optionally with the two
//! single-reflection links) and general H-hop chains.
//!
//! Every active panel injects amplification noise at its input; that noise is
//! carried through all downstream reflections with full matrix products and
//! also loads the power budget of downstream active panels.

use nalgebra::{DMatrix, DVector};

use super::{receiver_noise, LinkReport, NoiseTerm, TransmitBudget};
use crate::error::{Error, Result};
use crate::irs::{amplification_for_incident, co_phase_align_to, verify_power_profile, IrsPanel};
use crate::propagation::C64;

/// Dominant left/right singular vectors by power iteration, seeded with the
/// strongest row so rank-1 channels converge immediately.
pub fn dominant_singular_pair(m: &DMatrix<C64>) -> (DVector<C64>, DVector<C64>) {
    let (rows, cols) = m.shape();
    let row = (0..rows)
        .max_by(|&a, &b| {
            let na: f64 = m.row(a).iter().map(|z| z.norm_sqr()).sum();
            let nb: f64 = m.row(b).iter().map(|z| z.norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .unwrap_or(0);
    let mut v: DVector<C64> = m.row(row).adjoint();
    if v.norm() == 0.0 {
        let mut u = DVector::zeros(rows);
        let mut v = DVector::zeros(cols);
        u[0] = C64::new(1.0, 0.0);
        v[0] = C64::new(1.0, 0.0);
        return (u, v);
    }
    v /= C64::from(v.norm());
    for _ in 0..50 {
        let mut next = m.adjoint() * (m * &v);
        let norm = next.norm();
        next /= C64::from(norm);
        let delta = (&next - &v).norm();
        v = next;
        if delta < 1e-13 {
            break;
        }
    }
    let mut u = m * &v;
    let nu = u.norm();
    u /= C64::from(nu);
    (u, v)
}

fn hadamard(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.component_mul(b)
}

fn active_mask_noise(panel: &IrsPanel) -> Vec<f64> {
    (0..panel.element_count()).map(|n| panel.element_noise(n)).collect()
}

fn check_power(panel: &IrsPanel, incident: &[f64], label: &str) -> Result<()> {
    let rep = verify_power_profile(panel, incident);
    if rep.satisfied {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{label}: output power exceeds budget by factor {:.6}",
            rep.excess_ratio
        )))
    }
}

/// Single-reflection links that accompany a double-reflection cascade:
/// `g1` from IRS 1 to the user and `f2` from the BS to IRS 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleLinks {
    pub g1: DVector<C64>,
    pub f2: DVector<C64>,
}

struct DoubleParts {
    coefficient: C64,
    noise1: f64,
    noise2: f64,
    incident1: Vec<f64>,
    incident2: Vec<f64>,
}

fn double_parts(
    p_t: f64,
    h1: &DVector<C64>,
    d: &DMatrix<C64>,
    h2: &DVector<C64>,
    panel1: &IrsPanel,
    panel2: &IrsPanel,
    single: Option<&SingleLinks>,
) -> DoubleParts {
    let c1 = panel1.coefficients();
    let c2 = panel2.coefficients();
    let t1 = hadamard(&c1, h1);
    let mut x2 = d * &t1;
    if let Some(s) = single {
        x2 += &s.f2;
    }
    let out2 = hadamard(h2, &c2);
    let mut coefficient = out2.dot(&x2);
    if let Some(s) = single {
        coefficient += s.g1.dot(&t1);
    }

    let sigma1 = active_mask_noise(panel1);
    let sigma2 = active_mask_noise(panel2);
    let mut row1 = d.transpose() * &out2;
    if let Some(s) = single {
        row1 += &s.g1;
    }
    let row1 = hadamard(&row1, &c1);
    let noise1: f64 = row1.iter().zip(&sigma1).map(|(r, s)| s * r.norm_sqr()).sum();
    let noise2: f64 = out2.iter().zip(&sigma2).map(|(r, s)| s * r.norm_sqr()).sum();

    let incident1 = h1.iter().map(|h| p_t * h.norm_sqr()).collect();
    let has_noise1 = sigma1.iter().any(|&s| s > 0.0);
    let incident2 = (0..d.nrows())
        .map(|n| {
            let mut p = p_t * x2[n].norm_sqr();
            if has_noise1 {
                for m in 0..d.ncols() {
                    if sigma1[m] > 0.0 {
                        p += sigma1[m] * (d[(n, m)] * c1[m]).norm_sqr();
                    }
                }
            }
            p
        })
        .collect();
    DoubleParts {
        coefficient,
        noise1,
        noise2,
        incident1,
        incident2,
    }
}

fn check_double_dims(
    h1: &DVector<C64>,
    d: &DMatrix<C64>,
    h2: &DVector<C64>,
    panel1: &IrsPanel,
    panel2: &IrsPanel,
    single: Option<&SingleLinks>,
) -> Result<()> {
    let (n1, n2) = (panel1.element_count(), panel2.element_count());
    let ok = h1.len() == n1
        && d.ncols() == n1
        && d.nrows() == n2
        && h2.len() == n2
        && single.is_none_or(|s| s.g1.len() == n1 && s.f2.len() == n2);
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "chain h1[{}] -> D[{}x{}] -> h2[{}] does not match panels of {n1} and {n2} elements",
            h1.len(),
            d.nrows(),
            d.ncols(),
            h2.len()
        )))
    }
}

/// Closed-form SNR of `y = h2^T P2 (D P1 (h1 s + v1) + f2 s + v2) + g1^T P1 (h1 s + v1) + z`,
/// where the single-reflection terms `f2`, `g1` are present only when
/// `single` is given and `v_i` vanish on passive elements.
pub fn double_reflection(
    budget: &TransmitBudget,
    h1: &DVector<C64>,
    d_inter: &DMatrix<C64>,
    h2: &DVector<C64>,
    panel1: &IrsPanel,
    panel2: &IrsPanel,
    single: Option<&SingleLinks>,
) -> Result<LinkReport> {
    check_double_dims(h1, d_inter, h2, panel1, panel2, single)?;
    let parts = double_parts(budget.p_t, h1, d_inter, h2, panel1, panel2, single);
    check_power(panel1, &parts.incident1, "irs1")?;
    check_power(panel2, &parts.incident2, "irs2")?;
    let mut terms = vec![receiver_noise(budget.noise_power)];
    if panel1.active_count() > 0 {
        terms.push(NoiseTerm {
            label: "irs1 amplification".into(),
            power: parts.noise1,
        });
    }
    if panel2.active_count() > 0 {
        terms.push(NoiseTerm {
            label: "irs2 amplification".into(),
            power: parts.noise2,
        });
    }
    Ok(LinkReport::from_terms(budget.p_t * parts.coefficient.norm_sqr(), terms))
}

fn set_amplitude(panel: &mut IrsPanel, incident: &[f64]) -> Result<()> {
    let k = panel.active_count();
    if k == 0 {
        return Ok(());
    }
    let a = amplification_for_incident(panel, &incident[..k])?.factor;
    panel.config.amplitudes[..k].iter_mut().for_each(|x| *x = a);
    Ok(())
}

/// Co-phase both panels (alternating exact updates, seeded from the dominant
/// singular pair of the inter-IRS channel) and set active amplitudes in
/// propagation order.
pub fn configure_double(
    p_t: f64,
    h1: &DVector<C64>,
    d_inter: &DMatrix<C64>,
    h2: &DVector<C64>,
    panel1: &IrsPanel,
    panel2: &IrsPanel,
    single: Option<&SingleLinks>,
) -> Result<(IrsPanel, IrsPanel)> {
    check_double_dims(h1, d_inter, h2, panel1, panel2, single)?;
    let (_, v) = dominant_singular_pair(d_inter);
    let out1 = v.map(|z| z.conj());
    let mut cfg1 = co_phase_align_to(h1.as_slice(), out1.as_slice(), 0.0)?;
    let mut cfg2;
    let unit = |cfg: &crate::irs::ReflectionConfig| DVector::from_vec(cfg.coefficients());
    let mut sweep = 0;
    loop {
        let t1 = hadamard(&unit(&cfg1), h1);
        let mut x2 = d_inter * &t1;
        let mut fixed2 = C64::default();
        if let Some(s) = single {
            x2 += &s.f2;
            fixed2 = s.g1.dot(&t1);
        }
        cfg2 = co_phase_align_to(x2.as_slice(), h2.as_slice(), fixed2.arg())?;
        sweep += 1;
        if sweep > 2 {
            break;
        }
        let out2 = hadamard(h2, &unit(&cfg2));
        let mut row1 = d_inter.transpose() * &out2;
        let mut fixed1 = C64::default();
        if let Some(s) = single {
            row1 += &s.g1;
            fixed1 = out2.dot(&s.f2);
        }
        cfg1 = co_phase_align_to(h1.as_slice(), row1.as_slice(), fixed1.arg())?;
    }
    let mut p1 = panel1.clone().with_config(cfg1)?;
    let mut p2 = panel2.clone().with_config(cfg2)?;
    let incident1: Vec<f64> = h1.iter().map(|h| p_t * h.norm_sqr()).collect();
    set_amplitude(&mut p1, &incident1)?;
    let parts = double_parts(p_t, h1, d_inter, h2, &p1, &p2, single);
    set_amplitude(&mut p2, &parts.incident2)?;
    Ok((p1, p2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainEvaluation {
    pub report: LinkReport,
    pub coefficient: C64,
    /// Incident power per element at each panel (signal plus upstream noise).
    pub incident: Vec<Vec<f64>>,
}

fn check_chain(
    h_first: &DVector<C64>,
    inter: &[DMatrix<C64>],
    h_last: &DVector<C64>,
    panels: &[IrsPanel],
) -> Result<()> {
    if panels.is_empty() {
        return Err(Error::Empty("reflection chain"));
    }
    if inter.len() + 1 != panels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inter-panel channels for {} panels",
            inter.len(),
            panels.len()
        )));
    }
    if h_first.len() != panels[0].element_count() || h_last.len() != panels[panels.len() - 1].element_count() {
        return Err(Error::DimensionMismatch("end channels do not match the chain".into()));
    }
    for (i, d) in inter.iter().enumerate() {
        if d.ncols() != panels[i].element_count() || d.nrows() != panels[i + 1].element_count() {
            return Err(Error::DimensionMismatch(format!("inter-panel channel {i}")));
        }
    }
    Ok(())
}

/// Forward pass: incident power at each panel given current amplitudes.
fn chain_incident(p_t: f64, h_first: &DVector<C64>, inter: &[DMatrix<C64>], panels: &[IrsPanel]) -> Vec<Vec<f64>> {
    let mut x = h_first.clone();
    // transfer matrices from each upstream panel's injected noise to the current input
    let mut sources: Vec<(Vec<f64>, DMatrix<C64>)> = Vec::new();
    let mut out = Vec::with_capacity(panels.len());
    for (i, panel) in panels.iter().enumerate() {
        let n = panel.element_count();
        let incident: Vec<f64> = (0..n)
            .map(|k| {
                let mut p = p_t * x[k].norm_sqr();
                for (sigma, t) in &sources {
                    p += t.row(k).iter().zip(sigma).map(|(z, s)| s * z.norm_sqr()).sum::<f64>();
                }
                p
            })
            .collect();
        out.push(incident);
        if i + 1 == panels.len() {
            break;
        }
        let coef = panel.coefficients();
        let d = &inter[i];
        x = d * hadamard(&coef, &x);
        let scaled_d = DMatrix::from_fn(d.nrows(), n, |r, c| d[(r, c)] * coef[c]);
        for (_, t) in sources.iter_mut() {
            *t = &scaled_d * &*t;
        }
        let sigma = active_mask_noise(panel);
        if sigma.iter().any(|&s| s > 0.0) {
            sources.push((sigma, scaled_d));
        }
    }
    out
}

/// Closed-form SNR of the H-hop cascade
/// `y = direct s + h_last^T P_H D_{H-1} ... D_1 P_1 (h_first s + v_1) + ... + z`.
pub fn evaluate_chain(
    budget: &TransmitBudget,
    h_first: &DVector<C64>,
    inter: &[DMatrix<C64>],
    h_last: &DVector<C64>,
    panels: &[IrsPanel],
    direct: Option<C64>,
) -> Result<ChainEvaluation> {
    check_chain(h_first, inter, h_last, panels)?;
    let incident = chain_incident(budget.p_t, h_first, inter, panels);
    for (i, (panel, inc)) in panels.iter().zip(&incident).enumerate() {
        check_power(panel, inc, &format!("irs{}", i + 1))?;
    }
    let h = panels.len();
    let mut row = hadamard(h_last, &panels[h - 1].coefficients());
    let mut noise = vec![0.0; h];
    for i in (0..h).rev() {
        if i < h - 1 {
            row = hadamard(&(inter[i].transpose() * &row), &panels[i].coefficients());
        }
        noise[i] = row
            .iter()
            .zip(active_mask_noise(&panels[i]))
            .map(|(r, s)| s * r.norm_sqr())
            .sum();
    }
    let coefficient = row.dot(h_first) + direct.unwrap_or_default();
    let mut terms = vec![receiver_noise(budget.noise_power)];
    for (i, panel) in panels.iter().enumerate() {
        if panel.active_count() > 0 {
            terms.push(NoiseTerm {
                label: format!("irs{} amplification", i + 1),
                power: noise[i],
            });
        }
    }
    Ok(ChainEvaluation {
        report: LinkReport::from_terms(budget.p_t * coefficient.norm_sqr(), terms),
        coefficient,
        incident,
    })
}

/// Co-phase every panel of a chain and set active amplitudes in order.
pub fn configure_chain(
    p_t: f64,
    h_first: &DVector<C64>,
    inter: &[DMatrix<C64>],
    h_last: &DVector<C64>,
    panels: &[IrsPanel],
    direct: Option<C64>,
) -> Result<Vec<IrsPanel>> {
    check_chain(h_first, inter, h_last, panels)?;
    let h = panels.len();
    let mut out: Vec<IrsPanel> = panels
        .iter()
        .map(|p| {
            p.clone()
                .with_config(crate::irs::ReflectionConfig::identity(p.element_count()))
        })
        .collect::<Result<_>>()?;
    let reference = direct.filter(|d| d.norm() > 0.0).map_or(0.0, |d| d.arg());

    // seed: align each panel's input with the dominant direction of the next hop
    let mut x = h_first.clone();
    for i in 0..h {
        let target = if i + 1 < h {
            dominant_singular_pair(&inter[i]).1.map(|z| z.conj())
        } else {
            h_last.clone()
        };
        let cfg = co_phase_align_to(x.as_slice(), target.as_slice(), reference)?;
        out[i] = out[i].clone().with_config(cfg)?;
        if i + 1 < h {
            x = &inter[i] * hadamard(&out[i].coefficients(), &x);
        }
    }
    // exact coordinate updates
    for _ in 0..2 {
        for i in 0..h {
            let mut x = h_first.clone();
            for j in 0..i {
                x = &inter[j] * hadamard(&out[j].coefficients(), &x);
            }
            let mut row = h_last.clone();
            for j in (i + 1..h).rev() {
                row = hadamard(&row, &out[j].coefficients());
                row = inter[j - 1].transpose() * row;
            }
            let cfg = co_phase_align_to(x.as_slice(), row.as_slice(), reference)?;
            out[i] = out[i].clone().with_config(cfg)?;
        }
    }
    for i in 0..h {
        if out[i].active_count() > 0 {
            let incident = chain_incident(p_t, h_first, inter, &out[..=i]);
            set_amplitude(&mut out[i], &incident[i])?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irs::PanelKind;
    use crate::propagation::{los_channel, ArrayGeometry, Endpoint, LinkModels, Position};
    use nalgebra::Vector3;

    fn panel(pos: Position, n: usize) -> IrsPanel {
        IrsPanel::new(
            pos,
            ArrayGeometry::linear(n, 0.05, Vector3::y()).unwrap(),
            PanelKind::Passive,
        )
        .unwrap()
    }

    #[test]
    fn dominant_pair_of_rank_one() {
        let u = DVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0)]);
        let v = DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)]);
        let m = &u * v.adjoint();
        let (uu, vv) = dominant_singular_pair(&m);
        let s = (uu.adjoint() * &m * &vv)[(0, 0)].norm();
        assert!((s - u.norm() * v.norm()).abs() < 1e-12);
    }

    #[test]
    fn unit_double_reflection() {
        let one = DVector::from_element(1, C64::new(1.0, 0.0));
        let d = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let p = panel(Position::xy(0.0, 0.0), 1);
        let b = TransmitBudget::new(2.0, 0.5).unwrap();
        let r = double_reflection(&b, &one, &d, &one, &p, &p, None).unwrap();
        assert!((r.snr - 4.0).abs() < 1e-15);
    }

    #[test]
    fn double_passive_scales_as_n1_sq_n2_sq() {
        let lambda = 0.1;
        let models = LinkModels::default();
        let bs = Endpoint::single(Position::new(0.0, 0.0, 5.0).unwrap());
        let ue = Endpoint::single(Position::new(40.0, 0.0, 1.0).unwrap());
        let snr = |n1: usize, n2: usize| {
            let p1 = panel(Position::new(2.0, 3.0, 4.0).unwrap(), n1);
            let p2 = panel(Position::new(38.0, 3.0, 4.0).unwrap(), n2);
            let e1 = Endpoint {
                position: p1.position,
                geometry: p1.geometry,
            };
            let e2 = Endpoint {
                position: p2.position,
                geometry: p2.geometry,
            };
            let h1 = los_channel(&bs, &e1, &models.bs_irs, lambda).unwrap().column(0);
            let d = los_channel(&e1, &e2, &models.inter_irs, lambda).unwrap().entries;
            let h2 = los_channel(&e2, &ue, &models.irs_user, lambda).unwrap().row_vector(0);
            let (p1, p2) = configure_double(1.0, &h1, &d, &h2, &p1, &p2, None).unwrap();
            let b = TransmitBudget::new(1.0, 1e-12).unwrap();
            double_reflection(&b, &h1, &d, &h2, &p1, &p2, None).unwrap().snr
        };
        let base = snr(4, 4);
        assert!((snr(8, 4) / base - 4.0).abs() < 1e-9);
        assert!((snr(8, 8) / base - 16.0).abs() < 1e-9);
    }

    #[test]
    fn chain_of_two_matches_double() {
        let lambda = 0.1;
        let models = LinkModels::default();
        let bs = Endpoint::single(Position::new(0.0, 0.0, 5.0).unwrap());
        let ue = Endpoint::single(Position::new(40.0, 0.0, 1.0).unwrap());
        let p1 = panel(Position::new(2.0, 3.0, 4.0).unwrap(), 6);
        let p2 = panel(Position::new(30.0, 8.0, 4.0).unwrap(), 5);
        let e1 = Endpoint {
            position: p1.position,
            geometry: p1.geometry,
        };
        let e2 = Endpoint {
            position: p2.position,
            geometry: p2.geometry,
        };
        let h1 = los_channel(&bs, &e1, &models.bs_irs, lambda).unwrap().column(0);
        let d = los_channel(&e1, &e2, &models.inter_irs, lambda).unwrap().entries;
        let h2 = los_channel(&e2, &ue, &models.irs_user, lambda).unwrap().row_vector(0);
        let chain = configure_chain(1.0, &h1, std::slice::from_ref(&d), &h2, &[p1, p2], None).unwrap();
        let b = TransmitBudget::new(1.0, 1e-12).unwrap();
        let a = evaluate_chain(&b, &h1, std::slice::from_ref(&d), &h2, &chain, None).unwrap();
        let r = double_reflection(&b, &h1, &d, &h2, &chain[0], &chain[1], None).unwrap();
        assert!((a.report.snr / r.snr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_dimension_errors() {
        let one = DVector::from_element(1, C64::new(1.0, 0.0));
        let p = panel(Position::xy(0.0, 0.0), 2);
        let b = TransmitBudget::new(1.0, 1.0).unwrap();
        assert!(evaluate_chain(&b, &one, &[], &one, std::slice::from_ref(&p), None).is_err());
        assert!(evaluate_chain(&b, &one, &[], &one, &[], None).is_err());
        let d = DMatrix::from_element(3, 3, C64::new(1.0, 0.0));
        assert!(double_reflection(&b, &one, &d, &one, &p, &p, None).is_err());
    }
}
