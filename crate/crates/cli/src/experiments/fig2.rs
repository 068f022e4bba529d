//! MIMO capacity with K panels sharing a fixed element budget, versus
//! transmit power.

use irs_core::deploy::allocate_among;
use irs_core::link::{
    assemble_from_channels, configure_mimo_panels, mimo_capacity, multi_irs_channels, TransmitBudget,
};
use irs_core::propagation::{dbm_to_watts, los_channel, ChannelMatrix, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::scenario::Scenario;
use crate::table::ResultTable;
use crate::Result;

/// `terms[k][n - 1]`: co-phased contribution of panel `k` with `n` elements.
pub struct PanelTerms {
    pub terms: Vec<Vec<DMatrix<C64>>>,
    pub base: DMatrix<C64>,
    pub wavelength: f64,
}

pub fn panel_terms(s: &Scenario, panels: &[String], max_elements: usize) -> Result<PanelTerms> {
    let c = s.section(&s.fig2, "fig2")?;
    let bs = s.endpoint(&c.bs)?;
    let user = s.endpoint(&c.user)?;
    let models = s.models()?;
    let lambda = s.wavelength();
    let terms = panels
        .iter()
        .map(|id| {
            (1..=max_elements)
                .into_par_iter()
                .map(|n| {
                    let panel = s.panel(id, Some(n))?;
                    let ch = multi_irs_channels(&bs, &user, std::slice::from_ref(&panel), &models, lambda, false)?;
                    let configured = configure_mimo_panels(&ch, &[panel])?;
                    Ok(assemble_from_channels(&ch, &configured)?.entries)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let base = if s.include_direct {
        los_channel(&bs, &user, &models.bs_user, lambda)?.entries
    } else {
        DMatrix::zeros(user.geometry.element_count, bs.geometry.element_count)
    };
    Ok(PanelTerms {
        terms,
        base,
        wavelength: lambda,
    })
}

impl PanelTerms {
    pub fn capacity(&self, split: &[usize], budget: &TransmitBudget) -> irs_core::Result<f64> {
        let mut h = self.base.clone();
        for (k, &n) in split.iter().enumerate() {
            h += &self.terms[k][n - 1];
        }
        Ok(mimo_capacity(budget, &ChannelMatrix::new(h, self.wavelength)?).rate)
    }
}

pub fn run(s: &Scenario) -> Result<Vec<ResultTable>> {
    let c = s.section(&s.fig2, "fig2")?;
    let max_k = *c.k_values.iter().max().expect("validated non-empty");
    let terms = panel_terms(s, &c.panels[..max_k], c.total_elements)?;
    let noise = dbm_to_watts(s.noise_dbm);

    let mut columns = vec!["tx_power_dbm".to_string()];
    for k in &c.k_values {
        columns.push(format!("capacity_k{k}"));
    }
    for k in &c.k_values {
        for i in 1..=*k {
            columns.push(format!("n_k{k}_{i}"));
        }
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = ResultTable::new("fig2", &cols);
    table.meta("total_elements", c.total_elements);
    table.meta("panels", c.panels[..max_k].join(" "));

    for &p_dbm in &c.tx_power_dbm {
        let budget = TransmitBudget::new(dbm_to_watts(p_dbm), noise)?;
        let mut rates = Vec::new();
        let mut splits = Vec::new();
        for &k in &c.k_values {
            let sol = allocate_among(c.total_elements, k, c.coarse_step, |split| {
                terms.capacity(split, &budget)
            })?;
            rates.push(sol.objective);
            splits.extend(sol.element_split.iter().map(|n| *n as f64));
        }
        let mut row = vec![p_dbm];
        row.extend(rates);
        row.extend(splits);
        table.push(row);
    }
    Ok(vec![table])
}
