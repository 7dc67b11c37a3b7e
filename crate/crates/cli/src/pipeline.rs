//! Turns a validated [`Plan`] into output tables.

use wellsplit::discrimination::READOUT_TOLERANCE;
use wellsplit::insertion::NODAL_TOLERANCE;
use wellsplit::{
    density_grid, insertion_energy_diagnostics, is_nodal, split, sweep, CostBreakdown, DensitySource,
    DiscriminationSetup, Result, SplitState,
};

use crate::config::Plan;
use crate::table::{Cell, Table};

/// Every state of the plan, split at the insertion point.
pub fn split_states(plan: &Plan) -> Result<Vec<(&'static str, SplitState)>> {
    plan.states()
        .into_iter()
        .map(|(label, s)| Ok((label, split(s, plan.insertion_point, plan.n_cut)?)))
        .collect()
}

pub fn coefficients(plan: &Plan, splits: &[(&'static str, SplitState)]) -> Table {
    let mut t = Table::new(
        "coefficients",
        &["state", "basis", "n", "re", "im", "n_cut", "tolerance", "truncation_residual"],
    );
    for (label, sp) in splits {
        let parts = [("parent", sp.parent()), ("left", sp.left()), ("right", sp.right())];
        for (basis, state) in parts {
            for (k, c) in state.coefficients().iter().enumerate() {
                t.push(vec![
                    (*label).into(),
                    basis.into(),
                    (k + 1).into(),
                    c.re.into(),
                    c.im.into(),
                    plan.n_cut.into(),
                    NODAL_TOLERANCE.into(),
                    sp.truncation_residual().into(),
                ]);
            }
        }
    }
    t
}

/// Insertion report plus the per-cutoff partial sums behind it.
pub fn insertion(plan: &Plan, splits: &[(&'static str, SplitState)]) -> Result<(Table, Table)> {
    let mut report = Table::new(
        "insertion_report",
        &[
            "state",
            "nodal",
            "pre_energy",
            "probability_left",
            "probability_right",
            "energy_left",
            "energy_right",
            "post_energy",
            "slope_left",
            "intercept_left",
            "slope_right",
            "intercept_right",
            "divergence_class",
            "energy_terms",
            "n_cut",
            "tolerance",
            "truncation_residual",
            "caveat",
        ],
    );
    let mut sums = Table::new(
        "energy_partial_sums",
        &["state", "terms", "left", "right", "n_cut", "tolerance", "truncation_residual"],
    );
    for (label, sp) in splits {
        let r = insertion_energy_diagnostics(sp, plan.energy_terms)?;
        report.push(vec![
            (*label).into(),
            r.nodal.into(),
            r.pre_energy.into(),
            r.compartment_probabilities.0.into(),
            r.compartment_probabilities.1.into(),
            r.left.total().into(),
            r.right.total().into(),
            r.post_energy().into(),
            r.left.slope.into(),
            r.left.intercept.into(),
            r.right.slope.into(),
            r.right.intercept.into(),
            r.divergence_class.to_string().into(),
            r.energy_terms.into(),
            plan.n_cut.into(),
            NODAL_TOLERANCE.into(),
            r.truncation_residual.into(),
            r.caveat().unwrap_or("").into(),
        ]);
        for (k, (l, rt)) in r.left.partial_sums.iter().zip(&r.right.partial_sums).enumerate() {
            sums.push(vec![
                (*label).into(),
                (k + 1).into(),
                (*l).into(),
                (*rt).into(),
                plan.n_cut.into(),
                NODAL_TOLERANCE.into(),
                r.truncation_residual.into(),
            ]);
        }
    }
    Ok((report, sums))
}

fn setup(plan: &Plan) -> Option<Result<DiscriminationSetup>> {
    let b = plan.state_b.as_ref()?;
    Some(DiscriminationSetup::new(&plan.state_a, b, plan.insertion_point, plan.n_cut))
}

/// Cost summary and the side-channel posterior table. `None` for
/// single-state plans.
pub fn cost(plan: &Plan) -> Result<Option<(Table, Table, CostBreakdown)>> {
    let (Some(setup), Some(signal)) = (setup(plan), plan.signal) else {
        return Ok(None);
    };
    let c = setup?.cost(plan.prior, &signal)?;

    let mut summary = Table::new(
        "cost",
        &[
            "prior",
            "overlap_sq",
            "overlap_sq_after",
            "nodal_a",
            "nodal_b",
            "helstrom_baseline",
            "combined_cost",
            "n_cut",
            "tolerance",
            "truncation_residual",
        ],
    );
    summary.push(vec![
        c.prior.into(),
        c.overlap_sq.into(),
        c.overlap_sq_after.into(),
        c.nodal_a.into(),
        c.nodal_b.into(),
        c.helstrom_baseline.into(),
        c.combined_cost.into(),
        c.n_cut.into(),
        READOUT_TOLERANCE.into(),
        c.truncation_residual.into(),
    ]);

    let mut posterior = Table::new(
        "posterior",
        &["outcome", "probability", "posterior", "branch_cost", "n_cut", "tolerance", "truncation_residual"],
    );
    for row in &c.posterior_table {
        posterior.push(vec![
            row.outcome.clone().into(),
            row.probability.into(),
            row.posterior.into(),
            row.branch_cost.into(),
            c.n_cut.into(),
            READOUT_TOLERANCE.into(),
            c.truncation_residual.into(),
        ]);
    }
    Ok(Some((summary, posterior, c)))
}

/// Prior x detector-error grid. `None` when either axis is empty.
pub fn sweep_table(plan: &Plan) -> Result<Option<Table>> {
    let Some(b) = plan.state_b.as_ref() else {
        return Ok(None);
    };
    if plan.sweep.priors.is_empty() || plan.sweep.detector_errors.is_empty() {
        return Ok(None);
    }
    let template = wellsplit::Scenario::new(
        plan.prior,
        plan.state_a.clone(),
        b.clone(),
        plan.insertion_point,
        plan.signal.unwrap_or(wellsplit::SignalModel::symmetric_detector(0.5)),
    )?;
    let rows = sweep(&template, &plan.sweep, plan.n_cut)?;
    let mut t = Table::new(
        "sweep",
        &[
            "prior_index",
            "error_index",
            "prior",
            "detector_error",
            "overlap_sq",
            "helstrom_baseline",
            "combined_cost",
            "n_cut",
            "tolerance",
            "truncation_residual",
        ],
    );
    for r in rows {
        let c = &r.breakdown;
        t.push(vec![
            r.prior_index.into(),
            r.error_index.into(),
            c.prior.into(),
            r.detector_error.into(),
            c.overlap_sq.into(),
            c.helstrom_baseline.into(),
            c.combined_cost.into(),
            c.n_cut.into(),
            READOUT_TOLERANCE.into(),
            c.truncation_residual.into(),
        ]);
    }
    Ok(Some(t))
}

/// One density table per state, columns `t, x, density`.
pub fn density(plan: &Plan, splits: &[(&'static str, SplitState)]) -> Result<Vec<Table>> {
    let Some(cfg) = &plan.density else {
        return Ok(Vec::new());
    };
    let mut tables = Vec::new();
    for ((label, state), (_, sp)) in plan.states().into_iter().zip(splits) {
        let source = if cfg.after_insertion {
            DensitySource::Split(sp)
        } else {
            DensitySource::State(state)
        };
        let grid = density_grid(source, &cfg.times, cfg.n_points)?;
        let name = if label == "state_a" { "density_state_a" } else { "density_state_b" };
        let mut t = Table::new(name, &["t", "x", "density"]);
        for (i, &time) in grid.times.iter().enumerate() {
            for (x, d) in grid.positions.iter().zip(&grid.density[i]) {
                t.push(vec![Cell::Float(time), Cell::Float(*x), Cell::Float(*d)]);
            }
        }
        tables.push(t);
    }
    Ok(tables)
}

/// Which states vanish at the insertion point.
pub fn nodal_flags(plan: &Plan) -> Result<Vec<(&'static str, bool)>> {
    plan.states()
        .into_iter()
        .map(|(label, s)| Ok((label, is_nodal(s, plan.insertion_point, NODAL_TOLERANCE)?)))
        .collect()
}
