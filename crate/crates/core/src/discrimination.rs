//! Bayes cost of telling two well states apart.
//!
//! The baseline is the Helstrom bound, which depends only on the prior and
//! the transition probability `K = |<a|b>|^2`. Inserting a barrier leaves
//! `K` unchanged but costs energy unless the insertion point is a node of
//! the state, so a measurement of that energy is a classical side-channel.
//! The combined strategy reads the side-channel, updates the prior, and then
//! runs the Helstrom measurement on the updated prior:
//!
//! `C = sum_o P(o) * helstrom(xi'(o), K)`.
//!
//! Concavity of the Helstrom cost in `xi` makes `C` never exceed the
//! baseline, with equality exactly when the signal is uninformative.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insertion::{is_nodal, split, NODAL_TOLERANCE};
use crate::quadrature::Quadrature;
use crate::insertion::SplitState;
use crate::wellbox::{same_geometry, BoxState};

/// Absolute tolerance used when integrating over Gaussian readouts.
pub const READOUT_TOLERANCE: f64 = 1e-12;

/// Half-width of the readout integration window, in standard deviations.
pub const READOUT_WINDOW_SIGMAS: f64 = 8.0;
const MAX_HALF_SEPARATION: f64 = 40.0;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Minimum error probability `1/2 - 1/2 sqrt(1 - 4 xi (1 - xi) K)`.
pub fn helstrom_cost(xi: f64, k: f64) -> Result<f64> {
    check_probability("prior", xi)?;
    check_probability("transition probability", k)?;
    Ok(helstrom_unchecked(xi, k))
}

// Rationalized form: 2 xi (1 - xi) K / (1 + sqrt(1 - 4 xi (1 - xi) K)).
fn helstrom_unchecked(xi: f64, k: f64) -> f64 {
    let q = xi * (1.0 - xi) * k;
    2.0 * q / (1.0 + (1.0 - 4.0 * q).max(0.0).sqrt())
}

/// `|<a|b>|^2` for normalized states.
pub fn transition_probability(a: &BoxState, b: &BoxState) -> Result<f64> {
    same_geometry(a.geometry(), b.geometry())?;
    a.require_normalized("first state")?;
    b.require_normalized("second state")?;
    Ok(a.inner_product(b)?.norm_sqr())
}

/// Overlap of two split states, compartment by compartment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOverlap {
    pub total: Complex64,
    pub left: Complex64,
    pub right: Complex64,
}

pub fn split_overlap(sa: &SplitState, sb: &SplitState) -> Result<SplitOverlap> {
    same_geometry(sa.parent_geometry(), sb.parent_geometry())?;
    if sa.insertion_point() != sb.insertion_point() {
        return Err(Error::contract(format!(
            "insertion points differ: {} vs {}",
            sa.insertion_point(),
            sb.insertion_point()
        )));
    }
    let left = sa.left().inner_product(sb.left())?;
    let right = sa.right().inner_product(sb.right())?;
    Ok(SplitOverlap {
        total: left + right,
        left,
        right,
    })
}

/// Noise model for the measured insertion energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalModel {
    /// Reports "energy was needed" or not. `false_positive` is
    /// `P(detect | nodal)`, `false_negative` is `P(no detect | non-nodal)`.
    BinaryDetector { false_positive: f64, false_negative: f64 },
    /// Real-valued energy readout with Gaussian noise.
    GaussianReadout {
        mu_nodal: f64,
        mu_nonnodal: f64,
        sigma: f64,
    },
}

impl SignalModel {
    /// Binary detector with equal error rates.
    pub fn symmetric_detector(error: f64) -> Self {
        SignalModel::BinaryDetector {
            false_positive: error,
            false_negative: error,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SignalModel::BinaryDetector {
                false_positive,
                false_negative,
            } => {
                check_probability("false_positive", false_positive)?;
                check_probability("false_negative", false_negative)
            }
            SignalModel::GaussianReadout {
                mu_nodal,
                mu_nonnodal,
                sigma,
            } => {
                if !(mu_nodal.is_finite() && mu_nonnodal.is_finite()) {
                    return Err(Error::domain("readout means must be finite"));
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Nodal,
    NonNodal,
}

impl Hypothesis {
    pub fn from_nodal(nodal: bool) -> Self {
        if nodal {
            Hypothesis::Nodal
        } else {
            Hypothesis::NonNodal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Detect,
    NoDetect,
    Readout(f64),
}

/// Distribution of the side-channel signal under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeDistribution {
    Discrete { detect: f64, no_detect: f64 },
    Normal { mean: f64, sigma: f64 },
}

impl OutcomeDistribution {
    /// Probability (discrete) or density (normal) of `outcome`.
    pub fn likelihood(&self, outcome: Outcome) -> Result<f64> {
        match (*self, outcome) {
            (OutcomeDistribution::Discrete { detect, .. }, Outcome::Detect) => Ok(detect),
            (OutcomeDistribution::Discrete { no_detect, .. }, Outcome::NoDetect) => Ok(no_detect),
            (OutcomeDistribution::Normal { mean, sigma }, Outcome::Readout(r)) => {
                Ok(normal_pdf(r, mean, sigma))
            }
            (d, o) => Err(Error::domain(format!("outcome {o:?} is not produced by {d:?}"))),
        }
    }

    fn log_likelihood(&self, outcome: Outcome) -> Result<f64> {
        match (*self, outcome) {
            (OutcomeDistribution::Normal { mean, sigma }, Outcome::Readout(r)) => {
                let z = (r - mean) / sigma;
                Ok(-0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln())
            }
            _ => self.likelihood(outcome).map(f64::ln),
        }
    }
}

fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

pub fn signal_likelihoods(model: &SignalModel, hypothesis: Hypothesis) -> OutcomeDistribution {
    match (*model, hypothesis) {
        (SignalModel::BinaryDetector { false_positive, .. }, Hypothesis::Nodal) => {
            OutcomeDistribution::Discrete {
                detect: false_positive,
                no_detect: 1.0 - false_positive,
            }
        }
        (SignalModel::BinaryDetector { false_negative, .. }, Hypothesis::NonNodal) => {
            OutcomeDistribution::Discrete {
                detect: 1.0 - false_negative,
                no_detect: false_negative,
            }
        }
        (SignalModel::GaussianReadout { mu_nodal, sigma, .. }, Hypothesis::Nodal) => {
            OutcomeDistribution::Normal { mean: mu_nodal, sigma }
        }
        (
            SignalModel::GaussianReadout {
                mu_nonnodal, sigma, ..
            },
            Hypothesis::NonNodal,
        ) => OutcomeDistribution::Normal {
            mean: mu_nonnodal,
            sigma,
        },
    }
}

/// Bayes update of `xi = P(A)` where A is the hypothesis whose state is
/// nodal at the insertion point.
pub fn posterior_update(xi: f64, model: &SignalModel, outcome: Outcome) -> Result<f64> {
    check_probability("prior", xi)?;
    model.validate()?;
    let under_a = signal_likelihoods(model, Hypothesis::Nodal);
    let under_b = signal_likelihoods(model, Hypothesis::NonNodal);
    posterior(xi, &under_a, &under_b, outcome)
}

fn posterior(xi: f64, under_a: &OutcomeDistribution, under_b: &OutcomeDistribution, outcome: Outcome) -> Result<f64> {
    let zero_probability = || Error::domain(format!("outcome {outcome:?} has probability zero under both hypotheses"));
    if under_a == under_b {
        if under_a.likelihood(outcome)? == 0.0 {
            return Err(zero_probability());
        }
        return Ok(xi);
    }
    match outcome {
        Outcome::Readout(_) => {
            let la = under_a.log_likelihood(outcome)?;
            let lb = under_b.log_likelihood(outcome)?;
            if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
                return Err(zero_probability());
            }
            if xi == 0.0 || xi == 1.0 {
                return Ok(xi);
            }
            let logit = xi.ln() - (1.0 - xi).ln() + la - lb;
            Ok(1.0 / (1.0 + (-logit).exp()))
        }
        _ => {
            let wa = xi * under_a.likelihood(outcome)?;
            let wb = (1.0 - xi) * under_b.likelihood(outcome)?;
            if wa + wb == 0.0 {
                if under_a.likelihood(outcome)? == 0.0 && under_b.likelihood(outcome)? == 0.0 {
                    return Err(zero_probability());
                }
                // outcome impossible under the prior; the prior stands
                return Ok(xi);
            }
            Ok(wa / (wa + wb))
        }
    }
}

/// Two candidate states, their prior, a barrier position and a signal model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub prior: f64,
    pub state_a: BoxState,
    pub state_b: BoxState,
    pub insertion_point: f64,
    pub signal: SignalModel,
}

impl Scenario {
    pub fn new(prior: f64, state_a: BoxState, state_b: BoxState, insertion_point: f64, signal: SignalModel) -> Result<Self> {
        let scenario = Self {
            prior,
            state_a,
            state_b,
            insertion_point,
            signal,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("prior", self.prior)?;
        same_geometry(self.state_a.geometry(), self.state_b.geometry())?;
        self.state_a.require_normalized("state_a")?;
        self.state_b.require_normalized("state_b")?;
        if !self.state_a.geometry().contains_interior(self.insertion_point) {
            return Err(Error::domain(format!(
                "insertion point {} is not strictly inside the well",
                self.insertion_point
            )));
        }
        self.signal.validate()
    }
}

/// One side-channel outcome (or readout region) of the combined strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub outcome: String,
    pub probability: f64,
    pub posterior: f64,
    /// Expected Helstrom cost given this outcome.
    pub branch_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub prior: f64,
    pub helstrom_baseline: f64,
    /// Pre-insertion `K`, used for every branch.
    pub overlap_sq: f64,
    /// `K` recomputed from the truncated split states.
    pub overlap_sq_after: f64,
    pub n_cut: usize,
    pub truncation_residual: f64,
    pub nodal_a: bool,
    pub nodal_b: bool,
    pub posterior_table: Vec<PosteriorRow>,
    pub combined_cost: f64,
}

/// Everything about a scenario that does not depend on the prior or the
/// signal model; computed once and reused across sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationSetup {
    pub overlap_sq: f64,
    pub overlap_sq_after: f64,
    pub n_cut: usize,
    pub truncation_residual: f64,
    pub nodal_a: bool,
    pub nodal_b: bool,
}

impl DiscriminationSetup {
    pub fn new(state_a: &BoxState, state_b: &BoxState, insertion_point: f64, n_cut: usize) -> Result<Self> {
        let overlap_sq = transition_probability(state_a, state_b)?;
        let sa = split(state_a, insertion_point, n_cut)?;
        let sb = split(state_b, insertion_point, n_cut)?;
        let after = split_overlap(&sa, &sb)?;
        Ok(Self {
            overlap_sq,
            overlap_sq_after: after.total.norm_sqr(),
            n_cut,
            truncation_residual: sa.truncation_residual().max(sb.truncation_residual()),
            nodal_a: is_nodal(state_a, insertion_point, NODAL_TOLERANCE)?,
            nodal_b: is_nodal(state_b, insertion_point, NODAL_TOLERANCE)?,
        })
    }

    pub fn cost(&self, prior: f64, signal: &SignalModel) -> Result<CostBreakdown> {
        check_probability("prior", prior)?;
        signal.validate()?;
        let k = self.overlap_sq;
        let baseline = helstrom_unchecked(prior, k);
        let under_a = signal_likelihoods(signal, Hypothesis::from_nodal(self.nodal_a));
        let under_b = signal_likelihoods(signal, Hypothesis::from_nodal(self.nodal_b));

        let posterior_table = if under_a == under_b {
            vec![PosteriorRow {
                outcome: "uninformative".into(),
                probability: 1.0,
                posterior: prior,
                branch_cost: baseline,
            }]
        } else {
            match (under_a, under_b) {
                (OutcomeDistribution::Normal { mean: ma, sigma }, OutcomeDistribution::Normal { mean: mb, .. }) => {
                    readout_rows(prior, k, ma, mb, sigma)?
                }
                _ => [Outcome::Detect, Outcome::NoDetect]
                    .into_iter()
                    .map(|o| {
                        let label = match o {
                            Outcome::Detect => "detect",
                            _ => "no_detect",
                        };
                        let p = prior * under_a.likelihood(o)? + (1.0 - prior) * under_b.likelihood(o)?;
                        let (posterior, branch_cost) = if p > 0.0 {
                            let post = posterior(prior, &under_a, &under_b, o)?;
                            (post, helstrom_unchecked(post, k))
                        } else {
                            (prior, 0.0)
                        };
                        Ok(PosteriorRow {
                            outcome: label.into(),
                            probability: p,
                            posterior,
                            branch_cost,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            }
        };

        let combined_cost = posterior_table.iter().map(|r| r.probability * r.branch_cost).sum();
        Ok(CostBreakdown {
            prior,
            helstrom_baseline: baseline,
            overlap_sq: k,
            overlap_sq_after: self.overlap_sq_after,
            n_cut: self.n_cut,
            truncation_residual: self.truncation_residual,
            nodal_a: self.nodal_a,
            nodal_b: self.nodal_b,
            posterior_table,
            combined_cost,
        })
    }
}

/// Integrates the Gaussian readout over the two regions on either side of
/// the point where both weighted likelihoods are equal.
///
/// Works in standardized coordinates `z = (r - midpoint) / sigma`, so the
/// integrands stay O(1) for any readout scale.
fn readout_rows(xi: f64, k: f64, mean_a: f64, mean_b: f64, sigma: f64) -> Result<Vec<PosteriorRow>> {
    let midpoint = 0.5 * mean_a + 0.5 * mean_b;
    // beyond 40 the two densities share no representable overlap
    let s = ((0.5 * mean_a - 0.5 * mean_b) / sigma).clamp(-MAX_HALF_SEPARATION, MAX_HALF_SEPARATION);
    let (mean_a, mean_b) = (s, -s);
    let half = READOUT_WINDOW_SIGMAS;
    let lo = -s.abs() - half;
    let hi = s.abs() + half;

    let mut cuts = vec![lo];
    let mut threshold = None;
    if xi > 0.0 && xi < 1.0 && s != 0.0 {
        let t = ((1.0 - xi) / xi).ln() / (2.0 * s);
        if t > lo && t < hi {
            cuts.push(t);
            threshold = Some(midpoint + sigma * t);
        }
    }
    cuts.push(hi);

    let weight_a = |z: f64| xi * normal_pdf(z, mean_a, 1.0);
    let weight_b = |z: f64| (1.0 - xi) * normal_pdf(z, mean_b, 1.0);
    let total = |z: f64| weight_a(z) + weight_b(z);
    // p * helstrom(posterior), rationalized to avoid cancellation
    let cost_density = |z: f64| {
        let (wa, wb) = (weight_a(z), weight_b(z));
        let p = wa + wb;
        let q = wa * wb * k;
        if q == 0.0 {
            0.0
        } else {
            2.0 * q / (p + (p * p - 4.0 * q).max(0.0).sqrt())
        }
    };

    let quad = Quadrature::new(READOUT_TOLERANCE);
    let mut rows = Vec::with_capacity(2);
    for (i, w) in cuts.windows(2).enumerate() {
        let (u, v) = (w[0], w[1]);
        let mut points = vec![u, v];
        for m in [mean_a, mean_b, mean_a - half, mean_a + half, mean_b - half, mean_b + half] {
            if m > u && m < v {
                points.push(m);
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();

        let probability = quad.integrate_with_breaks(total, &points)?;
        let mass_a = quad.integrate_with_breaks(weight_a, &points)?;
        let cost = quad.integrate_with_breaks(cost_density, &points)?;
        let outcome = match (threshold, i) {
            (None, _) => "readout".to_string(),
            (Some(t), 0) => format!("readout < {t:.9e}"),
            (Some(t), _) => format!("readout >= {t:.9e}"),
        };
        let (posterior, branch_cost) = if probability > 0.0 {
            ((mass_a / probability).clamp(0.0, 1.0), cost / probability)
        } else {
            (xi, 0.0)
        };
        rows.push(PosteriorRow {
            outcome,
            probability,
            posterior,
            branch_cost,
        });
    }
    Ok(rows)
}

/// Combined side-channel + Helstrom cost of a scenario.
pub fn combined_cost(scenario: &Scenario, n_cut: usize) -> Result<CostBreakdown> {
    scenario.validate()?;
    DiscriminationSetup::new(&scenario.state_a, &scenario.state_b, scenario.insertion_point, n_cut)?
        .cost(scenario.prior, &scenario.signal)
}

/// Prior and symmetric detector error values to sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub priors: Vec<f64>,
    pub detector_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prior_index: usize,
    pub error_index: usize,
    pub detector_error: f64,
    pub breakdown: CostBreakdown,
}

/// Evaluates the template's states over the grid with a symmetric binary
/// detector. Rows are ordered by `(prior_index, error_index)`.
pub fn sweep(template: &Scenario, grid: &SweepGrid, n_cut: usize) -> Result<Vec<SweepRow>> {
    for &p in &grid.priors {
        check_probability("swept prior", p)?;
    }
    for &e in &grid.detector_errors {
        check_probability("swept detector error", e)?;
    }
    if grid.priors.is_empty() || grid.detector_errors.is_empty() {
        return Ok(Vec::new());
    }
    let setup = DiscriminationSetup::new(&template.state_a, &template.state_b, template.insertion_point, n_cut)?;
    let n_err = grid.detector_errors.len();
    (0..grid.priors.len() * n_err)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_err, idx % n_err);
            let error = grid.detector_errors[j];
            Ok(SweepRow {
                prior_index: i,
                error_index: j,
                detector_error: error,
                breakdown: setup.cost(grid.priors[i], &SignalModel::symmetric_detector(error))?,
            })
        })
        .collect()
}
