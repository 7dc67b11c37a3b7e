//! Sudden insertion of an impenetrable barrier.
//!
//! At the instant of insertion the wave function is unchanged; it is simply
//! re-expanded in the eigenbases of the two compartments `[x_left, a]` and
//! `[a, x_right]`. The compartment amplitudes are kept unnormalized so that
//! `sum |b_n|^2` is the probability of finding the particle on that side.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::wellbox::{BoxState, WellGeometry};

/// Relative amplitude below which an insertion point counts as a node.
pub const NODAL_TOLERANCE: f64 = 1e-9;

/// Partial-sum slope, in units of `hbar^2 / (M L^2)` of the parent well,
/// above which a compartment energy series is classed as divergent.
pub const DIVERGENCE_SLOPE_THRESHOLD: f64 = 0.1;

/// How compartment amplitudes are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Closed-form overlap integrals of sine pairs. Exact up to rounding.
    Analytic,
    /// Adaptive quadrature of every projection integral.
    Quadrature(Quadrature),
}

/// A state right after a barrier was dropped at `insertion_point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitState {
    parent: BoxState,
    insertion_point: f64,
    left: BoxState,
    right: BoxState,
    truncation_residual: f64,
}

impl SplitState {
    /// The pre-insertion state.
    pub fn parent(&self) -> &BoxState {
        &self.parent
    }

    pub fn parent_geometry(&self) -> &WellGeometry {
        self.parent.geometry()
    }

    pub fn insertion_point(&self) -> f64 {
        self.insertion_point
    }

    pub fn left(&self) -> &BoxState {
        &self.left
    }

    pub fn right(&self) -> &BoxState {
        &self.right
    }

    /// Number of modes kept per compartment.
    pub fn n_cut(&self) -> usize {
        self.left.capacity()
    }

    /// `1 - sum |b^L|^2 - sum |b^R|^2`: probability lost to the mode cutoff.
    pub fn truncation_residual(&self) -> f64 {
        self.truncation_residual
    }

    /// Amplitude at `x`; zero on the barrier and the outer walls.
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        let g = self.parent_geometry();
        if !g.contains(x) {
            return Err(Error::domain(format!("x = {x} lies outside the well")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> Complex64 {
        if x < self.insertion_point {
            self.left.eval_unchecked(x)
        } else if x > self.insertion_point {
            self.right.eval_unchecked(x)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Same split with both compartments replaced (used by time evolution).
    pub(crate) fn with_compartments(&self, left: BoxState, right: BoxState) -> Self {
        Self {
            left,
            right,
            ..self.clone()
        }
    }
}

/// Whether the divergent-energy diagnosis fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceClass {
    Convergent,
    LinearDivergent,
}

impl std::fmt::Display for DivergenceClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DivergenceClass::Convergent => "convergent",
            DivergenceClass::LinearDivergent => "linear-divergent",
        })
    }
}

/// Truncated energy series of one compartment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompartmentSeries {
    /// `partial_sums[N - 1] = sum_{n <= N} |b_n|^2 E_n`.
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `S_N` against `N` over the final decade.
    pub slope: f64,
    pub intercept: f64,
}

impl CompartmentSeries {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Energy bookkeeping for one insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionReport {
    pub nodal: bool,
    pub pre_energy: f64,
    pub compartment_probabilities: (f64, f64),
    pub left: CompartmentSeries,
    pub right: CompartmentSeries,
    pub divergence_class: DivergenceClass,
    pub truncation_residual: f64,
    pub energy_terms: usize,
}

impl InsertionReport {
    /// Left plus right truncated compartment energy.
    pub fn post_energy(&self) -> f64 {
        self.left.total() + self.right.total()
    }

    /// Note attached to reports whose partial sums grow without bound.
    pub fn caveat(&self) -> Option<&'static str> {
        match self.divergence_class {
            DivergenceClass::Convergent => None,
            DivergenceClass::LinearDivergent => Some(
                "compartment partial sums exclude the energy deposited at the barrier point; \
                 the series is not a renormalized total energy",
            ),
        }
    }
}

/// `sin(pi t)` with exact zeros at integers and exact extrema at half-integers.
pub(crate) fn sin_pi(t: f64) -> f64 {
    let mut r = t % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r <= -1.0 {
        r += 2.0;
    }
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    (PI * r).sin()
}

fn sinc_pi(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        sin_pi(t) / (PI * t)
    }
}

/// Overlap of parent mode `m` with left-compartment mode `n` when the
/// compartment covers the fraction `r` of the well starting at the left wall.
fn left_overlap(m: usize, n: usize, r: f64) -> f64 {
    let mr = m as f64 * r;
    let n = n as f64;
    r.sqrt() * (sinc_pi(mr - n) - sinc_pi(mr + n))
}

/// Right-compartment overlap obtained by mirroring the well about its centre.
fn right_overlap(m: usize, n: usize, r: f64) -> f64 {
    let sign = if (m + n).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * left_overlap(m, n, 1.0 - r)
}

fn check_interior(geom: &WellGeometry, a: f64) -> Result<()> {
    if !a.is_finite() || !geom.contains_interior(a) {
        return Err(Error::domain(format!(
            "insertion point {a} must lie strictly inside ({}, {})",
            geom.x_left,
            geom.x_right()
        )));
    }
    Ok(())
}

/// True iff `|psi(a)| <= tol * sqrt(2/L) sum |c_n|`.
pub fn is_nodal(state: &BoxState, a: f64, tol: f64) -> Result<bool> {
    check_interior(state.geometry(), a)?;
    let scale = state.amplitude_bound();
    Ok(state.eval_unchecked(a).norm() <= tol * scale)
}

/// Splits a normalized state at `a`, keeping `n_cut` modes per compartment.
pub fn split(state: &BoxState, a: f64, n_cut: usize) -> Result<SplitState> {
    split_with(state, a, n_cut, Projection::Analytic)
}

pub fn split_with(state: &BoxState, a: f64, n_cut: usize, projection: Projection) -> Result<SplitState> {
    let g = *state.geometry();
    check_interior(&g, a)?;
    state.require_normalized("state to split")?;
    if n_cut == 0 {
        return Err(Error::domain("mode cutoff must be at least 1"));
    }

    let left_geom = g.with_extent(g.x_left, a - g.x_left);
    let right_geom = g.with_extent(a, g.x_right() - a);

    let (left, right) = match projection {
        Projection::Analytic => {
            let r = (a - g.x_left) / g.width;
            let project = |overlap: fn(usize, usize, f64) -> f64| -> Vec<Complex64> {
                (1..=n_cut)
                    .map(|n| {
                        state
                            .coefficients()
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * overlap(k + 1, n, r))
                            .sum()
                    })
                    .collect()
            };
            (project(left_overlap), project(right_overlap))
        }
        Projection::Quadrature(quad) => (
            project_by_quadrature(state, &left_geom, n_cut, &quad)?,
            project_by_quadrature(state, &right_geom, n_cut, &quad)?,
        ),
    };

    let left = BoxState::new(left_geom, left)?;
    let right = BoxState::new(right_geom, right)?;
    let truncation_residual = 1.0 - left.norm_sq() - right.norm_sq();
    Ok(SplitState {
        parent: state.clone(),
        insertion_point: a,
        left,
        right,
        truncation_residual,
    })
}

fn project_by_quadrature(
    state: &BoxState,
    compartment: &WellGeometry,
    n_cut: usize,
    quad: &Quadrature,
) -> Result<Vec<Complex64>> {
    let (lo, hi) = (compartment.x_left, compartment.x_right());
    (1..=n_cut)
        .map(|n| {
            let re = quad.integrate(
                |x| state.eval_unchecked(x).re * compartment.eigenfunction(n, x),
                lo,
                hi,
            )?;
            let im = quad.integrate(
                |x| state.eval_unchecked(x).im * compartment.eigenfunction(n, x),
                lo,
                hi,
            )?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Closed-form amplitudes `(b_n^L, b_n^R)` for splitting the ground state at
/// the midpoint of the well:
/// `b_n^L = (-1)^n 4 sqrt(2) n / (pi - 4 n^2 pi)`,
/// `b_n^R = -4 sqrt(2) n / (pi - 4 n^2 pi)`.
pub fn midpoint_coefficients_n1(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("mode index must be at least 1"));
    }
    let nf = n as f64;
    let base = 4.0 * std::f64::consts::SQRT_2 * nf / (PI - 4.0 * nf * nf * PI);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((sign * base, -base))
}

/// `(sum |b^L|^2, sum |b^R|^2)`.
pub fn compartment_probability(split: &SplitState) -> (f64, f64) {
    (split.left.norm_sq(), split.right.norm_sq())
}

/// Truncated compartment energies `S_N` for `N = 1..=n_terms` and the
/// resulting divergence verdict.
pub fn insertion_energy_diagnostics(split: &SplitState, n_terms: usize) -> Result<InsertionReport> {
    if n_terms == 0 {
        return Err(Error::domain("need at least one energy term"));
    }
    if n_terms > split.n_cut() {
        return Err(Error::contract(format!(
            "{n_terms} energy terms requested but the split keeps only {} modes",
            split.n_cut()
        )));
    }

    let left = series(&split.left, n_terms);
    let right = series(&split.right, n_terms);
    let threshold = DIVERGENCE_SLOPE_THRESHOLD * split.parent_geometry().energy_unit();
    let divergence_class = if left.slope > threshold || right.slope > threshold {
        DivergenceClass::LinearDivergent
    } else {
        DivergenceClass::Convergent
    };

    Ok(InsertionReport {
        nodal: is_nodal(&split.parent, split.insertion_point, NODAL_TOLERANCE)?,
        pre_energy: split.parent.energy_expectation()?,
        compartment_probabilities: compartment_probability(split),
        left,
        right,
        divergence_class,
        truncation_residual: split.truncation_residual,
        energy_terms: n_terms,
    })
}

fn series(compartment: &BoxState, n_terms: usize) -> CompartmentSeries {
    let geom = compartment.geometry();
    let partial_sums: Vec<f64> = compartment.coefficients()[..n_terms]
        .iter()
        .enumerate()
        .scan(0.0, |acc, (k, b)| {
            *acc += b.norm_sqr() * geom.eigenenergy_unchecked(k + 1);
            Some(*acc)
        })
        .collect();

    // fit over cutoffs ceil(N/10)..=N
    let first = n_terms.div_ceil(10).max(1);
    let (slope, intercept) = linear_fit((first..=n_terms).map(|n| (n as f64, partial_sums[n - 1])));
    CompartmentSeries {
        partial_sums,
        slope,
        intercept,
    }
}

/// Ordinary least squares; a single point has zero slope.
fn linear_fit(points: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let count = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / count, sy / count);
    let (sxy, sxx) = points.fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
