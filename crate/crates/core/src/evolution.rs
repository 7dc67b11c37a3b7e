//! Free evolution in the eigenbasis and position-density snapshots.
//!
//! After insertion the barrier stays impenetrable, so each compartment
//! evolves with its own spectrum and no amplitude ever crosses `a`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insertion::SplitState;
use crate::wellbox::BoxState;

/// `c_n -> c_n exp(-i E_n t / hbar)`.
pub fn evolve(state: &BoxState, t: f64) -> BoxState {
    let g = *state.geometry();
    state.map_coefficients(|n, c| {
        let phase = -g.eigenenergy_unchecked(n) * t / g.hbar;
        c * Complex64::from_polar(1.0, phase)
    })
}

/// Evolves both compartments with their own eigenenergies. The parent
/// (pre-insertion) state is kept as recorded at insertion time.
pub fn evolve_split(split: &SplitState, t: f64) -> SplitState {
    split.with_compartments(evolve(split.left(), t), evolve(split.right(), t))
}

/// What to sample in [`density_grid`].
#[derive(Debug, Clone, Copy)]
pub enum DensitySource<'a> {
    State(&'a BoxState),
    Split(&'a SplitState),
}

impl<'a> From<&'a BoxState> for DensitySource<'a> {
    fn from(s: &'a BoxState) -> Self {
        DensitySource::State(s)
    }
}

impl<'a> From<&'a SplitState> for DensitySource<'a> {
    fn from(s: &'a SplitState) -> Self {
        DensitySource::Split(s)
    }
}

/// `|psi(x, t)|^2` sampled on a grid.
///
/// For split states the grid is the union of two uniform compartment grids;
/// the barrier position appears twice, and `barrier_break` is the index of
/// its second occurrence (first sample of the right compartment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// `density[i][j]` at `times[i]`, `positions[j]`.
    pub density: Vec<Vec<f64>>,
    pub barrier_break: Option<usize>,
}

impl DensityGrid {
    /// Trapezoidal integral of slice `i`, segment by segment.
    pub fn slice_integral(&self, i: usize) -> f64 {
        let row = &self.density[i];
        let trapezoid = |range: std::ops::Range<usize>| -> f64 {
            let xs = &self.positions[range.clone()];
            let ys = &row[range];
            xs.windows(2)
                .zip(ys.windows(2))
                .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                .sum()
        };
        match self.barrier_break {
            Some(k) => trapezoid(0..k) + trapezoid(k..self.positions.len()),
            None => trapezoid(0..self.positions.len()),
        }
    }
}

fn uniform(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + i as f64 * step })
}

pub fn density_grid<'a>(
    source: impl Into<DensitySource<'a>>,
    times: &[f64],
    n_points: usize,
) -> Result<DensityGrid> {
    if times.is_empty() {
        return Err(Error::contract("density grid needs at least one time"));
    }
    if n_points < 2 {
        return Err(Error::domain("density grid needs at least two points"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("times must be finite"));
    }

    let source = source.into();
    let (positions, barrier_break) = match source {
        DensitySource::State(s) => {
            let g = s.geometry();
            (uniform(g.x_left, g.x_right(), n_points).collect::<Vec<_>>(), None)
        }
        DensitySource::Split(s) => {
            let g = s.parent_geometry();
            let a = s.insertion_point();
            let r = (a - g.x_left) / g.width;
            let n_left = (((n_points - 1) as f64 * r).round() as usize + 1).clamp(2, (n_points - 1).max(2));
            let n_right = (n_points + 1 - n_left).max(2);
            let mut xs: Vec<f64> = uniform(g.x_left, a, n_left).collect();
            xs.extend(uniform(a, g.x_right(), n_right));
            (xs, Some(n_left))
        }
    };

    let density = times
        .par_iter()
        .map(|&t| match source {
            DensitySource::State(s) => {
                let evolved = evolve(s, t);
                positions.iter().map(|&x| evolved.eval_unchecked(x).norm_sqr()).collect()
            }
            DensitySource::Split(s) => {
                let evolved = evolve_split(s, t);
                let k = barrier_break.expect("split grids carry a break");
                positions
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let side = if j < k { evolved.left() } else { evolved.right() };
                        side.eval_unchecked(x).norm_sqr()
                    })
                    .collect()
            }
        })
        .collect();

    Ok(DensityGrid {
        times: times.to_vec(),
        positions,
        density,
        barrier_break,
    })
}
