//! Search for a three-mode state whose overlap with the ground state is the
//! same on both sides of a midpoint barrier.
//!
//! The candidate is `alpha phi_1 + beta phi_2 + gamma phi_4` against the
//! reference `phi_1`. Only the ratio `gamma / beta` is varied. Two readings
//! of "matching" are supported:
//!
//! * raw halves: the half-interval overlaps `int_0^{L/2}` and
//!   `int_{L/2}^L` each equal half the full overlap;
//! * renormalized halves: after renormalizing each compartment state, the
//!   compartment overlaps each equal the full overlap.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insertion::sin_pi;

/// The `gamma / beta` value whose matching property is checked.
pub const TESTED_RATIO: f64 = -2.1;

const MODES: [usize; 3] = [1, 2, 4];
const SCAN_RANGE: (f64, f64) = (-10.0, 10.0);
const SCAN_STEPS: usize = 2000;
const ROOT_TOLERANCE: f64 = 1e-12;
const MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchDefinition {
    RawHalves,
    RenormalizedHalves,
}

impl std::fmt::Display for MatchDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatchDefinition::RawHalves => "raw-halves",
            MatchDefinition::RenormalizedHalves => "renormalized-halves",
        })
    }
}

/// Overlaps for one candidate under one definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideOverlaps {
    pub left: f64,
    pub right: f64,
    pub total: f64,
    /// Whether both sides meet the definition's target.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub definition: MatchDefinition,
    pub weights: (f64, f64, f64),
    /// Overlaps for the weights as given.
    pub given: SideOverlaps,
    /// `beta == 0`: the ratio has no effect on the candidate.
    pub degenerate: bool,
    /// Every ratio in the scan window at which the definition is met.
    pub matching_ratios: Vec<f64>,
    pub required_ratio: Option<f64>,
    pub tested_ratio: f64,
    pub tested: SideOverlaps,
}

impl ProbeReport {
    pub fn tested_ratio_matches(&self) -> bool {
        self.tested.matched
    }
}

/// `int_0^{L/2} phi_m phi_n dx` in any well (the value is dimensionless).
fn half_gram(m: usize, n: usize) -> f64 {
    if m == n {
        return 0.5;
    }
    let (d, s) = (m as f64 - n as f64, (m + n) as f64);
    sin_pi(0.5 * d) / (PI * d) - sin_pi(0.5 * s) / (PI * s)
}

fn overlaps(weights: [f64; 3], definition: MatchDefinition) -> SideOverlaps {
    let norm: f64 = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let c = weights.map(|w| w / norm);
    // reference is phi_1: overlaps reduce to the first Gram row
    let left: f64 = MODES.iter().zip(&c).map(|(&m, w)| w * half_gram(1, m)).sum();
    let total = c[0];
    let right = total - left;

    match definition {
        MatchDefinition::RawHalves => SideOverlaps {
            left,
            right,
            total,
            matched: (left - 0.5 * total).abs() <= MATCH_TOLERANCE && (right - 0.5 * total).abs() <= MATCH_TOLERANCE,
        },
        MatchDefinition::RenormalizedHalves => {
            let mut p_left = 0.0;
            for (i, &m) in MODES.iter().enumerate() {
                for (j, &n) in MODES.iter().enumerate() {
                    p_left += c[i] * c[j] * half_gram(m, n);
                }
            }
            let p_right = 1.0 - p_left;
            // reference phi_1 puts probability 1/2 on each side
            let left = if p_left > 0.0 { left / (0.5 * p_left).sqrt() } else { 0.0 };
            let right = if p_right > 0.0 { right / (0.5 * p_right).sqrt() } else { 0.0 };
            SideOverlaps {
                left,
                right,
                total,
                matched: (left - total).abs() <= MATCH_TOLERANCE && (right - total).abs() <= MATCH_TOLERANCE,
            }
        }
    }
}

/// Evaluates the given weights, solves for the `gamma / beta` ratios that
/// satisfy `definition` (keeping `alpha` and `beta`), and checks
/// [`TESTED_RATIO`].
pub fn matched_pair_probe(weights: (f64, f64, f64), definition: MatchDefinition) -> Result<ProbeReport> {
    let (alpha, beta, gamma) = weights;
    if ![alpha, beta, gamma].iter().all(|w| w.is_finite()) {
        return Err(Error::domain("weights must be finite"));
    }
    if alpha == 0.0 && beta == 0.0 && gamma == 0.0 {
        return Err(Error::domain("weights describe the zero vector"));
    }

    let given = overlaps([alpha, beta, gamma], definition);
    let degenerate = beta == 0.0;
    let at_ratio = |rho: f64| overlaps([alpha, beta, rho * beta], definition);
    let tested = if degenerate { given } else { at_ratio(TESTED_RATIO) };

    let matching_ratios = if degenerate {
        Vec::new()
    } else {
        let mismatch = |rho: f64| {
            let o = at_ratio(rho);
            o.left - o.right
        };
        bracketed_roots(mismatch)
            .into_iter()
            .filter(|&rho| at_ratio(rho).matched)
            .collect()
    };

    Ok(ProbeReport {
        definition,
        weights,
        given,
        degenerate,
        required_ratio: matching_ratios.first().copied(),
        matching_ratios,
        tested_ratio: TESTED_RATIO,
        tested,
    })
}

/// Roots of `f` on the scan window: sign changes on a uniform grid, each
/// refined by bisection.
fn bracketed_roots(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let (lo, hi) = SCAN_RANGE;
    let step = (hi - lo) / SCAN_STEPS as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=SCAN_STEPS {
        let x1 = lo + i as f64 * step;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            roots.push(bisect(&f, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOLERANCE || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
