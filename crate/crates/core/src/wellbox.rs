//! Eigenbasis of the one-dimensional infinite square well.
//!
//! A [`BoxState`] is a vector of complex amplitudes over the eigenfunctions
//! `sqrt(2/L) sin(n pi (x - x_left) / L)`, `n = 1..=capacity`. Everything
//! else (position-space values, overlaps, energies) is derived from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Tolerance on `sum |c_n|^2 - 1` for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Placement, width and physical constants of a well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellGeometry {
    pub x_left: f64,
    pub width: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for WellGeometry {
    /// Natural units: `x_left = 0`, `L = M = hbar = 1`.
    fn default() -> Self {
        Self {
            x_left: 0.0,
            width: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

impl WellGeometry {
    pub fn new(x_left: f64, width: f64, mass: f64, hbar: f64) -> Result<Self> {
        let geom = Self {
            x_left,
            width,
            mass,
            hbar,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x_left.is_finite() {
            return Err(Error::domain("well position must be finite"));
        }
        for (name, v) in [("width", self.width), ("mass", self.mass), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.width
    }

    /// `hbar^2 / (M L^2)`, the natural energy scale of the well.
    pub fn energy_unit(&self) -> f64 {
        self.hbar * self.hbar / (self.mass * self.width * self.width)
    }

    /// `E_n = pi^2 hbar^2 n^2 / (2 M L^2)`.
    pub fn eigenenergy(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("quantum number must be at least 1"));
        }
        Ok(self.eigenenergy_unchecked(n))
    }

    pub(crate) fn eigenenergy_unchecked(&self, n: usize) -> f64 {
        let n = n as f64;
        PI * PI * self.hbar * self.hbar * n * n / (2.0 * self.mass * self.width * self.width)
    }

    /// Value of eigenfunction `n` at `x`. Exactly zero on and outside the walls.
    pub fn eigenfunction(&self, n: usize, x: f64) -> f64 {
        if x <= self.x_left || x >= self.x_right() {
            return 0.0;
        }
        (2.0 / self.width).sqrt() * (n as f64 * PI * (x - self.x_left) / self.width).sin()
    }

    /// Whether `x` lies on the closed interval `[x_left, x_left + L]`.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_left && x <= self.x_right()
    }

    /// Whether `x` lies strictly between the walls.
    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.x_left && x < self.x_right()
    }

    /// Same constants, different extent. Used for compartments.
    pub(crate) fn with_extent(&self, x_left: f64, width: f64) -> Self {
        Self {
            x_left,
            width,
            ..*self
        }
    }
}

/// Complex amplitudes over the eigenbasis of one well; `coefficients()[k]`
/// belongs to quantum number `n = k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxState {
    geometry: WellGeometry,
    coefficients: Vec<Complex64>,
}

impl BoxState {
    pub fn new(geometry: WellGeometry, coefficients: Vec<Complex64>) -> Result<Self> {
        geometry.validate()?;
        if coefficients.is_empty() {
            return Err(Error::domain("a state needs at least one coefficient"));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::domain("state coefficients must be finite"));
        }
        Ok(Self {
            geometry,
            coefficients,
        })
    }

    /// The normalized eigenstate `n`, stored with capacity `n`.
    pub fn eigenstate(geometry: WellGeometry, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("quantum number must be at least 1"));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[n - 1] = Complex64::new(1.0, 0.0);
        Self::new(geometry, c)
    }

    /// Builds a state from `(n, weight)` pairs (repeated `n` accumulate) and
    /// normalizes it. Returns the state together with the factor the raw
    /// weights were multiplied by.
    pub fn from_weights(geometry: WellGeometry, weights: &[(usize, Complex64)]) -> Result<(Self, f64)> {
        let capacity = weights.iter().map(|&(n, _)| n).max().unwrap_or(0);
        if weights.iter().any(|&(n, _)| n == 0) || capacity == 0 {
            return Err(Error::domain("quantum numbers must be at least 1"));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); capacity];
        for &(n, w) in weights {
            c[n - 1] += w;
        }
        let raw = Self::new(geometry, c)?;
        let norm = raw.norm_sq().sqrt();
        if !(norm > 0.0) {
            return Err(Error::domain("weights describe the zero vector"));
        }
        let factor = 1.0 / norm;
        Ok((raw.scaled(Complex64::new(factor, 0.0)), factor))
    }

    pub fn geometry(&self) -> &WellGeometry {
        &self.geometry
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Number of stored modes (`N_max`).
    pub fn capacity(&self) -> usize {
        self.coefficients.len()
    }

    /// Amplitude of quantum number `n`; zero beyond the capacity.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients
            .get(n - 1)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "{what} must be normalized (norm^2 = {})",
                self.norm_sq()
            )))
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            geometry: self.geometry,
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }

    /// `alpha * self + beta * other`, padded to the larger capacity.
    pub fn combine(&self, alpha: Complex64, other: &BoxState, beta: Complex64) -> Result<Self> {
        same_geometry(&self.geometry, &other.geometry)?;
        let n = self.capacity().max(other.capacity());
        let c = (1..=n)
            .map(|k| alpha * self.coefficient(k) + beta * other.coefficient(k))
            .collect();
        Self::new(self.geometry, c)
    }

    pub(crate) fn map_coefficients(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            geometry: self.geometry,
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, &c)| f(k + 1, c))
                .collect(),
        }
    }

    /// `psi(x) = sum_n c_n phi_n(x)`; exactly zero at both walls.
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if !self.geometry.contains(x) {
            return Err(Error::domain(format!(
                "x = {x} lies outside the well [{}, {}]",
                self.geometry.x_left,
                self.geometry.x_right()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> Complex64 {
        let g = &self.geometry;
        if x <= g.x_left || x >= g.x_right() {
            return Complex64::new(0.0, 0.0);
        }
        let scale = (2.0 / g.width).sqrt();
        let theta = PI * (x - g.x_left) / g.width;
        self.coefficients
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| {
                acc + c * ((k + 1) as f64 * theta).sin()
            })
            * scale
    }

    /// `sum_n conj(a_n) b_n`.
    pub fn inner_product(&self, other: &BoxState) -> Result<Complex64> {
        same_geometry(&self.geometry, &other.geometry)?;
        Ok(self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `<H> = sum_n |c_n|^2 E_n` for a normalized state.
    pub fn energy_expectation(&self) -> Result<f64> {
        self.require_normalized("state")?;
        Ok(self.weighted_energy())
    }

    /// `sum_n |c_n|^2 E_n` without any normalization requirement.
    pub(crate) fn weighted_energy(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm_sqr() * self.geometry.eigenenergy_unchecked(k + 1))
            .sum()
    }

    /// `sqrt(2/L) sum |c_n|`, an upper bound on `|psi(x)|`.
    pub fn amplitude_bound(&self) -> f64 {
        (2.0 / self.geometry.width).sqrt() * self.coefficients.iter().map(|c| c.norm()).sum::<f64>()
    }
}

pub(crate) fn same_geometry(a: &WellGeometry, b: &WellGeometry) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::contract(format!("geometry mismatch: {a:?} vs {b:?}")))
    }
}

/// Position-space inner product `int conj(a(x)) b(x) dx` by adaptive
/// quadrature. Independent of the spectral route in [`BoxState::inner_product`].
pub fn inner_product_quadrature(a: &BoxState, b: &BoxState, quad: &Quadrature) -> Result<Complex64> {
    same_geometry(a.geometry(), b.geometry())?;
    let g = a.geometry();
    let (lo, hi) = (g.x_left, g.x_right());
    let re = quad.integrate(
        |x| {
            let (u, v) = (a.eval_unchecked(x), b.eval_unchecked(x));
            (u.conj() * v).re
        },
        lo,
        hi,
    )?;
    let im = quad.integrate(
        |x| {
            let (u, v) = (a.eval_unchecked(x), b.eval_unchecked(x));
            (u.conj() * v).im
        },
        lo,
        hi,
    )?;
    Ok(Complex64::new(re, im))
}
