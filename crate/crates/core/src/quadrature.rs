//! Globally adaptive Gauss–Kronrod (7/15) integration on finite intervals.
//!
//! The routine keeps a priority queue of subintervals keyed by their local
//! error estimate and bisects the worst one until the summed estimate drops
//! below the requested absolute tolerance. Bisection order and the final
//! summation order depend only on the integrand values, so a fixed integrand
//! and tolerance always yield the same bits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae; odd indices are the 7-point Gauss abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const DEFAULT_MAX_INTERVALS: usize = 20_000;

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Absolute error target for the whole integral.
    pub tol: f64,
    /// Subinterval budget; exceeding it is reported as a numerical error.
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position for determinism.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates `f` over `[points[0], points[last]]`, seeding the adaptive
    /// partition with the given strictly increasing breakpoints (kinks,
    /// peaks, discontinuities).
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<f64> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        if points.len() < 2 {
            return Err(Error::domain("integration needs at least two endpoints"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("integration bounds must be finite"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain(format!(
                "integration points must be strictly increasing, got {points:?}"
            )));
        }

        let mut heap = BinaryHeap::with_capacity(points.len() * 4);
        for w in points.windows(2) {
            heap.push(kronrod(&f, w[0], w[1])?);
        }
        let mut total_error: f64 = heap.iter().map(|s| s.error).sum();

        while total_error > self.tol {
            if heap.len() >= self.max_intervals {
                return Err(self.exhausted(heap, "subinterval budget exhausted"));
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if !(worst.a < mid && mid < worst.b) {
                heap.push(worst);
                return Err(self.exhausted(heap, "interval can no longer be bisected"));
            }
            let left = kronrod(&f, worst.a, mid)?;
            let right = kronrod(&f, mid, worst.b)?;
            total_error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            // Running sums drift; recompute occasionally.
            if heap.len() % 64 == 0 {
                total_error = heap.iter().map(|s| s.error).sum();
            }
        }
        Ok(sum_in_order(heap).0)
    }

    fn exhausted(&self, heap: BinaryHeap<Segment>, why: &str) -> Error {
        let (estimate, error) = sum_in_order(heap);
        Error::Numerical {
            message: format!("quadrature did not reach tolerance {:e} ({why})", self.tol),
            estimate,
            error,
        }
    }
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Quadrature::new(tol).integrate(f, a, b)
}

fn sum_in_order(heap: BinaryHeap<Segment>) -> (f64, f64) {
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    segments
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    if !kronrod.is_finite() {
        return Err(Error::Numerical {
            message: format!("integrand is not finite on [{a}, {b}]"),
            estimate: f64::NAN,
            error: f64::INFINITY,
        });
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();

    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }

    Ok(Segment { a, b, value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        // K15 integrates degree 22 exactly; one segment is enough.
        for deg in 0..=22 {
            let seg = kronrod(&|x: f64| x.powi(deg), 0.0, 1.0).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((seg.value - exact).abs() < 1e-15, "degree {deg}");
        }
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let total = 2.0 * (WG[0] + WG[1] + WG[2]) + WG[3];
        assert!((total - 2.0).abs() < 1e-15);
        let kron: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((kron - 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_interval_identity() {
        let v = integrate(|x| (PI * x).sin().powi(2), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_sines() {
        let v = integrate(|x| (PI * x).sin() * (2.0 * PI * x).sin(), 0.0, 1.0, 1e-12).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn half_interval_cross_integral() {
        // antiderivative: sin(pi x)/(2 pi) - sin(3 pi x)/(6 pi), at 1/2 gives 2/(3 pi)
        let v = integrate(|x| (PI * x).sin() * (2.0 * PI * x).sin(), 0.0, 0.5, 1e-12).unwrap();
        assert!((v - 2.0 / (3.0 * PI)).abs() < 1e-12);
        assert!((v - 0.212_206_6).abs() < 1e-7);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let v = Quadrature::new(1e-12)
            .integrate_with_breaks(|x: f64| x.abs(), &[-1.0, 0.0, 2.0])
            .unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_are_a_domain_error() {
        assert!(matches!(integrate(|x| x, 1.0, 0.0, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let q = Quadrature::new(1e-14).with_max_intervals(4);
        match q.integrate(|x: f64| (1.0 / x.max(1e-300)).sqrt(), 0.0, 1.0) {
            Err(Error::Numerical { estimate, .. }) => assert!(estimate > 1.0 && estimate < 2.1),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let f = |x: f64| (40.0 * x).sin() * (-x).exp();
        let a = integrate(f, 0.0, 3.0, 1e-11).unwrap();
        let b = integrate(f, 0.0, 3.0, 1e-11).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
