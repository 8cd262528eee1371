//! Shared oracles for the acceptance gates.
//!
//! Everything here is computed from first principles (quadrature, finite
//! differences, binomial interval algebra) so the gates never compare the
//! library against itself.

use statrs::function::erf::erfc;

/// Adaptive Simpson integration over a pre-partitioned interval.
///
/// The initial breakpoints must bracket every sharp feature of `f`;
/// integrating a narrow-peaked mixture over one wide panel would let the
/// first error estimate pass before the peaks are ever sampled.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, breakpoints: &[f64], tol: f64) -> f64 {
    assert!(breakpoints.len() >= 2, "need at least one panel");
    let panels = breakpoints.len() - 1;
    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        total += simpson_recurse(f, w[0], w[1], tol / panels as f64, 40);
    }
    total
}

fn simpson_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn simpson_recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = simpson_panel(f, a, b);
    let left = simpson_panel(f, a, m);
    let right = simpson_panel(f, m, b);
    let err = left + right - whole;
    if depth == 0 || err.abs() < 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_recurse(f, a, m, tol / 2.0, depth - 1)
        + simpson_recurse(f, m, b, tol / 2.0, depth - 1)
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, total: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((centre - half) / denom).max(0.0), ((centre + half) / denom).min(1.0))
}

/// True if two closed intervals share at least one point.
pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Gaussian upper-tail probability `P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// One-sided paired z statistic for per-trial differences.
///
/// Positive values mean the first series saw more errors; the comparison
/// contradicts "first is at least as good" at the 95% level when the
/// statistic exceeds 1.645.
pub fn paired_z(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return 0.0;
    }
    mean / (var / n).sqrt()
}
