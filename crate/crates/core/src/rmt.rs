//! Random-matrix oracle: compress a deterministic diagonal matrix with a
//! Haar-rotated projection and compare its spectrum with `μ^{⊞1/t}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freepower::FreePowerResult;
use crate::linalg::{self, CMat};
use crate::measures::HermitianSpec;
use crate::rng;

/// Smallest matrix size accepted by [`compressed_spectrum`].
pub const MIN_N: usize = 100;

/// Haar-distributed `N × N` unitary.
pub fn haar_unitary(n: usize, seed: u64) -> Result<CMat> {
    haar_isometry(n, n, seed)
}

/// First `cols` columns of [`haar_unitary`]`(rows, seed)`, computed without
/// forming the full unitary.
///
/// The Ginibre entries are drawn column by column from stream 0 of `seed`,
/// and the first `cols` columns of a Householder QR depend only on the first
/// `cols` input columns.
pub fn haar_isometry(rows: usize, cols: usize, seed: u64) -> Result<CMat> {
    if rows == 0 || cols == 0 || cols > rows {
        return Err(Error::input(format!("isometry shape {rows}×{cols} is invalid")));
    }
    let mut r = rng::stream(seed, 0);
    let g = linalg::ginibre(rows, cols, &mut r);
    Ok(linalg::phase_fixed_q(&g))
}

/// Splits `total` slots proportionally to `weights` by largest remainder
/// (ties go to the lower index).
pub fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut counts: Vec<usize> = weights.iter().map(|&w| w * total / sum).collect();
    let mut rems: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| ((w * total) % sum, i))
        .collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - counts.iter().sum::<usize>();
    for &(_, i) in rems.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionSample {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub seed: u64,
    /// Ascending spectrum of `t⁻¹·W*AW`, `⌊tN⌋` values.
    pub eigenvalues: Vec<f64>,
}

impl CompressionSample {
    pub const CSV_HEADER: &'static str = "N,t,seed,eigenvalue";

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.eigenvalues
            .iter()
            .map(move |e| format!("{},{},{},{}", self.n, self.t, self.seed, e))
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty sample")
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Spectrum of `t⁻¹·W*AW` where `A` repeats each `ξᵢ` about `Dᵢ·N/k` times
/// and `W` is an `N × ⌊tN⌋` Haar isometry.
pub fn compressed_spectrum(spec: &HermitianSpec, t: f64, n: usize, seed: u64) -> Result<CompressionSample> {
    if n < MIN_N {
        return Err(Error::input(format!("N must be at least {MIN_N}, got {n}")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must lie in (0, 1], got {t}")));
    }
    let m = (t * n as f64).floor() as usize;
    if m == 0 {
        return Err(Error::domain(format!("⌊tN⌋ = 0 for t = {t}, N = {n}")));
    }
    let counts = apportion(&spec.eigs().iter().map(|e| e.d).collect::<Vec<_>>(), n);
    let diag: Vec<f64> = spec
        .eigs()
        .iter()
        .zip(&counts)
        .flat_map(|(e, &c)| std::iter::repeat_n(e.xi, c))
        .collect();
    let w = haar_isometry(n, m, seed)?;
    let aw = CMat::from_fn(n, m, |i, j| w[(i, j)] * diag[i]);
    let c = w.adjoint() * &aw;
    let mut eigenvalues = linalg::hermitian_eigenvalues(&c)?;
    for e in &mut eigenvalues {
        *e /= t;
    }
    eigenvalues.sort_by(f64::total_cmp);
    Ok(CompressionSample {
        n,
        t,
        seed,
        eigenvalues,
    })
}

/// Kolmogorov–Smirnov distance between an empirical sample and `μ^{⊞T}`.
pub fn ks_distance(sample: &CompressionSample, result: &FreePowerResult) -> Result<f64> {
    if (result.power * sample.t - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!(
            "sample has t = {} but the distribution has T = {}",
            sample.t, result.power
        )));
    }
    Ok(ks_statistic(&sample.eigenvalues, result))
}

/// Relative distance within which a sample value counts as sitting on an atom.
pub const ATOM_SNAP: f64 = 1e-9;

/// KS statistic of arbitrary values against `μ^{⊞T}`.
///
/// Values within [`ATOM_SNAP`] of an atom are moved onto it: eigenvalues of
/// a compression land on an atom only up to rounding, and one ulp to the
/// left would otherwise miss the whole jump.
pub fn ks_statistic(values: &[f64], result: &FreePowerResult) -> f64 {
    let xs: Vec<f64> = values
        .iter()
        .map(|&x| {
            result
                .atoms
                .iter()
                .find(|a| (x - a.x).abs() <= ATOM_SNAP * a.x.abs().max(1.0))
                .map_or(x, |a| a.x)
        })
        .collect();
    let mut xs = xs;
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut distinct = xs.clone();
    distinct.dedup();
    let cdf = result.cdf_sorted(&distinct);
    let mut d = 0.0f64;
    let mut below = 0usize;
    for (&x, &f) in distinct.iter().zip(&cdf) {
        let at = xs[below..].iter().take_while(|&&v| v == x).count();
        let left = f - result.atom_mass_at(x);
        d = d.max((left - below as f64 / n).abs());
        below += at;
        d = d.max((f - below as f64 / n).abs());
    }
    d
}

/// Piecewise-linear inverse CDF of `μ^{⊞T}` on a sin²-spaced grid.
#[derive(Debug, Clone)]
pub struct QuantileTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuantileTable {
    pub fn new(result: &FreePowerResult, points_per_component: usize) -> Self {
        let mut nodes: Vec<f64> = Vec::new();
        let g = points_per_component.max(2);
        for c in &result.support_components {
            for i in 0..=g {
                let s = (std::f64::consts::FRAC_PI_2 * i as f64 / g as f64).sin();
                nodes.push(c.a + c.width() * s * s);
            }
        }
        for a in &result.atoms {
            nodes.push(a.x);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let cdf_right = result.cdf_sorted(&nodes);
        let mut xs = Vec::with_capacity(2 * nodes.len());
        let mut cdf = Vec::with_capacity(2 * nodes.len());
        for (&x, &f) in nodes.iter().zip(&cdf_right) {
            let jump = result.atom_mass_at(x);
            if jump > 0.0 {
                xs.push(x);
                cdf.push(f - jump);
            }
            xs.push(x);
            cdf.push(f);
        }
        // enforce monotonicity against quadrature noise
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        QuantileTable { xs, cdf }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.cdf.partition_point(|&c| c < p);
        if idx == 0 {
            return self.xs[0];
        }
        if idx >= self.xs.len() {
            return *self.xs.last().expect("non-empty table");
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        if c1 <= c0 {
            return x1;
        }
        x0 + (x1 - x0) * (p - c0) / (c1 - c0)
    }

    /// `count` independent draws by inverse transform.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        let mut v: Vec<f64> = (0..count).map(|_| self.quantile(r.random::<f64>())).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}
