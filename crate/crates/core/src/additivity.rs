//! Closed-form analysis of the minimum-output-entropy additivity gap
//! `g(k, r) = 2(1−t) log k + h(t) − 2f(k, t)` with `t = k^{−r}`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qchannel::{state_entropy, QuantumState};

/// Below this `l_{k,t}` the Taylor remainder is treated as undefined.
const L_FLOOR: f64 = 1e-13;

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} is outside [0, 1]")))
    }
}

fn check_kt(k: u64, t: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must lie in (0, 1], got {t}")));
    }
    Ok(())
}

/// `a + b − 2ab + 2√(ab(1−a)(1−b))`, clamped to `[0, 1]`.
pub fn phi_overlap(a: f64, b: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    let v = a + b - 2.0 * a * b + 2.0 * (a * b * (1.0 - a) * (1.0 - b)).sqrt();
    Ok(v.clamp(0.0, 1.0))
}

/// Binary entropy `−t log t − (1−t) log(1−t)`.
pub fn binary_entropy(t: f64) -> f64 {
    let a = if t > 0.0 { -t * t.ln() } else { 0.0 };
    let b = if t < 1.0 { -(1.0 - t) * (-t).ln_1p() } else { 0.0 };
    a + b
}

/// `(l, u) = (1 − φ((k−1)/k, t), φ(1/k, t))`, in a form free of the
/// `1 − (1 − …)` cancellation.
pub fn simplex_bounds(k: u64, t: f64) -> Result<(f64, f64)> {
    check_kt(k, t)?;
    let kf = k as f64;
    let root = 2.0 * (t * (kf - 1.0) * (1.0 - t)).sqrt() / kf;
    let l = (1.0 / kf + t * (kf - 2.0) / kf - root).max(0.0);
    let u = (1.0 / kf + upper_excess(kf, t)).min(1.0);
    Ok((l, u))
}

/// `u_{k,t} − 1/k`.
fn upper_excess(kf: f64, t: f64) -> f64 {
    t - 2.0 * t / kf + 2.0 * (t * (kf - 1.0) * (1.0 - t)).sqrt() / kf
}

/// `(C, R²)` with `f = log k − C t² R²`.
fn taylor_parts(k: u64, t: f64) -> Result<(f64, f64)> {
    let (l, _) = simplex_bounds(k, t)?;
    if l <= L_FLOOR {
        return Err(Error::domain(format!(
            "l_{{k,t}} = {l:e} vanishes for k = {k}, t = {t}; the Taylor bound is undefined"
        )));
    }
    let kf = k as f64;
    let c = kf / 2.0 + upper_excess(kf, t) / (6.0 * l * l);
    let r = 1.0 + 2.0 * ((1.0 - t) / (t * kf)).sqrt();
    Ok((c, r * r))
}

/// `f(k, t) = log k − [k/2 + (u − 1/k)/(6l²)]·t²·[1 + 2√((1−t)/(tk))]²`.
pub fn taylor_lower_f(k: u64, t: f64) -> Result<f64> {
    let (c, r2) = taylor_parts(k, t)?;
    Ok((k as f64).ln() - c * t * t * r2)
}

/// `2(1−t) log k + h(t)`.
pub fn product_bound(k: u64, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must lie in (0, 1], got {t}")));
    }
    let kf = k as f64;
    if t < 1.0 / (kf * kf) {
        return Err(Error::domain(format!("t = {t} is below k⁻² = {}", 1.0 / (kf * kf))));
    }
    Ok(2.0 * (1.0 - t) * kf.ln() + binary_entropy(t))
}

/// Neumaier-compensated sum, smallest magnitude first.
fn careful_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in terms {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationReport {
    pub k: u64,
    pub r: f64,
    pub t: f64,
    pub g: f64,
    pub product_bound: f64,
    pub single_lower: f64,
    pub violated: bool,
}

/// Gap `g(k, r)` at `t = k^{−r}`.
///
/// The `2 log k` terms cancel exactly, so `g` is summed as
/// `−2t log k + h(t) + 2C t² R²`; `|g|` can be ~1e-11 against terms of
/// order 1e-5, which leaves about six significant digits.
pub fn gap_g(k: u64, r: f64) -> Result<ViolationReport> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if !(1.0..2.0).contains(&r) {
        return Err(Error::domain(format!("r must lie in [1, 2), got {r}")));
    }
    let kf = k as f64;
    let t = kf.powf(-r);
    let (c, r2) = taylor_parts(k, t)?;
    let lk = kf.ln();
    let g = careful_sum(vec![
        -2.0 * t * lk,
        -t * t.ln(),
        -(1.0 - t) * (-t).ln_1p(),
        2.0 * c * t * t * r2,
    ]);
    Ok(ViolationReport {
        k,
        r,
        t,
        g,
        product_bound: 2.0 * (1.0 - t) * lk + binary_entropy(t),
        single_lower: lk - c * t * t * r2,
        violated: g < 0.0,
    })
}

/// `(log k − H(X), k·Tr(X − I/k)²)`; the first never exceeds the second.
pub fn hastings_gap(x: &QuantumState) -> Result<(f64, f64)> {
    let k = x.dim() as f64;
    Ok((k.ln() - state_entropy(x, 1.0)?, k * x.purity_excess()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub k_min: f64,
    pub k_max: f64,
    /// Log-spaced points in `[k_min, k_max]`, rounded to integers.
    pub k_points: usize,
    pub r_min: f64,
    /// Exclusive upper end of the `r` grid.
    pub r_max: f64,
    pub r_step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            k_min: 1e4,
            k_max: 1e5,
            k_points: 200,
            r_min: 1.0,
            r_max: 2.0,
            r_step: 0.001,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        if !(self.k_min >= 2.0 && self.k_max >= self.k_min && self.k_max.is_finite()) {
            return Err(Error::input(format!("bad k range [{}, {}]", self.k_min, self.k_max)));
        }
        if self.k_points == 0 {
            return Err(Error::input("k_points must be at least 1"));
        }
        if !(self.r_min >= 1.0 && self.r_min < 2.0 && self.r_max <= 2.0 && self.r_max >= self.r_min) {
            return Err(Error::input(format!("bad r range [{}, {})", self.r_min, self.r_max)));
        }
        if !(self.r_step > 0.0) {
            return Err(Error::input("r_step must be positive"));
        }
        Ok(())
    }

    pub fn k_grid(&self) -> Vec<u64> {
        let n = self.k_points;
        let (a, b) = (self.k_min.ln(), self.k_max.ln());
        let mut ks: Vec<u64> = (0..n)
            .map(|i| {
                let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                (a + (b - a) * s).exp().round() as u64
            })
            .collect();
        ks.dedup();
        ks
    }

    /// `r_min + j·r_step` for `r < r_max`; at least `r_min` itself.
    pub fn r_grid(&self) -> Vec<f64> {
        let mut rs = vec![self.r_min];
        let mut j = 1u64;
        loop {
            let r = self.r_min + j as f64 * self.r_step;
            if r >= self.r_max || r >= 2.0 {
                break;
            }
            rs.push(r);
            j += 1;
        }
        rs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub k: u64,
    pub r: f64,
    pub t: f64,
    /// NaN where the Taylor bound is undefined.
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub k: u64,
    pub r: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub k_points: usize,
    pub r_points: usize,
    /// Smallest grid `k` with some `g < 0`, at the `r` minimising `g`.
    pub grid_minimum: Option<Witness>,
    /// Smallest integer `k` with some `g < 0` on the same `r` grid, found by
    /// bisection between the last clean and first violating grid `k`.
    pub refined_minimum: Option<Witness>,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
    k_grid: Vec<u64>,
    r_grid: Vec<f64>,
}

pub const SCAN_CSV_HEADER: &str = "k,r,t,g";

fn row(k: u64, r: f64) -> ScanRow {
    match gap_g(k, r) {
        Ok(v) => ScanRow { k, r, t: v.t, g: v.g },
        Err(_) => ScanRow { k, r, t: (k as f64).powf(-r), g: f64::NAN },
    }
}

/// Most negative `g(k, ·)` over `rs`, if any is negative.
fn best_violation(k: u64, rs: &[f64]) -> Option<Witness> {
    rs.iter()
        .map(|&r| row(k, r))
        .filter(|w| w.g < 0.0)
        .min_by(|a, b| a.g.total_cmp(&b.g))
        .map(|w| Witness { k, r: w.r, g: w.g })
}

pub fn scan_violation(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let ks = cfg.k_grid();
    let rs = cfg.r_grid();
    let rows: Vec<ScanRow> = ks
        .par_iter()
        .flat_map_iter(|&k| rs.iter().map(move |&r| row(k, r)))
        .collect();
    let first = ks.iter().position(|&k| best_violation(k, &rs).is_some());
    let grid_minimum = first.and_then(|i| best_violation(ks[i], &rs));
    let refined_minimum = match first {
        Some(0) => grid_minimum,
        Some(i) => {
            let (mut lo, mut hi) = (ks[i - 1], ks[i]);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if best_violation(mid, &rs).is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            best_violation(hi, &rs)
        }
        None => None,
    };
    Ok(ScanResult {
        summary: ScanSummary {
            k_points: ks.len(),
            r_points: rs.len(),
            grid_minimum,
            refined_minimum,
        },
        rows,
        k_grid: ks,
        r_grid: rs,
    })
}

impl ScanResult {
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.rows.iter().map(|w| format!("{},{},{:e},{:e}", w.k, w.r, w.t, w.g))
    }

    /// Zero contour of `g` over (log k, r) as line segments, by marching squares.
    pub fn contour_svg(&self) -> String {
        let (w, h, pad) = (640.0, 420.0, 40.0);
        let nk = self.k_grid.len();
        let nr = self.r_grid.len();
        let lk: Vec<f64> = self.k_grid.iter().map(|&k| (k as f64).ln()).collect();
        let (x0, x1) = (lk[0], lk[nk - 1]);
        let (y0, y1) = (self.r_grid[0], self.r_grid[nr - 1]);
        let sx = |x: f64| pad + if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.5 } * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - if y1 > y0 { (y - y0) / (y1 - y0) } else { 0.5 } * (h - 2.0 * pad);
        let g = |i: usize, j: usize| self.rows[i * nr + j].g;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log k ∈ [{:.3}, {:.3}]</text>"#,
            w / 2.0,
            h - 10.0,
            x0,
            x1
        );
        let _ = writeln!(
            out,
            r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">r ∈ [{y0}, {y1}]</text>"#,
            h / 2.0,
            h / 2.0
        );
        for i in 0..nk.saturating_sub(1) {
            for j in 0..nr.saturating_sub(1) {
                let corners = [
                    (lk[i], self.r_grid[j], g(i, j)),
                    (lk[i + 1], self.r_grid[j], g(i + 1, j)),
                    (lk[i + 1], self.r_grid[j + 1], g(i + 1, j + 1)),
                    (lk[i], self.r_grid[j + 1], g(i, j + 1)),
                ];
                if corners.iter().any(|c| !c.2.is_finite()) {
                    continue;
                }
                let mut pts = Vec::with_capacity(4);
                for e in 0..4 {
                    let (a, b) = (corners[e], corners[(e + 1) % 4]);
                    if (a.2 < 0.0) != (b.2 < 0.0) {
                        let s = a.2 / (a.2 - b.2);
                        pts.push((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)));
                    }
                }
                for pair in pts.chunks_exact(2) {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red"/>"#,
                        sx(pair[0].0),
                        sy(pair[0].1),
                        sx(pair[1].0),
                        sy(pair[1].1)
                    );
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}
