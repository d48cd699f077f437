//! The `(t)`-norm `‖a‖_(t) = t·[μ_a^{⊞1/t}]` and its closed-form estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freepower::power_structure;
use crate::measures::HermitianSpec;
use crate::rng;

const SIMPLEX_TOL: f64 = 1e-9;

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("t must lie in (0, 1], got {t}")))
    }
}

/// Exact `(t)`-norm from the support of `μ_a^{⊞1/t}`, atoms included.
pub fn tnorm_exact(spec: &HermitianSpec, t: f64) -> Result<f64> {
    check_t(t)?;
    let power = if t == 1.0 { 1.0 } else { 1.0 / t };
    let r = power_structure(&spec.measure(), power)?;
    Ok(t * r.support_radius())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    /// Bound with atom positions entering as `|ξ|`.
    pub bound: f64,
    /// Same bound with the largest qualifying `ξ` taken without absolute value.
    pub bound_signed: f64,
    /// Whether some eigenspace has `Dᵢ > k(1 − t)`, i.e. `μ_a^{⊞1/t}` has atoms.
    pub atom_dominated: bool,
}

/// `max{|tL⁺ + 2σ√(t(1−t)) + (1−t)τ|, |tL⁻ − 2σ√(t(1−t)) + (1−t)τ|}`
fn edge_bound(spec: &HermitianSpec, t: f64) -> f64 {
    let spread = 2.0 * spec.sigma() * (t * (1.0 - t)).sqrt();
    let shift = (1.0 - t) * spec.tau();
    let right = t * spec.l_plus() + spread + shift;
    let left = t * spec.l_minus() - spread + shift;
    right.abs().max(left.abs())
}

pub fn upper_bound(spec: &HermitianSpec, t: f64) -> Result<UpperBound> {
    check_t(t)?;
    let base = edge_bound(spec, t);
    let cut = spec.k() as f64 * (1.0 - t);
    let heavy: Vec<f64> = spec
        .eigs()
        .iter()
        .filter(|e| e.d as f64 > cut)
        .map(|e| e.xi)
        .collect();
    if heavy.is_empty() {
        return Ok(UpperBound {
            bound: base,
            bound_signed: base,
            atom_dominated: false,
        });
    }
    let abs_max = heavy.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let signed_max = heavy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(UpperBound {
        bound: base.max(abs_max),
        bound_signed: base.max(signed_max),
        atom_dominated: true,
    })
}

/// Lower estimate for `a ≥ 0` with `‖a‖ ≤ L`:
/// `τ + (1 + ε)σ√(t(1−t)) − t(L + τ)`, `ε = σ√(1/t−1)/(L + σ√(1/t−1))`.
pub fn lower_bound(spec: &HermitianSpec, t: f64, l: f64) -> Result<f64> {
    check_t(t)?;
    if !spec.is_nonnegative() {
        return Err(Error::domain("lower bound needs a ≥ 0"));
    }
    if !(l >= spec.l_plus()) {
        return Err(Error::domain(format!("L = {l} is below ‖a‖ = {}", spec.l_plus())));
    }
    let sigma = spec.sigma();
    let tau = spec.tau();
    let grow = sigma * (1.0 / t - 1.0).sqrt();
    let eps = if grow == 0.0 { 0.0 } else { grow / (l + grow) };
    Ok(tau + (1.0 + eps) * sigma * (t * (1.0 - t)).sqrt() - t * (l + tau))
}

/// `τ + 2√t σ + 5t‖a − τ‖³/σ²`, stated for `t = 1/n` only.
pub fn kargin_bound(spec: &HermitianSpec, t: f64) -> Result<f64> {
    check_t(t)?;
    let n = (1.0 / t).round();
    if (n * t - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("1/t = {} is not an integer", 1.0 / t)));
    }
    let var = spec.variance();
    if var == 0.0 {
        return Err(Error::domain("zero variance: bound is undefined"));
    }
    Ok(spec.tau() + 2.0 * t.sqrt() * var.sqrt() + 5.0 * t * spec.centered_norm().powi(3) / var)
}

/// Small-`t` asymptote `τ + 2√t σ`.
pub fn superconvergence_asymptote(spec: &HermitianSpec, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(spec.tau() + 2.0 * t.sqrt() * spec.sigma())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TNormReport {
    pub t: f64,
    pub exact: f64,
    pub upper: f64,
    pub upper_signed: f64,
    pub lower: Option<f64>,
    pub kargin: Option<f64>,
    pub asymptote: f64,
    pub atom_dominated: bool,
}

impl TNormReport {
    pub const CSV_HEADER: &'static str = "t,exact,upper,lower,kargin,asymptote,atom_dominated";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.t,
            self.exact,
            self.upper,
            opt(self.lower),
            opt(self.kargin),
            self.asymptote,
            self.atom_dominated
        )
    }
}

/// Exact norm with every estimate that applies. `l` defaults to `‖a‖`.
pub fn report(spec: &HermitianSpec, t: f64, l: Option<f64>) -> Result<TNormReport> {
    let exact = tnorm_exact(spec, t)?;
    let up = upper_bound(spec, t)?;
    let lower = if spec.is_nonnegative() {
        Some(lower_bound(spec, t, l.unwrap_or_else(|| spec.norm()))?)
    } else {
        None
    };
    Ok(TNormReport {
        t,
        exact,
        upper: up.bound,
        upper_signed: up.bound_signed,
        lower,
        kargin: kargin_bound(spec, t).ok(),
        asymptote: superconvergence_asymptote(spec, t)?,
        atom_dominated: up.atom_dominated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub worst_margin: f64,
    pub worst_probe: Vec<f64>,
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < -SIMPLEX_TOL) {
        return Err(Error::input("simplex point must be non-empty and non-negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::input(format!("simplex point sums to {s}")));
    }
    Ok(())
}

/// Tests `⟨λ, a⟩ ≤ ‖a‖_(t)` over the probes `a`. A failing probe certifies
/// non-membership; passing all probes is only evidence of membership.
pub fn kkt_membership(lambda: &[f64], t: f64, probes: &[Vec<f64>], tol: f64) -> Result<Membership> {
    check_t(t)?;
    check_simplex(lambda)?;
    if probes.is_empty() {
        return Err(Error::input("no probes"));
    }
    for p in probes {
        check_simplex(p)?;
        if p.len() != lambda.len() {
            return Err(Error::input("probe dimension differs from λ"));
        }
    }
    let margins: Vec<f64> = probes
        .par_iter()
        .map(|a| {
            let spec = HermitianSpec::from_eigenvalues(a)?;
            let inner: f64 = lambda.iter().zip(a).map(|(l, x)| l * x).sum();
            Ok(inner - tnorm_exact(&spec, t)?)
        })
        .collect::<Result<_>>()?;
    let (idx, worst) = margins
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) });
    Ok(Membership {
        member: worst <= tol,
        worst_margin: worst,
        worst_probe: probes[idx].clone(),
    })
}

/// Default probe set: the `k` vertices, the uniform point pushed towards and
/// away from each vertex, and `random` flat-Dirichlet samples.
pub fn default_probes(k: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut probes = Vec::with_capacity(3 * k + random);
    let u = 1.0 / k as f64;
    for i in 0..k {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        probes.push(v);
    }
    if k > 1 {
        let delta = 0.5 / (k - 1) as f64;
        for i in 0..k {
            for sign in [1.0, -1.0] {
                let v: Vec<f64> = (0..k)
                    .map(|j| {
                        let e = if i == j { 1.0 } else { 0.0 };
                        u + sign * delta * (e - u)
                    })
                    .collect();
                probes.push(v);
            }
        }
    }
    let mut r = rng::stream(seed, 0);
    for _ in 0..random {
        probes.push(rng::dirichlet_flat(&mut r, k));
    }
    probes
}
