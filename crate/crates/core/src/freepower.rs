//! Fractional free additive convolution powers `μ^{⊞T}`, `T ≥ 1`, of atomic
//! measures, computed through the subordination function `ω_T`.
//!
//! With `F_μ(z) = z − m + Σ cⱼ/(βⱼ − z)` (the Nevanlinna form), the right
//! inverse of `ω_T` is
//!
//! ```text
//! H_T(z) = z + (T − 1)(m + Σ cⱼ/(z − βⱼ)).
//! ```
//!
//! On the real line `H_T'(x) = 1 − (T − 1) Σ cⱼ/(x − βⱼ)²`; the set `B_T`
//! where this is negative is a finite union of open intervals. Over `B_T`
//! the boundary of `ω_T(ℂ⁺)` is the graph of the height `f_T`, and
//! `u ↦ H_T(u + i f_T(u))` is a real increasing map of each `B_T`
//! component onto a component of the absolutely continuous support.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{invert_f, Atom, AtomicMeasure, ZERO_TOL};
use crate::quad;
use crate::roots;

/// Support images whose endpoints are this close are merged.
pub const MERGE_TOL: f64 = 1e-10;
/// Absolute tolerance of the per-component density quadrature.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// The `H_T` machinery for a fixed measure and power.
#[derive(Debug, Clone)]
pub struct PowerSystem {
    measure: AtomicMeasure,
    power: f64,
    mean: f64,
    variance: f64,
    rho: AtomicMeasure,
}

impl PowerSystem {
    /// Requires a probability measure and `T > 1`.
    pub fn new(measure: &AtomicMeasure, power: f64) -> Result<Self> {
        if !(power > 1.0) || !power.is_finite() {
            return Err(Error::domain(format!("power T must be > 1, got {power}")));
        }
        let (mean, variance) = measure.moments()?;
        let rho = measure.nevanlinna_rho()?;
        Ok(PowerSystem {
            measure: measure.clone(),
            power,
            mean,
            variance,
            rho,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn measure(&self) -> &AtomicMeasure {
        &self.measure
    }

    pub fn rho(&self) -> &AtomicMeasure {
        &self.rho
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `(H_T(z), H_T'(z))`.
    pub fn h(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let tm1 = self.power - 1.0;
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for a in self.rho.atoms() {
            let d = z - a.x;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(Error::domain(format!("H_T has a pole at {}", a.x)));
            }
            let inv = d.inv();
            s1 += a.w * inv;
            s2 += a.w * inv * inv;
        }
        Ok((z + tm1 * (self.mean + s1), 1.0 - tm1 * s2))
    }

    fn h_real(&self, x: f64) -> f64 {
        let s1: f64 = self.rho.atoms().iter().map(|a| a.w / (x - a.x)).sum();
        x + (self.power - 1.0) * (self.mean + s1)
    }

    /// `(T − 1) Σ cⱼ/(x − βⱼ)² − 1` and its derivative; positive exactly on `B_T`.
    fn excess(&self, x: f64) -> (f64, f64) {
        let tm1 = self.power - 1.0;
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        for a in self.rho.atoms() {
            let inv = 1.0 / (x - a.x);
            let inv2 = inv * inv;
            s2 += a.w * inv2;
            s3 += a.w * inv2 * inv;
        }
        (tm1 * s2 - 1.0, -2.0 * tm1 * s3)
    }

    /// Real roots of `H_T'`, ascending. Their count is even; consecutive
    /// pairs bound the components of `B_T`.
    pub fn boundary_roots(&self) -> Result<Vec<f64>> {
        let betas: Vec<f64> = self.rho.atoms().iter().map(|a| a.x).collect();
        if betas.is_empty() {
            return Err(Error::domain("zero variance: B_T is empty"));
        }
        let reach = self.variance.sqrt() * (self.power - 1.0).sqrt() + 1.0;
        let first = betas[0];
        let last = betas[betas.len() - 1];
        let mut out = Vec::with_capacity(2 * betas.len());

        out.push(roots::newton_bisect(|x| self.excess(x), first - reach, first, ZERO_TOL)?);
        for pair in betas.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            // Σ c/(x−β)² is convex between poles; its minimiser separates the
            // (zero or two) crossings of the threshold.
            let xmin = roots::newton_bisect(
                |x| {
                    let mut d1 = 0.0;
                    let mut d2 = 0.0;
                    for a in self.rho.atoms() {
                        let inv = 1.0 / (x - a.x);
                        let inv2 = inv * inv;
                        d1 -= 2.0 * a.w * inv2 * inv;
                        d2 += 6.0 * a.w * inv2 * inv2;
                    }
                    (d1, d2)
                },
                lo,
                hi,
                ZERO_TOL,
            )?;
            if self.excess(xmin).0 < 0.0 {
                out.push(roots::newton_bisect(
                    |x| {
                        let (v, d) = self.excess(x);
                        (-v, -d)
                    },
                    lo,
                    xmin,
                    ZERO_TOL,
                )?);
                out.push(roots::newton_bisect(|x| self.excess(x), xmin, hi, ZERO_TOL)?);
            }
        }
        out.push(roots::newton_bisect(
            |x| {
                let (v, d) = self.excess(x);
                (-v, -d)
            },
            last,
            last + reach,
            ZERO_TOL,
        )?);
        Ok(out)
    }

    /// Components of `B_T` as open intervals.
    pub fn b_components(&self) -> Result<Vec<Interval>> {
        let r = self.boundary_roots()?;
        debug_assert!(r.len() % 2 == 0);
        Ok(r.chunks_exact(2).map(|p| Interval { a: p[0], b: p[1] }).collect())
    }

    /// Height `f_T(x)` of the boundary of `ω_T(ℂ⁺)` above `x`; zero off `B_T`.
    pub fn f_height(&self, x: f64) -> f64 {
        if self.rho.is_empty() || self.excess(x).0 <= 0.0 {
            return 0.0;
        }
        let tm1 = self.power - 1.0;
        let d2: Vec<(f64, f64)> = self.rho.atoms().iter().map(|a| (a.w, (x - a.x).powi(2))).collect();
        // (T−1) Σ c/(d² + s) = 1 has its root below (T−1)ρ(ℝ)
        let s_hi = tm1 * self.rho.total_mass() * (1.0 + 1e-9) + f64::MIN_POSITIVE;
        let s = roots::newton_bisect(
            |s| {
                let mut v = 0.0;
                let mut dv = 0.0;
                for &(c, d) in &d2 {
                    let inv = 1.0 / (d + s);
                    v += c * inv;
                    dv += c * inv * inv;
                }
                (1.0 - tm1 * v, tm1 * dv)
            },
            0.0,
            s_hi,
            s_hi * 1e-16,
        )
        .unwrap_or(0.0);
        s.sqrt()
    }

    fn boundary_point(&self, u: f64) -> Complex64 {
        Complex64::new(u, self.f_height(u))
    }

    /// `u ↦ Re H_T(u + i f_T(u))` and its derivative.
    fn edge_map(&self, u: f64) -> (f64, f64) {
        let f = self.f_height(u);
        if f == 0.0 {
            // off B_T the map is H_T itself, with H_T' = −excess
            return (self.h_real(u), -self.excess(u).0);
        }
        let w = Complex64::new(u, f);
        let mut num = 0.0;
        let mut den = 0.0;
        for a in self.rho.atoms() {
            let q = (u - a.x).powi(2) + f * f;
            num += a.w * (u - a.x) / (q * q);
            den += a.w / (q * q);
        }
        let df = -num / (f * den);
        match self.h(w) {
            Ok((h, dh)) => (h.re, (dh * Complex64::new(1.0, df)).re),
            Err(_) => (self.h_real(u), f64::NAN),
        }
    }

    /// Pairs of (`B_T` component, its image under the edge map).
    fn component_images(&self) -> Result<Vec<(Interval, Interval)>> {
        Ok(self
            .b_components()?
            .into_iter()
            .map(|b| {
                let img = Interval {
                    a: self.h_real(b.a),
                    b: self.h_real(b.b),
                };
                (b, img)
            })
            .collect())
    }

    /// Closed components of the absolutely continuous support, merged when
    /// their endpoints touch within [`MERGE_TOL`].
    pub fn support_components(&self) -> Result<Vec<Interval>> {
        let mut merged: Vec<Interval> = Vec::new();
        for (_, img) in self.component_images()? {
            match merged.last_mut() {
                Some(last) if img.a - last.b <= MERGE_TOL => last.b = last.b.max(img.b),
                _ => merged.push(img),
            }
        }
        Ok(merged)
    }

    /// `ω_T(x)` for `x` in the absolutely continuous support.
    pub fn subordination(&self, x: f64) -> Result<Complex64> {
        self.subordination_in(&self.component_images()?, x)
    }

    fn subordination_in(&self, comps: &[(Interval, Interval)], x: f64) -> Result<Complex64> {
        let (b, img) = comps
            .iter()
            .find(|(_, img)| img.contains(x))
            .ok_or_else(|| Error::domain(format!("{x} is outside the a.c. support")))?;
        if x == img.a {
            return Ok(Complex64::new(b.a, 0.0));
        }
        if x == img.b {
            return Ok(Complex64::new(b.b, 0.0));
        }
        let tol = 1e-15 * (b.a.abs().max(b.b.abs()).max(1.0));
        let u = roots::newton_bisect(
            |u| {
                let (v, d) = self.edge_map(u);
                (v - x, d)
            },
            b.a,
            b.b,
            tol,
        )?;
        Ok(self.boundary_point(u))
    }

    /// Density of the absolutely continuous part at `x` (zero outside).
    pub fn density(&self, x: f64) -> f64 {
        match self.component_images() {
            Ok(comps) => self.density_in(&comps, x),
            Err(_) => 0.0,
        }
    }

    fn density_in(&self, comps: &[(Interval, Interval)], x: f64) -> f64 {
        match self.subordination_in(comps, x) {
            Ok(w) if w.im > 0.0 => match self.measure.cauchy(w) {
                Ok(g) => (-g.im / std::f64::consts::PI).max(0.0),
                Err(_) => 0.0,
            },
            _ => 0.0,
        }
    }

    /// `(F_{μ^{⊞T}}(z), F'_{μ^{⊞T}}(z))` for `z ∈ ℂ⁺`, via `F_μ(ω_T(z))`.
    pub fn power_f_transform(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let w = self.omega(z)?;
        let (f, df) = self.measure.f_transform(w)?;
        let (_, dh) = self.h(w)?;
        Ok((f, df / dh))
    }

    /// `ω_T(z)` for `z ∈ ℂ⁺`, as the attracting fixed point of
    /// `w ↦ z − (T − 1)(m + Σ cⱼ/(w − βⱼ))` followed by Newton polish.
    pub fn omega(&self, z: Complex64) -> Result<Complex64> {
        if !(z.im > 0.0) {
            return Err(Error::domain(format!("ω_T(z) needs Im z > 0, got {z}")));
        }
        let tm1 = self.power - 1.0;
        let step = |w: Complex64| -> Complex64 {
            let s: Complex64 = self.rho.atoms().iter().map(|a| a.w / (w - a.x)).sum();
            z - tm1 * (self.mean + s)
        };
        let mut w = z - tm1 * self.mean;
        let scale = z.norm().max(1.0);
        for _ in 0..10_000 {
            let next = step(w);
            let done = (next - w).norm() <= 1e-10 * scale;
            w = next;
            if done {
                break;
            }
        }
        for _ in 0..50 {
            let (h, dh) = self.h(w)?;
            let delta = (h - z) / dh;
            let cand = w - delta;
            if cand.im <= 0.0 {
                break;
            }
            w = cand;
            if delta.norm() <= 1e-15 * scale {
                break;
            }
        }
        Ok(w)
    }

    /// Voiculescu transform of `μ^{⊞T}`, computed by inverting the
    /// subordinated `F_{μ^{⊞T}}` (independently of `T·φ_μ`).
    pub fn power_voiculescu(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        let w = invert_f(|w| self.power_f_transform(w), z, tol)?;
        Ok(w - z)
    }
}

/// Distribution of `μ^{⊞T}`: absolutely continuous support, atoms and the
/// diagnostics of the `H_T` construction.
#[derive(Debug, Clone, Serialize)]
pub struct FreePowerResult {
    #[serde(rename = "T")]
    pub power: f64,
    pub support_components: Vec<Interval>,
    pub atoms: Vec<Atom>,
    pub bt_components: Vec<Interval>,
    pub boundary_roots: Vec<f64>,
    /// Right edge `x₃` of the a.c. support; `None` without an a.c. part.
    pub x3: Option<f64>,
    /// Rightmost root `x₄` of `H_T'`; `None` without an a.c. part.
    pub x4: Option<f64>,
    pub ac_mass: f64,
    pub atom_mass: f64,
    #[serde(skip)]
    system: Option<PowerSystem>,
}

impl FreePowerResult {
    pub fn system(&self) -> Option<&PowerSystem> {
        self.system.as_ref()
    }

    /// Density of the a.c. part.
    pub fn density(&self, x: f64) -> f64 {
        match &self.system {
            Some(s) => s.density(x),
            None => 0.0,
        }
    }

    /// Densities on a batch of points.
    pub fn density_many(&self, xs: &[f64]) -> Vec<f64> {
        let Some(sys) = &self.system else {
            return vec![0.0; xs.len()];
        };
        let Ok(comps) = sys.component_images() else {
            return vec![0.0; xs.len()];
        };
        xs.par_iter().map(|&x| sys.density_in(&comps, x)).collect()
    }

    /// Leftmost and rightmost points of the whole support.
    pub fn support_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.support_components {
            lo = lo.min(c.a);
            hi = hi.max(c.b);
        }
        for a in &self.atoms {
            lo = lo.min(a.x);
            hi = hi.max(a.x);
        }
        (lo, hi)
    }

    /// `[μ^{⊞T}] = max{|v| : v ∈ supp}`.
    pub fn support_radius(&self) -> f64 {
        let (lo, hi) = self.support_hull();
        lo.abs().max(hi.abs())
    }

    /// a.c. mass of `(-∞, x]` restricted to support components.
    fn ac_mass_between(&self, a: f64, b: f64) -> f64 {
        let Some(sys) = &self.system else { return 0.0 };
        let Ok(comps) = sys.component_images() else { return 0.0 };
        let mut total = 0.0;
        for c in &self.support_components {
            let lo = c.a.max(a);
            let hi = c.b.min(b);
            if hi <= lo {
                continue;
            }
            // keep the edge substitution anchored at the true component edge
            let whole = Interval { a: c.a, b: c.b };
            total += integrate_piece(sys, &comps, whole, lo, hi);
        }
        total
    }

    /// Cumulative distribution function at every point of an ascending list.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        let mut prev = f64::NEG_INFINITY;
        let mut atom_idx = 0;
        let mut atom_acc = 0.0;
        for &x in xs {
            if x > prev {
                acc += self.ac_mass_between(prev, x);
                prev = x;
            }
            while atom_idx < self.atoms.len() && self.atoms[atom_idx].x <= x {
                atom_acc += self.atoms[atom_idx].w;
                atom_idx += 1;
            }
            out.push((acc + atom_acc).min(1.0));
        }
        out
    }

    /// Cumulative distribution function at a single point.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_sorted(&[x])[0]
    }

    /// Atomic mass located exactly at `x`.
    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| a.x == x).map(|a| a.w).sum()
    }
}

fn integrate_piece(
    sys: &PowerSystem,
    comps: &[(Interval, Interval)],
    whole: Interval,
    lo: f64,
    hi: f64,
) -> f64 {
    if lo == whole.a && hi == whole.b {
        return quad::integrate_edges(|x| sys.density_in(comps, x), lo, hi, QUAD_TOL).value;
    }
    // sub-interval: map θ-range of the full-component substitution
    let len = whole.width();
    let theta = |x: f64| ((x - whole.a) / len).clamp(0.0, 1.0).sqrt().asin();
    quad::integrate(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let x = (whole.a + len * s * s).clamp(whole.a, whole.b);
            sys.density_in(comps, x) * 2.0 * len * s * c
        },
        theta(lo),
        theta(hi),
        QUAD_TOL,
    )
    .value
}

/// `(H_T(z), H_T'(z))` for the measure `μ`.
pub fn h_transform(measure: &AtomicMeasure, power: f64, z: Complex64) -> Result<(Complex64, Complex64)> {
    PowerSystem::new(measure, power)?.h(z)
}

/// `B_T` components and the real roots of `H_T'`.
pub fn b_set(measure: &AtomicMeasure, power: f64) -> Result<(Vec<Interval>, Vec<f64>)> {
    let sys = PowerSystem::new(measure, power)?;
    let roots = sys.boundary_roots()?;
    let comps = roots.chunks_exact(2).map(|p| Interval { a: p[0], b: p[1] }).collect();
    Ok((comps, roots))
}

pub fn f_height(measure: &AtomicMeasure, power: f64, x: f64) -> Result<f64> {
    Ok(PowerSystem::new(measure, power)?.f_height(x))
}

pub fn support_components(measure: &AtomicMeasure, power: f64) -> Result<Vec<Interval>> {
    let sys = PowerSystem::new(measure, power)?;
    if sys.rho.is_empty() {
        return Ok(Vec::new());
    }
    sys.support_components()
}

/// Atoms of `μ^{⊞T}`: `(Tξ, Tw − (T − 1))` for each atom with `w > 1 − 1/T`.
pub fn atoms_of_power(measure: &AtomicMeasure, power: f64) -> Result<Vec<Atom>> {
    if !(power >= 1.0) {
        return Err(Error::domain(format!("power T must be ≥ 1, got {power}")));
    }
    let threshold = 1.0 - 1.0 / power;
    Ok(measure
        .atoms()
        .iter()
        .filter(|a| a.w > threshold)
        .map(|a| Atom {
            x: power * a.x,
            w: power * a.w - (power - 1.0),
        })
        .collect())
}

pub fn subordination(measure: &AtomicMeasure, power: f64, x: f64) -> Result<Complex64> {
    PowerSystem::new(measure, power)?.subordination(x)
}

pub fn density(measure: &AtomicMeasure, power: f64, x: f64) -> Result<f64> {
    let sys = PowerSystem::new(measure, power)?;
    if sys.rho.is_empty() {
        return Ok(0.0);
    }
    Ok(sys.density(x))
}

/// Support structure of `μ^{⊞T}` without the mass quadrature.
pub fn power_structure(measure: &AtomicMeasure, power: f64) -> Result<FreePowerResult> {
    if !(power >= 1.0) || !power.is_finite() {
        return Err(Error::domain(format!("power T must be ≥ 1, got {power}")));
    }
    let (mean, variance) = measure.moments()?;
    if power == 1.0 || variance == 0.0 || measure.len() == 1 {
        let atoms = if power == 1.0 {
            measure.atoms().to_vec()
        } else {
            vec![Atom { x: power * mean, w: 1.0 }]
        };
        let atom_mass = atoms.iter().map(|a| a.w).sum();
        return Ok(FreePowerResult {
            power,
            support_components: Vec::new(),
            atoms,
            bt_components: Vec::new(),
            boundary_roots: Vec::new(),
            x3: None,
            x4: None,
            ac_mass: 0.0,
            atom_mass,
            system: None,
        });
    }
    let sys = PowerSystem::new(measure, power)?;
    let boundary_roots = sys.boundary_roots()?;
    let bt_components: Vec<Interval> = boundary_roots
        .chunks_exact(2)
        .map(|p| Interval { a: p[0], b: p[1] })
        .collect();
    let support_components = sys.support_components()?;
    let atoms = atoms_of_power(measure, power)?;
    let atom_mass: f64 = atoms.iter().map(|a| a.w).sum();
    let x4 = boundary_roots.last().copied();
    let x3 = x4.map(|x| sys.h_real(x));
    Ok(FreePowerResult {
        power,
        support_components,
        atoms,
        bt_components,
        boundary_roots,
        x3,
        x4,
        ac_mass: f64::NAN,
        atom_mass,
        system: Some(sys),
    })
}

/// `μ^{⊞T}` for `T ≥ 1`, including the a.c. mass by quadrature.
pub fn free_power(measure: &AtomicMeasure, power: f64) -> Result<FreePowerResult> {
    let mut r = power_structure(measure, power)?;
    if let Some(sys) = &r.system {
        let comps = sys.component_images()?;
        r.ac_mass = r
            .support_components
            .iter()
            .map(|c| quad::integrate_edges(|x| sys.density_in(&comps, x), c.a, c.b, QUAD_TOL).value)
            .sum();
    }
    Ok(r)
}
