//! Finitely atomic measures on the real line and their analytic transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Atoms closer than this are merged on construction.
pub const MERGE_TOL: f64 = 1e-12;
/// Absolute tolerance on the positions of the zeros of `G_μ`.
pub const ZERO_TOL: f64 = 1e-13;
const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// A finitely supported positive measure with strictly increasing atom
/// positions and positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<RawMeasure> for AtomicMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        make_measure(raw.atoms.iter().map(|a| (a.x, a.w)))
    }
}

impl From<AtomicMeasure> for RawMeasure {
    fn from(m: AtomicMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

/// Builds a measure from `(position, weight)` pairs, sorting positions and
/// merging atoms that coincide within [`MERGE_TOL`].
pub fn make_measure<I>(pairs: I) -> Result<AtomicMeasure>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut atoms: Vec<Atom> = Vec::new();
    for (x, w) in pairs {
        if !x.is_finite() || !w.is_finite() {
            return Err(Error::input(format!("non-finite atom ({x}, {w})")));
        }
        if w <= 0.0 {
            return Err(Error::input(format!("non-positive weight {w} at {x}")));
        }
        atoms.push(Atom { x, w });
    }
    if atoms.is_empty() {
        return Err(Error::input("measure needs at least one atom"));
    }
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match merged.last_mut() {
            Some(last) if (a.x - last.x).abs() <= MERGE_TOL => last.w += a.w,
            _ => merged.push(a),
        }
    }
    let total_mass = merged.iter().map(|a| a.w).sum();
    Ok(AtomicMeasure {
        atoms: merged,
        total_mass,
    })
}

impl AtomicMeasure {
    /// The zero measure. Only produced as the Nevanlinna measure of a point
    /// mass; [`make_measure`] rejects empty input.
    pub fn zero() -> Self {
        AtomicMeasure {
            atoms: Vec::new(),
            total_mass: 0.0,
        }
    }

    /// Point mass `δ_c`.
    pub fn dirac(c: f64) -> Result<Self> {
        make_measure([(c, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass - 1.0).abs() <= PROBABILITY_TOL
    }

    pub fn min_position(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.x)
    }

    pub fn max_position(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.x)
    }

    /// Mean and variance of a probability measure.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if !self.is_probability() {
            return Err(Error::domain(format!(
                "moments need a probability measure, total mass is {}",
                self.total_mass
            )));
        }
        let mean: f64 = self.atoms.iter().map(|a| a.w * a.x).sum();
        // centred second moment avoids the E[x²] − mean² cancellation
        let var: f64 = self.atoms.iter().map(|a| a.w * (a.x - mean).powi(2)).sum();
        Ok((mean, var.max(0.0)))
    }

    /// Cauchy transform `G(z) = Σ wᵢ/(z − ξᵢ)`.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        let mut g = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            let d = z - a.x;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(Error::domain(format!("z = {} is an atom", a.x)));
            }
            g += a.w / d;
        }
        Ok(g)
    }

    /// `G'(z) = −Σ wᵢ/(z − ξᵢ)²`.
    pub fn cauchy_derivative(&self, z: Complex64) -> Complex64 {
        -self
            .atoms
            .iter()
            .map(|a| a.w / (z - a.x).powi(2))
            .sum::<Complex64>()
    }

    /// `(G(z), F(z) = 1/G(z))`.
    pub fn cauchy_pair(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let g = self.cauchy(z)?;
        if g.norm_sqr() == 0.0 {
            return Err(Error::domain(format!("G vanishes at {z}, F has a pole")));
        }
        Ok((g, g.inv()))
    }

    /// `F(z)` and `F'(z)`.
    pub fn f_transform(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (g, f) = self.cauchy_pair(z)?;
        let dg = self.cauchy_derivative(z);
        Ok((f, -dg / (g * g)))
    }

    /// The measure `ρ` of the Nevanlinna form
    /// `F(z) = z − mean + Σ cⱼ/(βⱼ − z)`.
    ///
    /// `βⱼ` are the zeros of `G` (one between each pair of consecutive atoms)
    /// and `cⱼ = −1/G'(βⱼ)`. The total mass of `ρ` is the variance.
    pub fn nevanlinna_rho(&self) -> Result<AtomicMeasure> {
        if !self.is_probability() {
            return Err(Error::domain("Nevanlinna measure needs a probability measure"));
        }
        let mut rho = Vec::with_capacity(self.atoms.len().saturating_sub(1));
        for pair in self.atoms.windows(2) {
            let (lo, hi) = (pair[0].x, pair[1].x);
            // −G increases from −∞ to +∞ across the gap
            let beta = roots::newton_bisect(
                |x| {
                    let mut g = 0.0;
                    let mut dg = 0.0;
                    for a in &self.atoms {
                        let d = x - a.x;
                        g += a.w / d;
                        dg += a.w / (d * d);
                    }
                    (-g, dg)
                },
                lo,
                hi,
                ZERO_TOL,
            )?;
            let slope: f64 = self.atoms.iter().map(|a| a.w / (beta - a.x).powi(2)).sum();
            rho.push(Atom { x: beta, w: 1.0 / slope });
        }
        let total_mass = rho.iter().map(|a| a.w).sum();
        Ok(AtomicMeasure {
            atoms: rho,
            total_mass,
        })
    }

    /// Voiculescu transform `φ(z) = F⁻¹(z) − z`, valid for `z` high enough in
    /// the upper half plane.
    pub fn voiculescu_transform(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        let w = invert_f(|w| self.f_transform(w), z, tol)?;
        Ok(w - z)
    }

    /// Image under `x ↦ c·x`.
    pub fn scaled(&self, c: f64) -> Result<AtomicMeasure> {
        make_measure(self.atoms.iter().map(|a| (c * a.x, a.w)))
    }
}

/// Solves `F(w) = z` by damped Newton from `w₀ = z`, keeping iterates in the
/// upper half plane. `f` returns `(F(w), F'(w))`.
pub(crate) fn invert_f<F>(f: F, z: Complex64, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    const MAX_ITER: usize = 200;
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("inverse of F needs Im z > 0, got {z}")));
    }
    if !(tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let mut w = z;
    let (mut fw, mut dfw) = f(w)?;
    let mut res = (fw - z).norm();
    for _ in 0..MAX_ITER {
        if res < tol {
            return Ok(w);
        }
        let step = (fw - z) / dfw;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-8 {
            let cand = w - step * lambda;
            if cand.im > 0.0 {
                if let Ok((fc, dfc)) = f(cand) {
                    let rc = (fc - z).norm();
                    if rc < res {
                        w = cand;
                        fw = fc;
                        dfw = dfc;
                        res = rc;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res < tol {
        return Ok(w);
    }
    Err(Error::NoConvergence {
        what: format!("F(w) = {z}, residual {res:e}"),
        iterations: MAX_ITER,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenspace {
    pub xi: f64,
    pub d: usize,
}

/// Spectrum of a Hermitian `a ∈ M_k`: distinct eigenvalues `ξᵢ` in strictly
/// increasing order with multiplicities `Dᵢ`, `Σ Dᵢ = k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct HermitianSpec {
    k: usize,
    eigs: Vec<Eigenspace>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    k: usize,
    eigs: Vec<Eigenspace>,
}

impl TryFrom<RawSpec> for HermitianSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        HermitianSpec::new(raw.k, raw.eigs)
    }
}

impl From<HermitianSpec> for RawSpec {
    fn from(s: HermitianSpec) -> Self {
        RawSpec { k: s.k, eigs: s.eigs }
    }
}

impl HermitianSpec {
    /// Validates and sorts the eigenspaces. Repeated eigenvalues are rejected;
    /// use [`HermitianSpec::from_eigenvalues`] to group a raw list.
    pub fn new(k: usize, mut eigs: Vec<Eigenspace>) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("dimension k must be positive"));
        }
        if eigs.is_empty() {
            return Err(Error::input("spectrum is empty"));
        }
        for e in &eigs {
            if !e.xi.is_finite() {
                return Err(Error::input(format!("non-finite eigenvalue {}", e.xi)));
            }
            if e.d == 0 {
                return Err(Error::input(format!("zero multiplicity at {}", e.xi)));
            }
        }
        eigs.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        if eigs.windows(2).any(|p| p[1].xi - p[0].xi <= MERGE_TOL) {
            return Err(Error::input("eigenvalues must be distinct"));
        }
        let total: usize = eigs.iter().map(|e| e.d).sum();
        if total != k {
            return Err(Error::input(format!("multiplicities sum to {total}, expected k = {k}")));
        }
        Ok(HermitianSpec { k, eigs })
    }

    /// Groups a list of `k` eigenvalues (with repetition) into eigenspaces.
    pub fn from_eigenvalues(values: &[f64]) -> Result<Self> {
        let mut v = values.to_vec();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite eigenvalue"));
        }
        v.sort_by(f64::total_cmp);
        let mut eigs: Vec<Eigenspace> = Vec::new();
        for x in v {
            match eigs.last_mut() {
                Some(e) if (x - e.xi).abs() <= MERGE_TOL => e.d += 1,
                _ => eigs.push(Eigenspace { xi: x, d: 1 }),
            }
        }
        HermitianSpec::new(values.len(), eigs)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eigs(&self) -> &[Eigenspace] {
        &self.eigs
    }

    /// Spectral measure `Σ (Dᵢ/k) δ_{ξᵢ}`.
    pub fn measure(&self) -> AtomicMeasure {
        let k = self.k as f64;
        let atoms: Vec<Atom> = self
            .eigs
            .iter()
            .map(|e| Atom { x: e.xi, w: e.d as f64 / k })
            .collect();
        let total_mass = atoms.iter().map(|a| a.w).sum();
        AtomicMeasure { atoms, total_mass }
    }

    /// Normalized trace `τ(a)`.
    pub fn tau(&self) -> f64 {
        let k = self.k as f64;
        self.eigs.iter().map(|e| e.d as f64 * e.xi).sum::<f64>() / k
    }

    pub fn variance(&self) -> f64 {
        let k = self.k as f64;
        let tau = self.tau();
        let v = self
            .eigs
            .iter()
            .map(|e| e.d as f64 * (e.xi - tau).powi(2))
            .sum::<f64>()
            / k;
        v.max(0.0)
    }

    /// `σ(a) = (τ(a²) − τ(a)²)^{1/2}`.
    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `L⁻ = min ξᵢ`.
    pub fn l_minus(&self) -> f64 {
        self.eigs[0].xi
    }

    /// `L⁺ = max ξᵢ`.
    pub fn l_plus(&self) -> f64 {
        self.eigs[self.eigs.len() - 1].xi
    }

    /// Operator norm `‖a‖ = max |ξᵢ|`.
    pub fn norm(&self) -> f64 {
        self.l_minus().abs().max(self.l_plus().abs())
    }

    /// Largest multiplicity `D₁`.
    pub fn max_multiplicity(&self) -> usize {
        self.eigs.iter().map(|e| e.d).max().unwrap_or(0)
    }

    /// `‖a − τ(a)‖`.
    pub fn centered_norm(&self) -> f64 {
        let tau = self.tau();
        (self.l_minus() - tau).abs().max((self.l_plus() - tau).abs())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.l_minus() >= 0.0
    }

    /// The spectrum of `c·a`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let eigs = self
            .eigs
            .iter()
            .map(|e| Eigenspace { xi: c * e.xi, d: e.d })
            .collect();
        HermitianSpec::new(self.k, eigs)
    }
}
