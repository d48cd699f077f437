//! Random quantum channels `Φ(X) = Tr_n(VXV*)` built from Haar isometries.
//!
//! Tensor layout: `ℂ^k ⊗ ℂ^n` is indexed as `i·n + e` with `i` the output
//! and `e` the environment index. For a pure input `ψ`, reshaping `Vψ` to a
//! `k × n` matrix `M` gives `Φ(|ψ⟩⟨ψ|) = MM*`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rmt::haar_isometry;
use crate::rng;

const STATE_TOL: f64 = 1e-10;
/// Largest `k` accepted by [`bell_output`].
pub const BELL_MAX_K: usize = 8;
/// Largest `k²n²` accepted by [`bell_output`].
pub const BELL_MAX_ENTRIES: usize = 1 << 24;
const HMIN_MAX_ITER: usize = 500;

/// Stream of `seed` used for random input `j`. Stream 0 builds the isometry,
/// so one seed can drive both the channel and its inputs.
pub fn input_stream(seed: u64, j: usize) -> rng::StreamRng {
    rng::stream(seed, 1 + j as u64)
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct ChannelInstance {
    k: usize,
    n: usize,
    t: f64,
    d: usize,
    v: CMat,
    seed: u64,
}

impl ChannelInstance {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Requested `t`.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// `d/(kn)`, the value every bound is evaluated at.
    pub fn effective_t(&self) -> f64 {
        self.d as f64 / (self.k * self.n) as f64
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn isometry(&self) -> &CMat {
        &self.v
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Vψ` reshaped to `k × n`, row major.
    fn pure_image(&self, psi: &[Complex64], conjugate: bool) -> Vec<Complex64> {
        let kn = self.k * self.n;
        let mut out = vec![ZERO; kn];
        for (a, &p) in psi.iter().enumerate() {
            let col = self.v.col(a);
            for (i, o) in out.iter_mut().enumerate() {
                let x = col[i];
                *o += if conjugate { x.conj() } else { x } * p;
            }
        }
        out
    }

    /// `MM*` for a `k × n` row-major `M`.
    fn reduced(&self, m: &[Complex64]) -> CMat {
        let (k, n) = (self.k, self.n);
        let mut rho = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let mut s = ZERO;
                for e in 0..n {
                    s += m[i * n + e] * m[j * n + e].conj();
                }
                rho[(i, j)] = s;
                rho[(j, i)] = s.conj();
            }
        }
        rho
    }

    /// Output spectrum for the pure input `ψ`, descending.
    pub fn pure_output_spectrum(&self, psi: &[Complex64]) -> Result<Vec<f64>> {
        check_dim(psi.len(), self.d)?;
        let rho = self.reduced(&self.pure_image(psi, false));
        descending(&rho)
    }
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::input(format!("input has dimension {got}, channel expects {want}")))
    }
}

fn descending(m: &CMat) -> Result<Vec<f64>> {
    let mut e = linalg::hermitian_eigenvalues(m)?;
    e.reverse();
    Ok(e)
}

/// `V` = first `⌊tkn⌋` columns of `haar_unitary(kn, seed)`.
///
/// `tkn` is floored after adding `1e-9`, so `0.1·1000` gives `d = 100`
/// rather than 99 when the product rounds just below an integer.
pub fn random_channel(k: usize, n: usize, t: f64, seed: u64) -> Result<ChannelInstance> {
    if k == 0 || n == 0 {
        return Err(Error::input("k and n must be positive"));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must lie in (0, 1], got {t}")));
    }
    let kn = k * n;
    let d = (t * kn as f64 + 1e-9).floor() as usize;
    if d == 0 {
        return Err(Error::domain(format!("⌊tkn⌋ = 0 for k = {k}, n = {n}, t = {t}")));
    }
    let v = haar_isometry(kn, d.min(kn), seed)?;
    Ok(ChannelInstance { k, n, t, d: d.min(kn), v, seed })
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone)]
pub struct QuantumState {
    matrix: CMat,
}

impl QuantumState {
    pub fn new(matrix: CMat) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::input("state must be a non-empty square matrix"));
        }
        let mut herm = 0.0f64;
        let mut trace = 0.0;
        for i in 0..dim {
            trace += matrix[(i, i)].re;
            for j in 0..dim {
                herm = herm.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm > STATE_TOL {
            return Err(Error::input(format!("not Hermitian (residual {herm:e})")));
        }
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::input(format!("trace is {trace}, expected 1")));
        }
        let lowest = linalg::hermitian_eigenvalues(&matrix)?[0];
        if lowest < -STATE_TOL {
            return Err(Error::input(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(QuantumState { matrix })
    }

    /// `|ψ⟩⟨ψ|/‖ψ‖²`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::input("pure state needs a non-zero finite vector"));
        }
        let m = CMat::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(QuantumState { matrix: m })
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        let w = 1.0 / dim as f64;
        Ok(QuantumState {
            matrix: CMat::from_fn(dim, dim, |i, j| if i == j { Complex64::new(w, 0.0) } else { ZERO }),
        })
    }

    /// Diagonal state with the given (probability) spectrum.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        QuantumState::new(CMat::from_fn(p.len(), p.len(), |i, j| {
            if i == j { Complex64::new(p[i], 0.0) } else { ZERO }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        let m = &self.matrix;
        QuantumState {
            matrix: CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj()),
        }
    }

    /// Spectrum, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        descending(&self.matrix)
    }

    /// `Tr(X − I/dim)²`.
    pub fn purity_excess(&self) -> f64 {
        let dim = self.dim();
        let mut s = 0.0;
        for j in 0..dim {
            for i in 0..dim {
                s += self.matrix[(i, j)].norm_sqr();
            }
        }
        s - 1.0 / dim as f64
    }
}

/// `VXV*` with `V` optionally conjugated entrywise.
fn lift(ch: &ChannelInstance, x: &QuantumState, conjugate: bool) -> Result<CMat> {
    check_dim(x.dim(), ch.d)?;
    let v = if conjugate {
        CMat::from_fn(ch.v.nrows(), ch.v.ncols(), |i, j| ch.v[(i, j)].conj())
    } else {
        ch.v.clone()
    };
    Ok(&v * x.matrix() * v.adjoint())
}

fn trace_env(ch: &ChannelInstance, y: &CMat) -> Result<QuantumState> {
    let (k, n) = (ch.k, ch.n);
    let out = CMat::from_fn(k, k, |i, j| (0..n).map(|e| y[(i * n + e, j * n + e)]).sum());
    QuantumState::new(out)
}

/// `Φ(X) = Tr_n(VXV*)`.
pub fn apply_channel(ch: &ChannelInstance, x: &QuantumState) -> Result<QuantumState> {
    trace_env(ch, &lift(ch, x, false)?)
}

/// `Φ̄(X) = Tr_n(V̄XVᵗ)`.
pub fn apply_conjugate_channel(ch: &ChannelInstance, x: &QuantumState) -> Result<QuantumState> {
    trace_env(ch, &lift(ch, x, true)?)
}

/// Complementary channel `Tr_k(VXV*)`, an `n × n` state.
pub fn apply_complementary(ch: &ChannelInstance, x: &QuantumState) -> Result<QuantumState> {
    let y = lift(ch, x, false)?;
    let (k, n) = (ch.k, ch.n);
    let out = CMat::from_fn(n, n, |e, f| (0..k).map(|i| y[(i * n + e, i * n + f)]).sum());
    QuantumState::new(out)
}

/// `(Φ ⊗ Φ̄)(|Ω⟩⟨Ω|)` for the maximally entangled `Ω ∈ ℂ^d ⊗ ℂ^d`, on `ℂ^k ⊗ ℂ^k`.
///
/// `(V ⊗ V̄)Ω` reshaped to `(kn) × (kn)` is `VV*/√d`; regrouping its rows and
/// columns as `(i₁, i₂) × (e₁, e₂)` gives a `k² × n²` matrix `M` and the
/// output is `MM*`.
pub fn bell_output(ch: &ChannelInstance) -> Result<QuantumState> {
    let (k, n) = (ch.k, ch.n);
    if k > BELL_MAX_K || k * k * n * n > BELL_MAX_ENTRIES {
        return Err(Error::domain(format!(
            "Bell output for k = {k}, n = {n} exceeds the resource guard (k ≤ {BELL_MAX_K}, k²n² ≤ {BELL_MAX_ENTRIES})"
        )));
    }
    let p = &ch.v * ch.v.adjoint();
    let scale = 1.0 / ch.d as f64;
    let k2 = k * k;
    let mut rho = CMat::zeros(k2, k2);
    for r in 0..k2 {
        let (i1, i2) = (r / k, r % k);
        for c in 0..=r {
            let (j1, j2) = (c / k, c % k);
            let mut s = ZERO;
            for e1 in 0..n {
                for e2 in 0..n {
                    s += p[(i1 * n + e1, i2 * n + e2)] * p[(j1 * n + e1, j2 * n + e2)].conj();
                }
            }
            rho[(r, c)] = s * scale;
            rho[(c, r)] = (s * scale).conj();
        }
    }
    QuantumState::new(rho)
}

/// Rényi-`p` entropy of a probability vector, natural log; `p = 1` is Shannon.
/// Entries below zero (rounding) count as zero.
pub fn entropy(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::domain(format!("Rényi order must be positive and finite, got {p}")));
    }
    let pos = values.iter().copied().filter(|&x| x > 0.0);
    let h = if p == 1.0 {
        -pos.map(|x| x * x.ln()).sum::<f64>()
    } else {
        pos.map(|x| x.powf(p)).sum::<f64>().ln() / (1.0 - p)
    };
    // rounding can push a pure spectrum just past 1
    Ok(h.max(0.0))
}

/// Rényi-`p` entropy of a state's spectrum.
pub fn state_entropy(x: &QuantumState, p: f64) -> Result<f64> {
    entropy(&x.eigenvalues()?, p)
}

/// Descending output spectra for `count` Haar-random pure inputs.
/// Input `j` is drawn from [`input_stream`]`(seed, j)`.
pub fn sample_output_spectra(ch: &ChannelInstance, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|j| {
            let psi = rng::unit_vector(&mut input_stream(seed, j), ch.d);
            ch.pure_output_spectrum(&psi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub k: usize,
    pub n: usize,
    pub t: f64,
    pub d: usize,
    pub count: usize,
    pub max_l2: f64,
    pub bound: f64,
    pub seed: u64,
    /// `false` when `t > 1 − 1/k`, where the bound is not claimed.
    pub in_regime: bool,
}

/// `t(1 + 2√((1−t)/(tk)))`.
pub fn concentration_radius(k: usize, t: f64) -> f64 {
    t * (1.0 + 2.0 * ((1.0 - t) / (t * k as f64)).sqrt())
}

/// Largest `‖Φ(X) − I/k‖₂` over `count` Haar-random pure inputs.
pub fn concentration_stat(ch: &ChannelInstance, count: usize, seed: u64) -> Result<ConcentrationReport> {
    if count == 0 {
        return Err(Error::input("count must be at least 1"));
    }
    let inv_k = 1.0 / ch.k as f64;
    let max_sq = (0..count)
        .into_par_iter()
        .map(|j| {
            let psi = rng::unit_vector(&mut input_stream(seed, j), ch.d);
            let m = ch.pure_image(&psi, false);
            let rho = ch.reduced(&m);
            let mut purity = 0.0;
            for c in 0..ch.k {
                for r in 0..ch.k {
                    purity += rho[(r, c)].norm_sqr();
                }
            }
            (purity - inv_k).max(0.0)
        })
        .reduce(|| 0.0, f64::max);
    let t = ch.effective_t();
    Ok(ConcentrationReport {
        k: ch.k,
        n: ch.n,
        t,
        d: ch.d,
        count,
        max_l2: max_sq.sqrt(),
        bound: concentration_radius(ch.k, t),
        seed,
        in_regime: t <= 1.0 - inv_k,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HminEstimate {
    /// Lowest output entropy found, an upper estimate of `H^min`.
    pub value: f64,
    /// Output spectrum at the minimiser, descending.
    pub spectrum: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub input: Vec<Complex64>,
}

fn entropy_at(ch: &ChannelInstance, psi: &[Complex64]) -> Result<(f64, Vec<Complex64>, CMat)> {
    let m = ch.pure_image(psi, false);
    let rho = ch.reduced(&m);
    let h = entropy(&linalg::hermitian_eigenvalues(&rho)?, 1.0)?;
    Ok((h, m, rho))
}

/// Ascent direction `V*((log ρ + I) ⊗ I)Vψ`, which is minus the gradient.
fn descent(ch: &ChannelInstance, m: &[Complex64], rho: &CMat) -> Result<Vec<Complex64>> {
    let (k, n) = (ch.k, ch.n);
    let (vals, u) = linalg::hermitian_eigen(rho)?;
    let logs: Vec<f64> = vals.iter().map(|&l| l.max(1e-30).ln() + 1.0).collect();
    let l = CMat::from_fn(k, k, |i, j| (0..k).map(|a| u[(i, a)] * logs[a] * u[(j, a)].conj()).sum());
    let mut w = vec![ZERO; k * n];
    for i in 0..k {
        for j in 0..k {
            let lij = l[(i, j)];
            for e in 0..n {
                w[i * n + e] += lij * m[j * n + e];
            }
        }
    }
    Ok((0..ch.d)
        .map(|a| {
            let col = ch.v.col(a);
            (0..k * n).map(|r| col[r].conj() * w[r]).sum()
        })
        .collect())
}

fn normalise(v: &mut [Complex64]) {
    let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v {
        *z /= s;
    }
}

fn local_min(ch: &ChannelInstance, mut psi: Vec<Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let (mut h, mut m, mut rho) = entropy_at(ch, &psi)?;
    let mut step = 1.0;
    for _ in 0..HMIN_MAX_ITER {
        let mut g = descent(ch, &m, &rho)?;
        let along: Complex64 = psi.iter().zip(&g).map(|(p, x)| p.conj() * x).sum();
        for (x, p) in g.iter_mut().zip(&psi) {
            *x -= along * p;
        }
        if g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
        let mut moved = false;
        while step > 1e-12 {
            let mut cand: Vec<Complex64> = psi.iter().zip(&g).map(|(p, x)| p + x * step).collect();
            normalise(&mut cand);
            let (hc, mc, rc) = entropy_at(ch, &cand)?;
            if hc < h {
                moved = h - hc > 1e-15;
                psi = cand;
                h = hc;
                m = mc;
                rho = rc;
                step = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((h, psi))
}

/// Multi-start projected-gradient search for `min_ψ H(Φ(|ψ⟩⟨ψ|))`.
///
/// Start `j` is drawn from [`input_stream`]`(seed, j)`, so more restarts never give a
/// larger estimate for the same seed.
pub fn hmin_estimate(ch: &ChannelInstance, restarts: usize, seed: u64) -> Result<HminEstimate> {
    if restarts == 0 {
        return Err(Error::input("restarts must be at least 1"));
    }
    let runs: Vec<(f64, Vec<Complex64>)> = (0..restarts)
        .into_par_iter()
        .map(|j| local_min(ch, rng::unit_vector(&mut input_stream(seed, j), ch.d)))
        .collect::<Result<_>>()?;
    let (value, input) = runs
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |best, r| if r.0 < best.0 { r } else { best });
    Ok(HminEstimate {
        value,
        spectrum: ch.pure_output_spectrum(&input)?,
        restarts,
        seed,
        input,
    })
}
