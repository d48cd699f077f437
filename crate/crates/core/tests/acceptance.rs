//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use freecontract::additivity::{gap_g, hastings_gap, product_bound, scan_violation, ScanConfig};
use freecontract::freepower::{power_structure, PowerSystem};
use freecontract::linalg::{self, CMat};
use freecontract::qchannel::{self, random_channel, QuantumState};
use freecontract::rmt::{compressed_spectrum, ks_distance};
use freecontract::rng;
use freecontract::tnorm::{kargin_bound, lower_bound, tnorm_exact, upper_bound};
use freecontract::{free_power, make_measure, AtomicMeasure, HermitianSpec};

type Verdict = Result<String, String>;
type Check = Box<dyn FnOnce(&mut Vec<String>) -> Verdict>;

fn bernoulli() -> HermitianSpec {
    HermitianSpec::from_eigenvalues(&[-1.0, 1.0]).unwrap()
}

fn err(e: freecontract::Error) -> String {
    e.to_string()
}

fn random_measure(seed: u64, index: u64) -> AtomicMeasure {
    let mut r = rng::stream(seed, index);
    let n = r.random_range(2..=8usize);
    let w = rng::dirichlet_flat(&mut r, n);
    let xs: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
    make_measure(xs.into_iter().zip(w)).unwrap()
}

fn c1_bernoulli_norm() -> Verdict {
    let spec = bernoulli();
    let mut worst = 0.0f64;
    for t in [0.05, 0.1, 0.25, 0.4, 0.5] {
        worst = worst.max((tnorm_exact(&spec, t).map_err(err)? - 2.0 * (t * (1.0 - t)).sqrt()).abs());
    }
    for t in [0.5, 0.6, 0.8, 1.0] {
        worst = worst.max((tnorm_exact(&spec, t).map_err(err)? - 1.0).abs());
    }
    let msg = format!("max |error| {worst:.1e} over 9 values of t");
    if worst < 1e-9 { Ok(msg) } else { Err(msg) }
}

fn c2_bernoulli_power() -> Verdict {
    let m = bernoulli().measure();
    let (mut edge, mut atom) = (0.0f64, 0.0f64);
    for tp in [1.2, 2.0, 4.0, 10.0] {
        let r = power_structure(&m, tp).map_err(err)?;
        let e = 2.0 * (tp - 1.0).sqrt();
        if r.support_components.len() != 1 {
            return Err(format!("T = {tp}: {} support components", r.support_components.len()));
        }
        let c = r.support_components[0];
        edge = edge.max((c.a + e).abs()).max((c.b - e).abs());
        let mass = tp / 2.0 - (tp - 1.0);
        if tp < 2.0 {
            if r.atoms.len() != 2 {
                return Err(format!("T = {tp}: expected atoms at ±T, got {:?}", r.atoms));
            }
            for (a, x) in r.atoms.iter().zip([-tp, tp]) {
                atom = atom.max((a.x - x).abs()).max((a.w - mass).abs());
            }
        } else if !r.atoms.is_empty() {
            return Err(format!("T = {tp}: unexpected atoms {:?}", r.atoms));
        }
    }
    let msg = format!("edge error {edge:.1e}, atom error {atom:.1e}");
    if edge < 1e-9 && atom < 1e-12 { Ok(msg) } else { Err(msg) }
}

fn c3_violation() -> Verdict {
    let v = gap_g(31114, 1.387).map_err(err)?;
    let target = -6.71108e-12;
    if !((v.g - target).abs() < 1e-12 && v.g < 0.0) {
        return Err(format!("g(31114, 1.387) = {:e}", v.g));
    }
    let cfg = ScanConfig::default();
    let s = scan_violation(&cfg).map_err(err)?;
    let grid = s.summary.grid_minimum.ok_or("scan found no violation")?;
    let refined = s.summary.refined_minimum.ok_or("no refined minimum")?;
    let ks = cfg.k_grid();
    let i = ks.iter().position(|&k| k == grid.k).unwrap();
    let resolution = ks[i] - ks[i.saturating_sub(1)];
    let msg = format!(
        "g = {:.5e}; grid minimum k = {} (r = {}, spacing {resolution}), refined k = {} (r = {})",
        v.g, grid.k, grid.r, refined.k, refined.r
    );
    if grid.k.abs_diff(31114) <= resolution && refined.k == 31114 { Ok(msg) } else { Err(msg) }
}

fn c4_mass() -> Verdict {
    let powers = [1.1, 1.5, 2.0, 4.0, 10.0];
    let errors: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let m = random_measure(404, i);
            powers
                .iter()
                .map(|&tp| {
                    let r = free_power(&m, tp).map_err(err)?;
                    Ok((r.ac_mass + r.atom_mass - 1.0).abs())
                })
                .collect::<Result<Vec<f64>, String>>()
        })
        .collect::<Result<Vec<_>, String>>()?
        .into_iter()
        .flatten()
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let msg = format!("worst |mass − 1| {worst:.1e} over {} cases", errors.len());
    if worst < 1e-6 { Ok(msg) } else { Err(msg) }
}

fn random_nonnegative_spec(i: u64) -> HermitianSpec {
    let mut r = rng::stream(505, i);
    let k = r.random_range(2..=12usize);
    let distinct = r.random_range(2..=k);
    let pool: Vec<f64> = (0..distinct).map(|_| r.random_range(0.0..5.0)).collect();
    let values: Vec<f64> = (0..k).map(|_| pool[r.random_range(0..distinct)]).collect();
    HermitianSpec::from_eigenvalues(&values).unwrap()
}

fn c5_sandwich(log: &mut Vec<String>) -> Verdict {
    let specs: Vec<HermitianSpec> = (0..1000).map(random_nonnegative_spec).collect();
    let failures: Vec<String> = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut out = Vec::new();
            for t in [0.1, 0.25, 0.5] {
                let exact = tnorm_exact(s, t).map_err(err)?;
                let up = upper_bound(s, t).map_err(err)?.bound;
                let low = lower_bound(s, t, s.norm()).map_err(err)?;
                let slack = 1e-9 * exact.max(1.0);
                if !(low <= exact + slack && exact <= up + slack) {
                    out.push(format!("spec {i}, t = {t}: {low} ≤ {exact} ≤ {up} fails"));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, String>>()?
        .into_iter()
        .flatten()
        .collect();
    let (mut kargin_checked, mut kargin_skipped) = (0, 0);
    for (i, s) in specs.iter().enumerate() {
        for n in 2..=10 {
            let t = 1.0 / n as f64;
            match kargin_bound(s, t) {
                Ok(kb) => {
                    kargin_checked += 1;
                    let up = upper_bound(s, t).map_err(err)?.bound;
                    if up > kb + 1e-9 * kb.abs().max(1.0) {
                        log.push(format!("spec {i}, t = 1/{n}: upper {up} > kargin {kb}"));
                    }
                }
                Err(_) => kargin_skipped += 1,
            }
        }
    }
    let msg = format!(
        "{} sandwich failures in 3000 cases; upper > kargin in {} of {kargin_checked} cases ({kargin_skipped} zero-variance skipped)",
        failures.len(),
        log.len()
    );
    if failures.is_empty() { Ok(msg) } else { Err(format!("{msg}; first: {}", failures[0])) }
}

fn c6_rmt() -> Verdict {
    let spec = bernoulli();
    let mut worst_ks = 0.0f64;
    let mut worst_rel = 0.0f64;
    for t in [0.25, 0.5] {
        let reference = free_power(&spec.measure(), 1.0 / t).map_err(err)?;
        let exact = tnorm_exact(&spec, t).map_err(err)?;
        for seed in 0..5 {
            let s = compressed_spectrum(&spec, t, 2000, seed).map_err(err)?;
            worst_ks = worst_ks.max(ks_distance(&s, &reference).map_err(err)?);
            let top = t * s.min().abs().max(s.max().abs());
            worst_rel = worst_rel.max((top - exact).abs() / exact);
        }
    }
    let msg = format!("worst KS {worst_ks:.4}, worst top-eigenvalue relative error {:.2}%", 100.0 * worst_rel);
    if worst_ks < 0.05 && worst_rel < 0.03 { Ok(msg) } else { Err(msg) }
}

fn c7_hayden_winter() -> Verdict {
    let (mut gap, mut excess) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..100 {
        let ch = random_channel(3, 8, 0.25, seed).map_err(err)?;
        let b = qchannel::bell_output(&ch).map_err(err)?;
        let e = b.eigenvalues().map_err(err)?;
        let t = ch.effective_t();
        gap = gap.min(e[0] - t);
        let h = qchannel::entropy(&e, 1.0).map_err(err)?;
        excess = excess.max(h - product_bound(3, t).map_err(err)?);
    }
    let msg = format!("min λ_max − t = {gap:.4}, max H − bound = {excess:.4} over 100 channels");
    if gap >= -1e-10 && excess <= 1e-9 { Ok(msg) } else { Err(msg) }
}

fn c8_concentration() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let ch = random_channel(4, 250, 0.1, seed).map_err(err)?;
        let r = qchannel::concentration_stat(&ch, 10_000, seed).map_err(err)?;
        if (r.bound - 0.4).abs() > 1e-12 || !r.in_regime {
            return Err(format!("unexpected radius {} / regime {}", r.bound, r.in_regime));
        }
        worst = worst.max(r.max_l2);
    }
    let msg = format!("max ‖Φ(X) − I/k‖₂ = {worst:.4} against 0.42");
    if worst <= 0.4 * 1.05 { Ok(msg) } else { Err(msg) }
}

fn random_state(k: usize, seed: u64, i: u64) -> QuantumState {
    let mut r = rng::stream(seed, i);
    let mut p = rng::dirichlet_flat(&mut r, k);
    // sharpen some spectra towards pure states
    let power = [1.0, 3.0, 12.0][(i % 3) as usize];
    let s: f64 = p.iter().map(|x| x.powf(power)).sum();
    for x in &mut p {
        *x = x.powf(power) / s;
    }
    let u = linalg::phase_fixed_q(&linalg::ginibre(k, k, &mut r));
    let m = CMat::from_fn(k, k, |a, b| (0..k).map(|j| u[(a, j)] * p[j] * u[(b, j)].conj()).sum::<Complex64>());
    let m = CMat::from_fn(k, k, |a, b| 0.5 * (m[(a, b)] + m[(b, a)].conj()));
    QuantumState::new(m).unwrap()
}

fn c9_hastings() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    for k in 2..=8 {
        for i in 0..1000 {
            let (lhs, rhs) = hastings_gap(&random_state(k, 909 + k as u64, i)).map_err(err)?;
            worst = worst.max(lhs - rhs);
        }
    }
    let msg = format!("max (lhs − rhs) = {worst:.2e} over 7000 states");
    if worst <= 1e-12 { Ok(msg) } else { Err(msg) }
}

fn c10_subordination() -> Verdict {
    let mut round_trip = 0.0f64;
    for i in 0..20u64 {
        let m = random_measure(1010, i);
        let tp = 1.2 + 0.4 * i as f64;
        let sys = PowerSystem::new(&m, tp).map_err(err)?;
        let comps = sys.support_components().map_err(err)?;
        let total: f64 = comps.iter().map(|c| c.width()).sum();
        for j in 0..50 {
            // 50 interior points spread over the components by length
            let mut s = (j as f64 + 0.5) / 50.0 * total;
            let mut x = f64::NAN;
            for c in &comps {
                if s <= c.width() {
                    x = c.a + s;
                    break;
                }
                s -= c.width();
            }
            let w = sys.subordination(x).map_err(err)?;
            let (h, _) = sys.h(w).map_err(err)?;
            round_trip = round_trip.max((h - x).norm());
        }
    }
    let mut linear = 0.0f64;
    let mut measures: Vec<AtomicMeasure> = (0..20).map(|i| random_measure(1011, i)).collect();
    measures.push(bernoulli().measure());
    for m in &measures {
        let sys = PowerSystem::new(m, 2.0).map_err(err)?;
        for y in [10.0, 20.0, 50.0] {
            let z = Complex64::new(0.0, y);
            let power = sys.power_voiculescu(z, 1e-12).map_err(err)?;
            let base = m.voiculescu_transform(z, 1e-12).map_err(err)?;
            linear = linear.max((power - 2.0 * base).norm());
        }
    }
    let msg = format!("max |H_T(ω) − x| = {round_trip:.1e} (1000 points), max |φ₂ − 2φ| = {linear:.1e}");
    if round_trip < 1e-9 && linear < 1e-8 { Ok(msg) } else { Err(msg) }
}

fn line(out: &mut impl Write, ok: bool, id: usize, name: &str, detail: &str, took: Duration, budget: Duration) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        out,
        "[{tag}] {id:>2} {name}: {detail} ({:.2} s, budget {} s)",
        took.as_secs_f64(),
        budget.as_secs()
    );
}

fn main() {
    // libtest passes filter arguments; honour `--list` so tooling does not run the suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut kargin_log = Vec::new();
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("Bernoulli (t)-norm closed form", 1, Box::new(|_| c1_bernoulli_norm())),
        ("Bernoulli power structure", 1, Box::new(|_| c2_bernoulli_power())),
        ("violation headline and scan", 30, Box::new(|_| c3_violation())),
        ("mass conservation", 60, Box::new(|_| c4_mass())),
        ("bound sandwich", 60, Box::new(c5_sandwich)),
        ("random-matrix oracle agreement", 120, Box::new(|_| c6_rmt())),
        ("Hayden–Winter Bell output", 60, Box::new(|_| c7_hayden_winter())),
        ("output concentration", 300, Box::new(|_| c8_concentration())),
        ("Hastings gap", 10, Box::new(|_| c9_hastings())),
        ("subordination and Voiculescu linearity", 10, Box::new(|_| c10_subordination())),
    ];
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "\nacceptance criteria");
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let budget = Duration::from_secs(budget);
        let start = Instant::now();
        let verdict = run(&mut kargin_log);
        let took = start.elapsed();
        let (ok, detail) = match verdict {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        line(&mut out, ok, i + 1, name, &detail, took, budget);
    }
    if !kargin_log.is_empty() {
        let _ = writeln!(out, "[REVIEW] upper bound exceeded the Kargin bound in {} cases:", kargin_log.len());
        for l in kargin_log.iter().take(20) {
            let _ = writeln!(out, "         {l}");
        }
    }
    let _ = writeln!(out, "{} of 10 criteria passed", 10 - failed);
    let _ = out.flush();
    if failed > 0 {
        std::process::exit(1);
    }
}
