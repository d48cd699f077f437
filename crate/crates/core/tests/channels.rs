use freecontract::additivity::{gap_g, hastings_gap, product_bound, simplex_bounds};
use freecontract::linalg::{self, CMat};
use freecontract::qchannel::{self, apply_channel, apply_complementary, random_channel, QuantumState};
use freecontract::rng;
use freecontract::tnorm::{default_probes, kkt_membership};
use num_complex::Complex64;
use proptest::prelude::*;

/// Random mixed state: Haar-rotated Dirichlet spectrum.
fn random_state(dim: usize, seed: u64) -> QuantumState {
    let mut r = rng::stream(seed, 5);
    let p = rng::dirichlet_flat(&mut r, dim);
    let u = linalg::phase_fixed_q(&linalg::ginibre(dim, dim, &mut r));
    let m = CMat::from_fn(dim, dim, |i, j| {
        (0..dim).map(|a| u[(i, a)] * p[a] * u[(j, a)].conj()).sum::<Complex64>()
    });
    QuantumState::new(m).unwrap()
}

/// Channel with `t` raised to at least one input dimension.
fn channel(k: usize, n: usize, t: f64, seed: u64) -> qchannel::ChannelInstance {
    random_channel(k, n, t.max(1.0 / (k * n) as f64), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outputs_are_states(k in 1usize..5, n in 1usize..6, t in 0.2f64..1.0, seed in any::<u64>()) {
        let ch = channel(k, n, t, seed);
        let out = apply_channel(&ch, &random_state(ch.d(), seed)).unwrap();
        let e = out.eigenvalues().unwrap();
        prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(e.iter().all(|&x| x >= -1e-10));
    }

    #[test]
    fn complementary_spectrum_matches(k in 1usize..5, n in 1usize..6, t in 0.2f64..1.0, seed in any::<u64>()) {
        let ch = channel(k, n, t, seed);
        let psi = rng::unit_vector(&mut rng::stream(seed, 77), ch.d());
        let x = QuantumState::pure(&psi).unwrap();
        let a = apply_channel(&ch, &x).unwrap().eigenvalues().unwrap();
        let b = apply_complementary(&ch, &x).unwrap().eigenvalues().unwrap();
        let m = k.min(n);
        for i in 0..m {
            prop_assert!((a[i] - b[i]).abs() < 1e-9);
        }
        for &v in a[m..].iter().chain(&b[m..]) {
            prop_assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn bell_lambda_max_at_least_t(k in 1usize..5, n in 1usize..6, t in 0.1f64..1.0, seed in any::<u64>()) {
        let ch = channel(k, n, t, seed);
        let b = qchannel::bell_output(&ch).unwrap();
        prop_assert!(b.eigenvalues().unwrap()[0] >= ch.effective_t() - 1e-10);
    }

    #[test]
    fn hastings_holds(k in 2usize..9, seed in any::<u64>()) {
        let (lhs, rhs) = hastings_gap(&random_state(k, seed)).unwrap();
        prop_assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn gap_is_smooth_in_r(k in 10_000u64..100_000, r in 1.05f64..1.95) {
        let a = gap_g(k, r).unwrap().g;
        let b = gap_g(k, r + 1e-6).unwrap().g;
        prop_assert!((a - b).abs() <= 1e-4);
    }
}

#[test]
fn hmin_never_increases_with_restarts() {
    let ch = random_channel(3, 4, 0.5, 21).unwrap();
    let mut last = f64::INFINITY;
    for restarts in [1, 2, 4, 8] {
        let v = qchannel::hmin_estimate(&ch, restarts, 3).unwrap().value;
        assert!(v <= last + 1e-15, "{restarts}: {v} > {last}");
        last = v;
    }
}

#[test]
fn hmin_is_consistent_with_hastings() {
    let ch = random_channel(2, 30, 0.5, 4).unwrap();
    let est = qchannel::hmin_estimate(&ch, 4, 1).unwrap();
    let k = 2.0f64;
    let purity: f64 = est.spectrum.iter().map(|x| x * x).sum();
    assert!(est.value >= k.ln() - k * (purity - 1.0 / k) - 1e-12);
    for s in qchannel::sample_output_spectra(&ch, 20, 1).unwrap() {
        assert!(est.value <= qchannel::entropy(&s, 1.0).unwrap() + 1e-12);
    }
}

#[test]
fn conjugate_channel_has_same_minimum() {
    let ch = random_channel(2, 3, 0.5, 8).unwrap();
    let est = qchannel::hmin_estimate(&ch, 3, 2).unwrap();
    let x = QuantumState::pure(&est.input).unwrap();
    let a = apply_channel(&ch, &x).unwrap().eigenvalues().unwrap();
    let b = qchannel::apply_conjugate_channel(&ch, &x.conj()).unwrap().eigenvalues().unwrap();
    let (ha, hb) = (qchannel::entropy(&a, 1.0).unwrap(), qchannel::entropy(&b, 1.0).unwrap());
    assert!((ha - hb).abs() < 1e-12);
}

#[test]
fn bell_entropy_below_product_bound() {
    for seed in 0..20 {
        for (k, n, t) in [(2, 6, 0.5), (3, 5, 0.4), (4, 4, 0.3)] {
            let ch = random_channel(k, n, t, seed).unwrap();
            let h = qchannel::state_entropy(&qchannel::bell_output(&ch).unwrap(), 1.0).unwrap();
            let bound = product_bound(k as u64, ch.effective_t()).unwrap();
            assert!(h <= bound + 1e-9, "k={k} seed={seed}: {h} > {bound}");
        }
    }
}

#[test]
fn large_n_spectra_respect_simplex_bounds_and_body() {
    let (k, t) = (2, 0.5);
    let ch = random_channel(k, 300, t, 2).unwrap();
    let spectra = qchannel::sample_output_spectra(&ch, 50, 6).unwrap();
    let (l, u) = simplex_bounds(k as u64, t).unwrap();
    let probes = default_probes(k, 20, 1);
    for s in &spectra {
        assert!(s.iter().all(|&x| x >= l - 0.05 && x <= u + 0.05));
        assert!(kkt_membership(s, t, &probes, 0.05).unwrap().member);
    }
}

#[test]
fn frontier_crosses_once_at_headline_exponent() {
    let r = 1.387;
    let ks: Vec<u64> = (0..=400).map(|i| (1e4f64 * 10f64.powf(i as f64 / 400.0)).round() as u64).collect();
    let signs: Vec<bool> = ks.iter().map(|&k| gap_g(k, r).unwrap().g < 0.0).collect();
    let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1);
    assert!(!signs[0] && signs[signs.len() - 1]);
}
