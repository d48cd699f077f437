use freecontract::freepower::{power_structure, PowerSystem};
use freecontract::tnorm::{self, lower_bound, tnorm_exact, upper_bound};
use freecontract::{make_measure, AtomicMeasure, HermitianSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = AtomicMeasure> {
    measure_on(-5.0, 5.0)
}

fn measure_on(lo: f64, hi: f64) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((lo..hi, 0.05f64..1.0), 2..8).prop_filter_map("degenerate", |pairs| {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let m = make_measure(pairs.iter().map(|&(x, w)| (x, w / total))).ok()?;
        // keep atoms apart so the Nevanlinna zeros are well separated
        let xs: Vec<f64> = m.atoms().iter().map(|a| a.x).collect();
        (xs.len() >= 2 && xs.windows(2).all(|w| w[1] - w[0] > 1e-3)).then_some(m)
    })
}

fn spec_strategy(lo: f64) -> impl Strategy<Value = HermitianSpec> {
    prop::collection::vec((lo..4.0f64, 1usize..4), 1..6).prop_filter_map("bad spec", |parts| {
        let values: Vec<f64> = parts.iter().flat_map(|&(x, d)| std::iter::repeat_n(x, d)).collect();
        HermitianSpec::from_eigenvalues(&values).ok()
    })
}

fn upper_half() -> impl Strategy<Value = Complex64> {
    (-6.0f64..6.0, 1e-3f64..5.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cauchy_maps_upper_to_lower(m in measure_strategy(), z in upper_half()) {
        prop_assert!(m.cauchy(z).unwrap().im < 0.0);
    }

    #[test]
    fn nevanlinna_form_reproduces_f(m in measure_strategy(), z in upper_half()) {
        let (mean, var) = m.moments().unwrap();
        let rho = m.nevanlinna_rho().unwrap();
        prop_assert!((rho.total_mass() - var).abs() < 1e-9 * var.max(1.0));
        let f = 1.0 / m.cauchy(z).unwrap();
        let s: Complex64 = rho.atoms().iter().map(|a| a.w / (a.x - z)).sum();
        let via = z - mean + s;
        prop_assert!((f - via).norm() < 1e-8 * f.norm().max(1.0), "{f} vs {via}");
    }

    #[test]
    fn power_scales_with_measure(m in measure_strategy(), c in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0], tp in 1.1f64..6.0) {
        let base = power_structure(&m, tp).unwrap();
        let scaled = power_structure(&m.scaled(c).unwrap(), tp).unwrap();
        prop_assert!((scaled.support_radius() - c.abs() * base.support_radius()).abs() < 1e-8 * base.support_radius().max(1.0));
        prop_assert_eq!(base.support_components.len(), scaled.support_components.len());
    }

    #[test]
    fn tnorm_is_homogeneous(s in spec_strategy(-4.0), c in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0], t in 0.05f64..1.0) {
        let a = tnorm_exact(&s, t).unwrap();
        let b = tnorm_exact(&s.scaled(c).unwrap(), t).unwrap();
        prop_assert!((b - c.abs() * a).abs() < 1e-8 * a.max(1.0));
    }

    #[test]
    fn tnorm_at_one_is_operator_norm(s in spec_strategy(-4.0)) {
        prop_assert!((tnorm_exact(&s, 1.0).unwrap() - s.norm()).abs() < 1e-12);
    }

    #[test]
    fn tnorm_is_lipschitz(
        pairs in prop::collection::vec((-3.0f64..3.0, -0.5f64..0.5), 2..7),
        t in 0.05f64..1.0,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        let sup = pairs.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
        let na = tnorm_exact(&HermitianSpec::from_eigenvalues(&a).unwrap(), t).unwrap();
        let nb = tnorm_exact(&HermitianSpec::from_eigenvalues(&b).unwrap(), t).unwrap();
        prop_assert!((na - nb).abs() <= sup + 1e-8, "{na} {nb} {sup}");
    }

    #[test]
    fn tnorm_is_monotone_in_t(s in spec_strategy(-4.0), t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(tnorm_exact(&s, lo).unwrap() <= tnorm_exact(&s, hi).unwrap() + 1e-9);
    }

    #[test]
    fn subordination_inverts_h(m in measure_strategy(), tp in 1.1f64..8.0, u in 0.02f64..0.98) {
        let sys = PowerSystem::new(&m, tp).unwrap();
        let comps = sys.support_components().unwrap();
        let c = comps[(u * comps.len() as f64) as usize % comps.len()];
        let x = c.a + u * c.width();
        let w = sys.subordination(x).unwrap();
        prop_assert!(w.im >= 0.0);
        let (h, _) = sys.h(w).unwrap();
        prop_assert!((h - x).norm() < 1e-9 * x.abs().max(1.0), "H(ω({x})) = {h}");
        let x2 = x + 1e-3 * c.width();
        if c.contains(x2) {
            prop_assert!((sys.subordination(x2).unwrap() - w).norm() > 0.0);
        }
    }

    #[test]
    fn rightmost_critical_point(m in measure_on(0.0, 5.0), tp in 1.1f64..8.0) {
        // holds for measures on [0, ∞), where ρ lives in [0, x₄)
        let r = power_structure(&m, tp).unwrap();
        let (_, var) = m.moments().unwrap();
        let x4 = r.x4.unwrap();
        prop_assert!(x4 >= var.sqrt() * (tp - 1.0).sqrt() - 1e-9, "x4 = {x4}");
        prop_assert!(r.x3.unwrap() <= r.support_hull().1 + 1e-12);
    }

    #[test]
    fn bounds_sandwich_exact(s in spec_strategy(0.0), t in 0.05f64..1.0) {
        let exact = tnorm_exact(&s, t).unwrap();
        let up = upper_bound(&s, t).unwrap();
        prop_assert!(exact <= up.bound + 1e-9, "exact {exact} > upper {}", up.bound);
        let low = lower_bound(&s, t, s.norm()).unwrap();
        prop_assert!(low <= exact + 1e-9, "lower {low} > exact {exact}");
    }
}

#[test]
fn uniform_point_is_in_every_body() {
    for k in 2..6 {
        let u = vec![1.0 / k as f64; k];
        let probes = tnorm::default_probes(k, 40, 3);
        for t in [0.1, 0.4, 0.9] {
            assert!(tnorm::kkt_membership(&u, t, &probes, 1e-9).unwrap().member);
        }
    }
}
