use maxitive::analysis::{
    check_mldp, is_completely_maxitive, is_weakly_maxitive, minimal_rate, weakly_maxitive_by_covers,
};
use maxitive::asymptotics::choquet_integral;
use maxitive::convex::{biconjugate, convexity_on_grid, fenchel_conjugate_nonneg, linspace, Grid1D};
use maxitive::cramer::{supermultiplicativity_check, SampleModel};
use maxitive::generate::{random_concentration, random_increasing, random_maxitive, random_preorder, random_rate};
use maxitive::integral::{maxitive_integral, maxitive_integral_branches, shilkret_integral};
use maxitive::numeric::{log_sum_exp, log_upper_tails, binomial_log_pmf};
use maxitive::{capacity_from_concentration, Concentration, ExtReal, FinitePreorder, IncreasingFn};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, size: usize, density: f64, maxitive: bool) -> (ChaCha8Rng, Concentration) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = random_preorder(&mut rng, size, density);
    let j = if maxitive {
        random_maxitive(&mut rng, &space)
    } else {
        random_concentration(&mut rng, &space)
    };
    (rng, j)
}

fn nonneg(space: &FinitePreorder, f: &IncreasingFn) -> IncreasingFn {
    let v = f
        .values()
        .iter()
        .map(|x| if x.is_finite() { x.abs() + 0.25 * (*x > 0.0) as u8 as f64 } else { 0.0 })
        .collect::<Vec<_>>();
    IncreasingFn::new(space, space.increasing_envelope(&v).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weak_maxitivity_iff_upper_bound_for_minimal_rate(
        seed in any::<u64>(), size in 1usize..=6, d in 0.0f64..0.7, m in any::<bool>()
    ) {
        let (_, j) = instance(seed, size, d, m);
        let report = check_mldp(&j, &minimal_rate(&j));
        prop_assert!(report.lower_ok);
        prop_assert_eq!(report.upper_ok, is_weakly_maxitive(&j).verdict);
    }

    #[test]
    fn principal_criterion_matches_cover_oracle(
        seed in any::<u64>(), size in 1usize..=5, d in 0.0f64..0.7, m in any::<bool>()
    ) {
        let (_, j) = instance(seed, size, d, m);
        let weak = is_weakly_maxitive(&j);
        prop_assert_eq!(weak.verdict, weakly_maxitive_by_covers(&j).verdict);
        prop_assert_eq!(weak.verdict, is_completely_maxitive(&j).unwrap());
        if let Some(w) = weak.witness {
            prop_assert!(w.lhs > w.rhs);
        }
    }

    #[test]
    fn maxitive_concentrations_are_recovered_from_minimal_rate(
        seed in any::<u64>(), size in 1usize..=6, d in 0.0f64..0.7
    ) {
        let (_, j) = instance(seed, size, d, true);
        let back = Concentration::from_rate(j.space().clone(), &minimal_rate(&j)).unwrap();
        prop_assert_eq!(back.values(), j.values());
    }

    #[test]
    fn increasing_rate_with_both_bounds_is_minimal(
        seed in any::<u64>(), size in 1usize..=6, d in 0.0f64..0.7
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = random_preorder(&mut rng, size, d);
        let raw = random_rate(&mut rng, size);
        let inc = maxitive::RateFunction::new(space.increasing_envelope(&raw.as_f64()).unwrap()).unwrap();
        let j = Concentration::from_rate(space, &inc).unwrap();
        prop_assert!(check_mldp(&j, &inc).both_ok());
        prop_assert_eq!(minimal_rate(&j), inc);
    }

    #[test]
    fn maxitive_integral_is_monotone_and_translation_invariant(
        seed in any::<u64>(), size in 1usize..=6, d in 0.0f64..0.7, m in any::<bool>(), c in -5.0f64..5.0
    ) {
        let (mut rng, j) = instance(seed, size, d, m);
        let space = j.space().clone();
        let f = random_increasing(&mut rng, &space);
        let g = random_increasing(&mut rng, &space);
        let (s, w) = maxitive_integral_branches(&j, &f).unwrap();
        prop_assert_eq!(s, w);
        let phi_f = maxitive_integral(&j, &f).unwrap();
        let shifted = maxitive_integral(&j, &f.shifted(c)).unwrap();
        prop_assert!(phi_f == ExtReal::NEG_INF && shifted == ExtReal::NEG_INF
            || (shifted.get() - phi_f.get() - c).abs() < 1e-12);
        let top: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a.max(*b)).collect();
        let phi_top = maxitive_integral(&j, &IncreasingFn::new(&space, top).unwrap()).unwrap();
        prop_assert!(phi_f <= phi_top);
        prop_assert!(maxitive_integral(&j, &g).unwrap() <= phi_top);
        // phi of a maximum is the maximum of phi exactly when J is maxitive
        if is_weakly_maxitive(&j).verdict {
            prop_assert_eq!(phi_top, phi_f.max(maxitive_integral(&j, &g).unwrap()));
        }
        prop_assert_eq!(maxitive_integral(&j, &IncreasingFn::constant(&space, c).unwrap()).unwrap(), ExtReal::of(c));
    }

    #[test]
    fn shilkret_and_choquet_integrals(
        seed in any::<u64>(), size in 1usize..=6, m in any::<bool>(), c in 0.1f64..4.0
    ) {
        let (mut rng, j) = instance(seed, size, 0.0, m);
        let space = j.space().clone();
        let pi = capacity_from_concentration(&j);
        let f = nonneg(&space, &random_increasing(&mut rng, &space));
        let g = nonneg(&space, &random_increasing(&mut rng, &space));
        let scaled = IncreasingFn::new(&space, f.values().iter().map(|x| c * x).collect()).unwrap();
        let sh = shilkret_integral(&pi, &f).unwrap();
        prop_assert!((shilkret_integral(&pi, &scaled).unwrap() - c * sh).abs() <= 1e-12 * (1.0 + c * sh));
        let ch = choquet_integral(&pi, f.values()).unwrap();
        prop_assert!((choquet_integral(&pi, scaled.values()).unwrap() - c * ch).abs() <= 1e-12 * (1.0 + c * ch));
        prop_assert!(sh <= ch + 1e-12);
        let top: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a.max(*b)).collect();
        prop_assert!(ch <= choquet_integral(&pi, &top).unwrap() + 1e-12);
        let vmax = f.values().iter().cloned().fold(0.0, f64::max);
        prop_assert!(ch <= vmax + 1e-12);
    }

    #[test]
    fn conjugate_properties(
        a in 0.1f64..3.0, b in 0.0f64..2.0, shift in 0.0f64..1.0, points in 20usize..80
    ) {
        let knots = linspace(-2.0, 2.0, points).unwrap();
        let i = Grid1D::new(knots.clone(), knots.iter().map(|x| ExtReal::of(a * x * x + b * x.abs())).collect()).unwrap();
        let k = Grid1D::new(knots.clone(), i.values().iter().map(|v| *v + shift).collect()).unwrap();
        let mus = linspace(0.0, 5.0, 41).unwrap();
        let ci = fenchel_conjugate_nonneg(&i, &mus).unwrap();
        let ck = fenchel_conjugate_nonneg(&k, &mus).unwrap();
        for (p, q) in ci.values.iter().zip(&ck.values) {
            prop_assert!(q <= p);
        }
        for (mu, s) in mus.iter().zip(&ci.values) {
            for (x, v) in knots.iter().zip(i.values()) {
                prop_assert!(mu * x <= v.get() + s.get() + 1e-12);
            }
        }
        prop_assert!(ci.convexity().convex);
        let bi = biconjugate(&i, &mus).unwrap();
        for (p, q) in bi.values().iter().zip(i.values()) {
            prop_assert!(p.get() <= q.get() + 1e-12);
        }
    }

    #[test]
    fn log_mgf_is_convex_and_rate_is_convex_nondecreasing(p in 0.05f64..0.95, lo in -1.0f64..0.0) {
        let models = [
            SampleModel::bernoulli(p).unwrap(),
            SampleModel::finite_support(vec![lo, 0.5, 2.0], vec![p / 2.0, 0.5, 0.5 - p / 2.0]).unwrap(),
        ];
        for m in &models {
            let mus = linspace(0.0, 4.0, 41).unwrap();
            let lam: Vec<ExtReal> = mus.iter().map(|&u| m.lambda(u)).collect();
            prop_assert!(convexity_on_grid(&mus, &lam).convex);
            prop_assert_eq!(m.lambda(0.0), ExtReal::ZERO);
            let xs = linspace(m.support_min(), m.support_max(), 31).unwrap();
            let rate: Vec<ExtReal> = xs.iter().map(|&x| m.monotone_cramer_rate(x)).collect();
            prop_assert!(rate.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(convexity_on_grid(&xs, &rate).convex || rate.iter().any(|r| r.is_pos_inf()));
            for &x in &xs {
                if x <= m.mean() {
                    prop_assert_eq!(m.monotone_cramer_rate(x), ExtReal::ZERO);
                }
                let g = m.monotone_cramer_rate_generic(x);
                let r = m.monotone_cramer_rate(x);
                prop_assert!(r.gap(g).abs() < 1e-6 || (r.is_pos_inf() && g.is_pos_inf()));
            }
        }
    }

    #[test]
    fn tails_decrease_in_threshold_and_double_supermultiplicatively(
        p in 0.05f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0
    ) {
        let m = SampleModel::bernoulli(p).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for n in [1u64, 7, 64, 300] {
            prop_assert!(m.exact_tail_log(hi, n).unwrap() <= m.exact_tail_log(lo, n).unwrap());
            prop_assert!(m.exact_tail_log_open(lo, n).unwrap() <= m.exact_tail_log(lo, n).unwrap());
        }
        let r = supermultiplicativity_check(&m, a, &[1, 2, 4, 8, 16, 32, 64, 128]).unwrap();
        prop_assert!(r.holds);
    }

    #[test]
    fn log_domain_helpers_match_direct_sums(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&xs) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        let tails = log_upper_tails(&xs);
        for k in 0..xs.len() {
            let d: f64 = xs[k..].iter().map(|x| x.exp()).sum::<f64>().ln();
            prop_assert!((tails[k] - d).abs() < 1e-12 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn binomial_law_sums_to_one(n in 1u64..400, p in 0.01f64..0.99) {
        let pmf = binomial_log_pmf(n, p);
        prop_assert_eq!(pmf.len() as u64, n + 1);
        prop_assert!(log_sum_exp(&pmf).abs() < 1e-12);
    }
}
