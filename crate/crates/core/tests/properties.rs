use proptest::prelude::*;
use screenlab_core::screening::{optimal_mechanism, pb_best_on, separate_sales_best, LpOptions};
use screenlab_core::signals::garble;
use screenlab_core::*;

fn atoms_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.05f64..1.0), 2..8).prop_map(|v| {
        let total: f64 = v.iter().map(|p| p.1).sum();
        v.into_iter().map(|(x, m)| (x, m / total)).collect()
    })
}

/// Merges consecutive atoms (in location order) into their conditional
/// means, which is a mean-preserving contraction.
fn contract(atoms: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut s = atoms.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s.chunks(2)
        .map(|c| {
            let m: f64 = c.iter().map(|p| p.1).sum();
            (c.iter().map(|p| p.0 * p.1).sum::<f64>() / m, m)
        })
        .collect()
}

fn on(atoms: &[(f64, f64)]) -> Dist1D {
    Dist1D::discrete(atoms).unwrap().with_support(0.0, 1.0).unwrap()
}

fn model2() -> BundleValueModel {
    BundleValueModel::new(2, 0.0, 1.0).unwrap()
}

fn small_prior() -> impl Strategy<Value = DiscretePrior> {
    (2usize..=3, prop::collection::vec((prop::collection::vec(0u8..=4, 3), 1u32..5), 1..9)).prop_map(|(n, raw)| {
        let total: u32 = raw.iter().map(|r| r.1).sum();
        let types = raw.iter().map(|(t, _)| t[..n].iter().map(|&v| v as f64 / 4.0).collect()).collect();
        let probs = raw.iter().map(|r| r.1 as f64 / total as f64).collect();
        DiscretePrior { n, theta_lo: 0.0, theta_hi: 1.0, types, probs }
    })
}

fn two_uniform() -> PriorSpec {
    PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrated_cdf_is_convex_and_nondecreasing(atoms in atoms_strategy(), u in 0.0f64..0.5) {
        for d in [on(&atoms), Dist1D::uniform(u, u + 0.5).unwrap(), TruncatedPareto::new(u + 0.1, u + 0.9).unwrap().to_dist(0.0, 2.0).unwrap()] {
            prop_assert_eq!(d.integrated_cdf(d.lo()).unwrap(), 0.0);
            let xs: Vec<f64> = (0..=200).map(|i| d.lo() + (d.hi() - d.lo()) * i as f64 / 200.0).collect();
            let v: Vec<f64> = xs.iter().map(|&x| d.integrated_cdf(x).unwrap()).collect();
            for w in v.windows(3) {
                prop_assert!(w[1] >= w[0] - 1e-15);
                prop_assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
            }
        }
    }

    #[test]
    fn mps_is_reflexive_and_transitive(atoms in atoms_strategy()) {
        let f = on(&atoms);
        let g_atoms = contract(&atoms);
        let g = on(&g_atoms);
        let k = on(&contract(&g_atoms));
        prop_assert!(is_mps(&f, &f, 1e-12).unwrap());
        prop_assert!(is_mps(&f, &g, 1e-12).unwrap());
        prop_assert!(is_mps(&g, &k, 1e-12).unwrap());
        prop_assert!(is_mps(&f, &k, 1e-12).unwrap());
    }

    #[test]
    fn iid_convolution_splits(a in 1usize..3, b in 1usize..3, lo in 0.0f64..1.0, w in 0.5f64..2.0) {
        let m = Dist1D::uniform(lo, lo + w).unwrap();
        let whole = m.convolve_iid(a + b);
        let parts = m.convolve_iid(a).convolve(&m.convolve_iid(b));
        prop_assert!((whole.mean() - parts.mean()).abs() < 1e-6 * whole.scale());
        for i in 0..=100 {
            let x = whole.lo() + (whole.hi() - whole.lo()) * i as f64 / 100.0;
            prop_assert!((whole.cdf(x) - parts.cdf(x)).abs() < 1e-6, "cdf at {}", x);
            let gap = whole.integrated_cdf(x).unwrap() - parts.integrated_cdf(x).unwrap();
            prop_assert!(gap.abs() < 1e-6 * whole.scale(), "integral at {}", x);
        }
    }

    #[test]
    fn pareto_profit_is_flat(alpha in 0.01f64..5.0, ratio in 1.0f64..20.0, t in prop::collection::vec(0.0f64..=1.0, 20)) {
        let h = TruncatedPareto::new(alpha, alpha * ratio).unwrap();
        let d = h.to_dist(0.0, alpha * ratio).unwrap();
        for s in t {
            let p = alpha + s * (h.beta() - alpha);
            prop_assert!((pb_profit(&d, p) - alpha).abs() <= 1e-9 * alpha.max(1.0));
        }
    }

    #[test]
    fn beta_decreases_in_alpha(mu in 0.5f64..3.0, a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let (a1, a2) = (a.min(b) * mu, a.max(b) * mu);
        let b1 = beta_of_alpha(a1, mu, f64::MAX).unwrap();
        let b2 = beta_of_alpha(a2, mu, f64::MAX).unwrap();
        prop_assert!(b1 >= b2);
        prop_assert!((tpd_mean(a1, b1).unwrap() - mu).abs() < 1e-12 * mu);
    }

    #[test]
    fn exchangeable_permutation_is_bit_identical(raw in prop::collection::vec((0u8..=10, 0u8..=10, 1u32..6), 1..6)) {
        let mut pts = Vec::new();
        let mut w = Vec::new();
        for &(x, y, m) in &raw {
            pts.push(vec![x as f64 / 10.0, y as f64 / 10.0]);
            pts.push(vec![y as f64 / 10.0, x as f64 / 10.0]);
            w.push(m as f64);
            w.push(m as f64);
        }
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
        let a = PriorSpec::discrete(DiscreteJoint::new(pts.clone(), probs.clone()).unwrap(), 0.0, 1.0).unwrap();
        let swapped: Vec<Vec<f64>> = pts.iter().rev().map(|p| vec![p[1], p[0]]).collect();
        let rprobs: Vec<f64> = probs.iter().rev().copied().collect();
        let b = PriorSpec::discrete(DiscreteJoint::new(swapped, rprobs).unwrap(), 0.0, 1.0).unwrap();
        prop_assert_eq!(a.grand_bundle_dist(), b.grand_bundle_dist());
    }

    #[test]
    fn free_disposal_holds_for_validated_models(
        lo in 0.0f64..0.9, width in 0.1f64..1.0, fr in prop::collection::vec(0.0f64..=1.0, 7), th in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let hi = lo + width;
        let mut m = BundleValueModel::new(3, lo, hi).unwrap();
        for b in 1..7u32 {
            let bound = free_disposal_bound(3, bundle_size(b), lo, hi);
            m = m.with_kappa(b, fr[b as usize] * bound).unwrap();
        }
        prop_assert!(validate_free_disposal(&m));
        let t: Vec<f64> = th.iter().map(|v| lo + v * width).collect();
        let grand = m.bundle_value(&t, 7).unwrap();
        for b in 1..7u32 {
            prop_assert!(grand >= m.bundle_value(&t, b).unwrap() - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alpha_star_is_the_feasibility_boundary(lo in 0.0f64..1.0, w in 0.5f64..2.0, n in 1usize..=2) {
        let f = Dist1D::uniform(lo, lo + w).unwrap().convolve_iid(n);
        let a = alpha_star(&f, 1e-10).unwrap();
        let mu = f.mean();
        let h = a.pareto.to_dist(f.lo(), f.hi()).unwrap();
        prop_assert!(is_mps(&f, &h, 1e-9 * f.scale()).unwrap());
        let eps = 1e-4 * f.scale();
        let below = TruncatedPareto::with_mean(a.alpha - eps, mu, f.hi());
        if let Ok(p) = below {
            let hb = p.to_dist(f.lo(), f.hi()).unwrap();
            prop_assert!(!is_mps(&f, &hb, 1e-9 * f.scale()).unwrap());
        }
        prop_assert!(a.residual_gap.abs() < 1e-7 * f.scale());
        prop_assert!(a.touch_point > a.alpha && a.touch_point < a.pareto.beta());
    }

    #[test]
    fn correlated_signal_round_trip(alpha_frac in 0.5f64..0.95, n in 1usize..=3) {
        let f = Dist1D::uniform(0.0, 1.0).unwrap().convolve_iid(n);
        let a = alpha_star(&f, 1e-10).unwrap();
        let alpha = a.alpha + alpha_frac * (f.mean() - a.alpha);
        let h = TruncatedPareto::with_mean(alpha, f.mean(), f.hi()).unwrap().to_dist(f.lo(), f.hi()).unwrap();
        let sig = make_perfectly_correlated(&h, n, &f).unwrap();
        prop_assert_eq!(sig.induced_grand_bundle(), h.clone());
        prop_assert!((sig.induced_grand_bundle().mean() - f.mean()).abs() < 1e-8);
        let s = sig.estimate(1.2);
        prop_assert!(s.iter().all(|&v| (v - 1.2 / n as f64).abs() < 1e-15));
    }

    #[test]
    fn garblings_are_unbiased_contractions(seed in any::<u64>(), k in 1usize..40) {
        let prior = two_uniform();
        let sig = sample_garbling(&prior, seed, k).unwrap();
        prop_assert!(sig.check_unbiased(1e-9));
        let g = sig.induced_grand_bundle().unwrap();
        let f = sig.prior_grand_bundle().unwrap();
        prop_assert!((g.mean() - f.mean()).abs() < 1e-8);
        let (lo, hi) = (f.lo().min(g.lo()), f.hi().max(g.hi()));
        let (f, g) = (f.with_support(lo, hi).unwrap(), g.with_support(lo, hi).unwrap());
        prop_assert!(is_mps(&f, &g, 1e-9).unwrap());
    }

    #[test]
    fn lp_dominates_simple_mechanisms(est in small_prior()) {
        let model = BundleValueModel::new(est.n, 0.0, 1.0).unwrap();
        let s = optimal_mechanism(&est, &model, &LpOptions::default()).unwrap();
        let (_, pb) = pb_best_on(&est).unwrap();
        let (_, sep) = separate_sales_best(&est, &model).unwrap();
        prop_assert!(s.profit >= pb - 1e-9);
        prop_assert!(pb >= 0.0);
        prop_assert!(s.profit >= sep - 1e-9);
        prop_assert!(s.duality_gap.abs() <= 1e-7);
        prop_assert!(s.dual_infeasibility <= 1e-9);
        prop_assert!(s.max_violation <= 1e-9);
    }

    #[test]
    fn lp_scales_with_values(est in small_prior()) {
        let model = BundleValueModel::new(est.n, 0.0, 1.0).unwrap();
        let s = optimal_mechanism(&est, &model, &LpOptions::default()).unwrap();
        let doubled = DiscretePrior {
            types: est.types.iter().map(|t| t.iter().map(|v| 2.0 * v).collect()).collect(),
            theta_hi: 2.0,
            ..est.clone()
        };
        let s2 = optimal_mechanism(&doubled, &model.scaled(2.0), &LpOptions::default()).unwrap();
        prop_assert!((s2.profit - 2.0 * s.profit).abs() < 1e-9);
    }

    #[test]
    fn lp_on_correlated_estimates_is_pure_bundling(atoms in atoms_strategy()) {
        let model = model2();
        let types = atoms.iter().map(|&(x, _)| vec![x, x]).collect();
        let est = DiscretePrior { n: 2, theta_lo: 0.0, theta_hi: 1.0, types, probs: atoms.iter().map(|p| p.1).collect() };
        let s = optimal_mechanism(&est, &model, &LpOptions::default()).unwrap();
        let (_, pb) = pb_best_on(&est).unwrap();
        prop_assert!((s.profit - pb).abs() < 1e-6, "{} vs {}", s.profit, pb);
    }

    #[test]
    fn pure_bundling_tie_break_only_matters_at_atoms(atoms in atoms_strategy(), pick in 0usize..8, off in -0.2f64..0.2) {
        let model = model2();
        let g = Dist1D::discrete(&atoms.iter().map(|&(x, m)| (2.0 * x, m)).collect::<Vec<_>>()).unwrap().with_support(0.0, 2.0).unwrap();
        let sig = PerfectlyCorrelatedSignal::new_unchecked(g.clone(), 2);
        let at = 2.0 * atoms[pick % atoms.len()].0;
        for price in [at, (at + off).clamp(0.0, 2.0)] {
            let mech = Mechanism::PureBundling { price };
            let fav = evaluate(&mech, &sig, &model, TieBreak::SellerFavoring).unwrap();
            let adv = evaluate(&mech, &sig, &model, TieBreak::SellerAdverse).unwrap();
            let differs = (fav.profit - adv.profit).abs() > 1e-12;
            prop_assert_eq!(differs, g.atom_mass(price) > 0.0 && price > 0.0);
        }
    }

    #[test]
    fn full_trade_splits_the_mean(atoms in atoms_strategy(), frac in 0.0f64..=1.0) {
        let model = model2();
        let g = Dist1D::discrete(&atoms.iter().map(|&(x, m)| (2.0 * x, m)).collect::<Vec<_>>()).unwrap().with_support(0.0, 2.0).unwrap();
        let sig = PerfectlyCorrelatedSignal::new_unchecked(g.clone(), 2);
        let price = frac * g.atoms().iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let r = evaluate(&Mechanism::PureBundling { price }, &sig, &model, TieBreak::SellerFavoring).unwrap();
        prop_assert!((r.trade_probability - 1.0).abs() < 1e-12);
        prop_assert!((r.profit + r.consumer_surplus - g.mean()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_pure_bundling_guarantee_over_garblings(seed in any::<u64>(), k in 1usize..=60) {
        let prior = two_uniform();
        let model = model2();
        let f = prior.grand_bundle_dist();
        let a = alpha_star(f, 1e-10).unwrap();
        let mech = build_robust_mechanism(f, a.alpha, &a.pareto).unwrap();
        let Mechanism::RandomPureBundling(r) = &mech else { unreachable!() };
        let dp = prior.discretize(21).unwrap();
        let sig = garble(&dp, seed, k).unwrap();
        for tb in [TieBreak::SellerFavoring, TieBreak::SellerAdverse] {
            let rep = evaluate(&mech, &sig, &model, tb).unwrap();
            prop_assert!(rep.profit >= a.alpha - 1e-6, "{} < {}", rep.profit, a.alpha);
        }
        let g = sig.induced_grand_bundle().unwrap();
        prop_assert!(rpb_guarantee(r, &g) >= rpb_guarantee(r, f) - 1e-9);
        prop_assert!(rpb_profit(r, &g) >= rpb_guarantee(r, &g) - 1e-12);
    }
}
