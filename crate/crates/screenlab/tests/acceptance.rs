//! Acceptance suite: one line per criterion with its verdict, runtime and
//! the measured quantities. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screenlab::config::{Coarseness, Command, ExperimentConfig};
use screenlab::formats::{DistLiteral, ModelFile, PriorBlock};
use screenlab::pipelines::{
    run_buyer_optimal, run_comparative_statics, run_verify_guarantee, run_verify_minmax, GUARANTEE_COARSENESS,
};
use screenlab_core::screening::{optimal_mechanism, pb_best_on, LpOptions};
use screenlab_core::*;

type Criterion = (&'static str, Duration, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn two_uniform_model() -> ModelFile {
    ModelFile {
        n: 2,
        theta_lo: 0.0,
        theta_hi: 1.0,
        kappa: Default::default(),
        prior: PriorBlock::Iid { marginal: DistLiteral::Uniform { lo: 0.0, hi: 1.0 }, cells: None },
    }
}

fn config(command: Command) -> ExperimentConfig {
    ExperimentConfig::new(command, two_uniform_model())
}

fn tri_int(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 1.0 {
        x * x * x / 6.0
    } else if x <= 2.0 {
        x - 1.0 + (2.0 - x).powi(3) / 6.0
    } else {
        x - 1.0
    }
}

fn pareto_int(a: f64, b: f64, x: f64) -> f64 {
    if x <= a {
        0.0
    } else if x < b {
        x - a - a * (x / a).ln()
    } else {
        (b - a - a * (b / a).ln()) + (x - b)
    }
}

fn posted_prices() -> Verdict {
    let f = Dist1D::uniform(0.0, 1.0).unwrap().convolve_iid(2);
    let (p2, _) = pb_best_price(&f);
    let (p1, _) = pb_best_price(&Dist1D::uniform(0.0, 1.0).unwrap());
    let target = (2.0f64 / 3.0).sqrt();
    verdict(
        (p2 - target).abs() <= 1e-4 && (p1 - 0.5).abs() <= 1e-6,
        format!("bundle price {p2:.6} (sqrt(2/3) = {target:.6}), single-good price {p1:.8}"),
    )
}

fn pareto_flatness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let alpha = rng.random_range(0.01..5.0);
        let beta = alpha * rng.random_range(1.0..20.0);
        let h = TruncatedPareto::new(alpha, beta).unwrap().to_dist(0.0, beta).unwrap();
        for _ in 0..20 {
            let p = rng.random_range(alpha..=beta);
            worst = worst.max((pb_profit(&h, p) - alpha).abs());
        }
    }
    verdict(worst <= 1e-9, format!("max |pb_profit - alpha| over 1000 prices = {worst:.2e}"))
}

fn buyer_optimal_structure() -> Verdict {
    let r = run_buyer_optimal(&config(Command::BuyerOptimal)).unwrap();
    let feasible = |alpha: f64| {
        let beta = alpha * (1.0 / alpha - 1.0).exp();
        beta <= 2.0
            && (0..=4000).all(|i| {
                let x = alpha + (beta - alpha) * i as f64 / 4000.0;
                tri_int(x) - pareto_int(alpha, beta, x) >= -1e-13
            })
    };
    let scan = (1..=10_000).map(|i| i as f64 / 10_000.0).find(|&a| feasible(a)).unwrap();
    let ok = (r.trade_probability - 1.0).abs() <= 1e-12
        && (r.profit - r.alpha_star).abs() <= 1e-12
        && (r.consumer_surplus - (r.mu_bar - r.alpha_star)).abs() <= 1e-12
        && (r.alpha_star - scan).abs() <= 1e-4;
    verdict(
        ok,
        format!(
            "trade {} profit {:.9} alpha* {:.9} scan {scan:.4} CS {:.9}",
            r.trade_probability, r.profit, r.alpha_star, r.consumer_surplus
        ),
    )
}

fn robust_identities() -> Verdict {
    let prior = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
    let f = prior.grand_bundle_dist();
    let a = alpha_star(f, 1e-9).unwrap();
    let s = solve_s_star(f, &a.pareto).unwrap();
    let Mechanism::RandomPureBundling(r) = build_robust_mechanism(f, a.alpha, &a.pareto).unwrap() else {
        unreachable!()
    };
    let h = a.pareto.to_dist(f.lo(), f.hi()).unwrap();
    let under_h = rpb_profit(&r, &h);
    let guarantee = rpb_guarantee(&r, f);
    let revenue_f = rpb_profit(&r, f);
    let ok = s.cdf_gap <= 1e-6
        && s.partial_mean_gap <= 1e-6
        && (under_h - a.alpha).abs() <= 1e-5
        && (guarantee - a.alpha).abs() <= 1e-5
        && revenue_f >= a.alpha - 1e-5;
    verdict(
        ok,
        format!(
            "cdf gap {:.1e}, partial-mean gap {:.1e}, revenue under H {under_h:.9}, guarantee expression under F {guarantee:.9}, pi* {:.9}; revenue under F {revenue_f:.6} >= pi* (buyers below pi* never buy)",
            s.cdf_gap, s.partial_mean_gap, a.alpha
        ),
    )
}

fn guarantee_sampling() -> Verdict {
    let mut cfg = config(Command::VerifyGuarantee);
    cfg.seeds = Some((0..40).collect());
    cfg.coarseness = Some(GUARANTEE_COARSENESS.to_vec());
    let r = run_verify_guarantee(&cfg).unwrap();
    let ok = r.samples == 200 && r.min_profit >= r.pi_star - 1e-6;
    verdict(ok, format!("{} garblings, min revenue {:.9} vs pi* {:.9}", r.samples, r.min_profit, r.pi_star))
}

fn minmax() -> Verdict {
    let mut cfg = config(Command::VerifyMinmax);
    cfg.grid = Some(21);
    cfg.coarseness = Some(vec![Coarseness::Cells(2), Coarseness::Cells(5), Coarseness::Cells(10)]);
    let r = run_verify_minmax(&cfg).unwrap();
    let ok = r.min_profit >= r.pi_star - 5e-3
        && (r.buyer_optimal_profit - r.pi_star).abs() <= 5e-3
        && (r.min_profit - r.buyer_optimal_profit).abs() <= 5e-3
        && (r.buyer_optimal_profit - r.buyer_optimal_pb_profit).abs() <= 1e-3;
    verdict(
        ok,
        format!(
            "min over {} signals {:.7} ({}), pi* {:.7}, LP on buyer-optimal {:.7} vs PB {:.7}",
            r.candidates.len(),
            r.min_profit,
            r.argmin,
            r.pi_star,
            r.buyer_optimal_profit,
            r.buyer_optimal_pb_profit
        ),
    )
}

fn comparative_statics() -> Verdict {
    let r = run_comparative_statics(&config(Command::ComparativeStatics), 4).unwrap();
    let cs: Vec<f64> = r.rows.iter().map(|x| x.average_consumer_surplus).collect();
    let price: Vec<f64> = r.rows.iter().map(|x| x.per_good_price).collect();
    let ok = cs.windows(2).all(|w| w[0] >= w[1] - 1e-8)
        && cs[3] < cs[0]
        && price.windows(2).all(|w| w[1] >= w[0] - 1e-8);
    let row = |v: &[f64]| v.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(" ");
    verdict(ok, format!("CS_1..4 = {}, per-good price = {}", row(&cs), row(&price)))
}

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.05f64..1.0), 2..8).prop_map(|v| {
        let total: f64 = v.iter().map(|p| p.1).sum();
        v.into_iter().map(|(x, m)| (x, m / total)).collect()
    })
}

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

fn on_unit(atoms: &[(f64, f64)]) -> Dist1D {
    Dist1D::discrete(atoms).unwrap().with_support(0.0, 1.0).unwrap()
}

fn small_prior() -> impl Strategy<Value = DiscretePrior> {
    (2usize..=3, prop::collection::vec((prop::collection::vec(0u8..=4, 3), 1u32..5), 1..9)).prop_map(|(n, raw)| {
        let total: u32 = raw.iter().map(|r| r.1).sum();
        let types = raw.iter().map(|(t, _)| t[..n].iter().map(|&v| v as f64 / 4.0).collect()).collect();
        let probs = raw.iter().map(|r| r.1 as f64 / total as f64).collect();
        DiscretePrior { n, theta_lo: 0.0, theta_hi: 1.0, types, probs }
    })
}

fn runner() -> TestRunner {
    let cfg = Config { cases: 64, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn property_suites() -> Verdict {
    let mut failures = Vec::new();
    let mut record = |name: &str, r: std::result::Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };

    record(
        "mps axioms",
        runner()
            .run(&atoms(), |a| {
                let (f, g) = (on_unit(&a), on_unit(&contract(&a)));
                let k = on_unit(&contract(&contract(&a)));
                prop_assert!(is_mps(&f, &f, 1e-12).unwrap());
                prop_assert!(is_mps(&f, &g, 1e-12).unwrap() && is_mps(&g, &k, 1e-12).unwrap());
                prop_assert!(is_mps(&f, &k, 1e-12).unwrap());
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let prior = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
    record(
        "signal unbiasedness",
        runner()
            .run(&(any::<u64>(), 1usize..40), |(seed, k)| {
                let sig = sample_garbling(&prior, seed, k).unwrap();
                prop_assert!(sig.check_unbiased(1e-9));
                let (g, f) = (sig.induced_grand_bundle().unwrap(), sig.prior_grand_bundle().unwrap());
                prop_assert!((g.mean() - f.mean()).abs() < 1e-8);
                let (lo, hi) = (f.lo().min(g.lo()), f.hi().max(g.hi()));
                prop_assert!(is_mps(&f.with_support(lo, hi).unwrap(), &g.with_support(lo, hi).unwrap(), 1e-9).unwrap());
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let f2 = prior.grand_bundle_dist().clone();
    record(
        "correlated round trip",
        runner()
            .run(&(0.5f64..0.95), |frac| {
                let a = alpha_star(&f2, 1e-10).unwrap();
                let alpha = a.alpha + frac * (f2.mean() - a.alpha);
                let h = TruncatedPareto::with_mean(alpha, f2.mean(), f2.hi()).unwrap().to_dist(f2.lo(), f2.hi()).unwrap();
                let sig = make_perfectly_correlated(&h, 2, &f2).unwrap();
                prop_assert!((sig.induced_grand_bundle().mean() - f2.mean()).abs() < 1e-8);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let worst_gap = std::cell::Cell::new(0.0f64);
    record(
        "lp duality and ordering",
        runner()
            .run(&small_prior(), |est| {
                let model = BundleValueModel::new(est.n, 0.0, 1.0).unwrap();
                let s = optimal_mechanism(&est, &model, &LpOptions::default()).unwrap();
                let (_, pb) = pb_best_on(&est).unwrap();
                worst_gap.set(worst_gap.get().max(s.duality_gap.abs()));
                prop_assert!(s.duality_gap.abs() <= 1e-7);
                prop_assert!(s.profit >= pb - 1e-9 && pb >= 0.0);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let ok = failures.is_empty();
    let detail = if ok {
        format!("4 suites x 64 cases green, worst LP duality gap {:.1e}", worst_gap.get())
    } else {
        failures.join("; ")
    };
    verdict(ok, detail)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("posted bundle and single-good prices", Duration::from_secs(1), posted_prices),
        ("Pareto flatness", Duration::from_secs(1), pareto_flatness),
        ("buyer-optimal structure", Duration::from_secs(10), buyer_optimal_structure),
        ("robust mechanism identities", Duration::from_secs(5), robust_identities),
        ("revenue guarantee sampling", Duration::from_secs(60), guarantee_sampling),
        ("min-max equals max-min", Duration::from_secs(300), minmax),
        ("comparative statics", Duration::from_secs(120), comparative_statics),
        ("property suites", Duration::from_secs(600), property_suites),
    ];
    let mut all = true;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f();
        let dt = t.elapsed();
        let ok = v.passed && dt <= *budget;
        all &= ok;
        println!(
            "criterion {} [PRIMARY] {name}: {} ({:.2} s, budget {} s) {}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}
