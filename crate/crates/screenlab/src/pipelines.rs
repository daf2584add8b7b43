//! The experiment pipelines behind each command.

use rayon::prelude::*;
use serde::Serialize;

use screenlab_core::screening::{
    minmax_candidates_on, pb_best_on, screening_problem, summarize_minmax, Candidate,
};
use screenlab_core::signals::garble;
use screenlab_core::{
    alpha_star, build_robust_mechanism, bundle_size, evaluate, make_perfectly_correlated, optimal_mechanism,
    pb_profit, rpb_guarantee, rpb_profit, solve_s_star, AlphaStar, BundleValueModel, DiscretePrior,
    DiscreteSignal, Dist1D, LpOptions, LpSolution, Mechanism, OutcomeReport, PerfectlyCorrelatedSignal,
    PriorKind, PriorSpec, RandomPureBundling, SStar, SignalRef, TieBreak,
};

use crate::config::{Coarseness, Command, ExperimentConfig};
use crate::error::{AppError, AppResult};
use crate::formats::{load_signal, EstimatesFile, Instance, MechanismJson, SignalFile};
use crate::lp_export::to_cplex_lp;
use crate::report::{num as fmt, to_json, Artifact, Check, Output, Plot, Table};

/// Points at which distributions are sampled for plotting.
pub const PLOT_POINTS: usize = 512;

/// Garbling coarseness levels used when the config gives none.
pub const GUARANTEE_COARSENESS: [Coarseness; 5] = [
    Coarseness::Cells(1),
    Coarseness::Cells(2),
    Coarseness::Cells(5),
    Coarseness::Cells(10),
    Coarseness::Full,
];
pub const GUARANTEE_SEEDS: u64 = 40;

pub const MINMAX_COARSENESS: [Coarseness; 3] = [Coarseness::Cells(2), Coarseness::Cells(5), Coarseness::Cells(10)];
pub const MINMAX_SEEDS: u64 = 4;

/// Garbling count used by `robust` when the config gives no seeds.
pub const ROBUST_SEEDS: u64 = 8;

/// Largest `n` accepted by `verify_minmax`.
pub const MINMAX_MAX_GOODS: usize = 3;

/// Tolerance of the closed-form identities of the robust mechanism.
pub const IDENTITY_TOL: f64 = 1e-5;

/// Largest accepted LP duality gap.
pub const LP_GAP_TOL: f64 = 1e-7;

/// Runs the command named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> AppResult<Output> {
    cfg.validate()?;
    match cfg.command {
        Command::BuyerOptimal => run_buyer_optimal(cfg)?.output(),
        Command::Robust => run_robust(cfg)?.output(),
        Command::ComparativeStatics => run_comparative_statics(cfg, cfg.n_max)?.output(),
        Command::VerifyMinmax => run_verify_minmax(cfg)?.output(),
        Command::VerifyGuarantee => run_verify_guarantee(cfg)?.output(),
        Command::ExportLp => export_lp(cfg),
    }
}

/// `α*` of the instance; the single code path every pipeline uses for `π*`.
pub fn solve_pi_star(prior: &PriorSpec, tol: f64) -> AppResult<AlphaStar> {
    Ok(alpha_star(prior.grand_bundle_dist(), tol)?)
}

fn sample(d: &Dist1D, points: usize) -> Vec<f64> {
    let k = points.max(2) - 1;
    (0..=k).map(|i| d.lo() + (d.hi() - d.lo()) * i as f64 / k as f64).collect()
}

fn cells_label(c: Coarseness) -> String {
    c.to_string()
}

// ---------------------------------------------------------------- buyer optimal

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuyerOptimalReport {
    pub n: usize,
    pub mu_bar: f64,
    pub alpha_star: f64,
    pub pi_star: f64,
    /// Support `[α*, β(α*)]` of the buyer-optimal grand-bundle estimate.
    pub support: (f64, f64),
    pub profit: f64,
    pub consumer_surplus: f64,
    pub trade_probability: f64,
    /// `pb_profit(H_{α*}, α*)`.
    pub pb_profit_at_alpha: f64,
    pub residual_gap: f64,
    pub touch_point: f64,
    pub mechanism: MechanismJson,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub cdf_plot: Vec<Vec<f64>>,
}

pub fn run_buyer_optimal(cfg: &ExperimentConfig) -> AppResult<BuyerOptimalReport> {
    let Instance { model, prior } = cfg.instance()?;
    let f = prior.grand_bundle_dist();
    let a = solve_pi_star(&prior, cfg.tolerances.alpha)?;
    let mu = f.mean();
    let h = a.pareto.to_dist(f.lo(), f.hi())?;
    let sig = make_perfectly_correlated(&h, prior.n(), f)?;
    let mech = Mechanism::PureBundling { price: a.alpha };
    let out = evaluate(&mech, &sig, &model, TieBreak::SellerFavoring)?;
    let pb = pb_profit(&h, a.alpha);
    let scale = 1e-9 * mu.abs().max(1.0);
    let checks = vec![
        Check::at_least("trade_probability", out.trade_probability, 1.0 - 1e-9),
        Check::at_most("|profit - alpha_star|", (out.profit - a.alpha).abs(), scale),
        Check::at_most("|consumer_surplus - (mu_bar - alpha_star)|", (out.consumer_surplus - (mu - a.alpha)).abs(), scale),
        Check::at_most("|pb_profit(H, alpha_star) - alpha_star|", (pb - a.alpha).abs(), scale),
    ];
    let cdf_plot = sample(f, PLOT_POINTS).into_iter().map(|x| vec![x, h.cdf(x), f.cdf(x)]).collect();
    Ok(BuyerOptimalReport {
        n: prior.n(),
        mu_bar: mu,
        alpha_star: a.alpha,
        pi_star: a.alpha,
        support: (a.pareto.alpha(), a.pareto.beta()),
        profit: out.profit,
        consumer_surplus: out.consumer_surplus,
        trade_probability: out.trade_probability,
        pb_profit_at_alpha: pb,
        residual_gap: a.residual_gap,
        touch_point: a.touch_point,
        mechanism: MechanismJson::from_mechanism(&mech),
        checks,
        cdf_plot,
    })
}

impl BuyerOptimalReport {
    pub fn output(&self) -> AppResult<Output> {
        let table = Table::key_values(&[
            ("n", self.n as f64),
            ("mu_bar", self.mu_bar),
            ("alpha_star", self.alpha_star),
            ("pi_star", self.pi_star),
            ("support_lo", self.support.0),
            ("support_hi", self.support.1),
            ("profit", self.profit),
            ("consumer_surplus", self.consumer_surplus),
            ("trade_probability", self.trade_probability),
            ("pb_profit_at_alpha", self.pb_profit_at_alpha),
        ]);
        let mut o = Output::new(Command::BuyerOptimal, self, table, self.checks.clone())?;
        o.plots.push(Plot::new("grand_bundle_cdf", &["s", "signal_cdf", "prior_cdf"], self.cdf_plot.clone()));
        Ok(o)
    }
}

// ---------------------------------------------------------------- robust

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub signal: String,
    pub profit: f64,
    pub consumer_surplus: f64,
    pub trade_probability: f64,
}

impl Evaluation {
    fn new(signal: impl Into<String>, r: &OutcomeReport) -> Self {
        Self {
            signal: signal.into(),
            profit: r.profit,
            consumer_surplus: r.consumer_surplus,
            trade_probability: r.trade_probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustReport {
    pub n: usize,
    pub mu_bar: f64,
    pub pi_star: f64,
    pub s_star: f64,
    pub beta: f64,
    pub cdf_gap: f64,
    pub partial_mean_gap: f64,
    /// Expected rPB revenue when the buyer learns the grand-bundle value.
    pub revenue_under_prior: f64,
    /// `E_F̄[min{s̄ − π*, s̄* − π*}] / ln(s̄*/π*)` over the whole support.
    pub guarantee_expression: f64,
    pub evaluations: Vec<Evaluation>,
    pub min_profit: f64,
    pub argmin: String,
    pub mechanism: MechanismJson,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub rpb: RandomPureBundling,
}

/// `π*`, `s̄*` and the robust mechanism of an instance.
pub fn robust_mechanism(prior: &PriorSpec, tol: f64) -> AppResult<(AlphaStar, SStar, RandomPureBundling)> {
    let a = solve_pi_star(prior, tol)?;
    let f = prior.grand_bundle_dist();
    let s = solve_s_star(f, &a.pareto)?;
    let Mechanism::RandomPureBundling(r) = build_robust_mechanism(f, a.alpha, &a.pareto)? else {
        unreachable!("robust mechanism is random pure bundling")
    };
    Ok((a, s, r))
}

fn garbling_grid(cfg: &ExperimentConfig, seeds: u64, coarse: &[Coarseness]) -> Vec<(u64, Coarseness)> {
    let mut v = Vec::new();
    for s in cfg.seeds_or(seeds) {
        for &c in &cfg.coarseness_or(coarse) {
            v.push((s, c));
        }
    }
    v
}

fn discretized_joint(prior: &PriorSpec, points: usize) -> AppResult<Option<DiscretePrior>> {
    match prior.kind() {
        PriorKind::ExplicitGrandBundle(_) => Ok(None),
        _ => Ok(Some(prior.discretize(points)?)),
    }
}

pub fn run_robust(cfg: &ExperimentConfig) -> AppResult<RobustReport> {
    let Instance { model, prior } = cfg.instance()?;
    let f = prior.grand_bundle_dist();
    let (a, s, r) = robust_mechanism(&prior, cfg.tolerances.alpha)?;
    let mech = Mechanism::RandomPureBundling(r);
    let n = prior.n();
    let tb = TieBreak::SellerAdverse;
    let eval = |sig: SignalRef<'_>| evaluate(&mech, sig, &model, tb);

    let h = a.pareto.to_dist(f.lo(), f.hi())?;
    let correlated = make_perfectly_correlated(&h, n, f)?;
    let mut evaluations = vec![Evaluation::new("buyer_optimal", &eval((&correlated).into())?)];
    // rPB reads only the grand-bundle estimate, so full revelation is
    // evaluated exactly through the prior's grand-bundle distribution.
    let revealing = PerfectlyCorrelatedSignal::new_unchecked(f.clone(), n);
    evaluations.push(Evaluation::new("fully_revealing", &eval((&revealing).into())?));
    let dp = discretized_joint(&prior, cfg.grid_for(n))?;
    match &dp {
        Some(dp) => {
            let un = DiscreteSignal::uninformative(dp)?;
            evaluations.push(Evaluation::new("uninformative", &eval((&un).into())?));
            let fr = DiscreteSignal::fully_revealing(dp)?;
            evaluations.push(Evaluation::new("fully_revealing_discretized", &eval((&fr).into())?));
            let grid = garbling_grid(cfg, ROBUST_SEEDS, &GUARANTEE_COARSENESS);
            let garbled: Vec<AppResult<Evaluation>> = grid
                .par_iter()
                .map(|&(seed, c)| {
                    let g = garble(dp, seed, c.cells())?;
                    let rep = evaluate(&mech, &g, &model, tb)?;
                    Ok(Evaluation::new(format!("garbling(seed={seed}, coarseness={})", cells_label(c)), &rep))
                })
                .collect();
            for e in garbled {
                evaluations.push(e?);
            }
        }
        None => {
            let un = PerfectlyCorrelatedSignal::new_unchecked(Dist1D::degenerate(f.mean())?, n);
            evaluations.push(Evaluation::new("uninformative", &eval((&un).into())?));
        }
    }
    for p in &cfg.signals {
        let path = cfg.resolve(p);
        let sig = load_signal(&path)?;
        evaluations.push(Evaluation::new(format!("file:{}", p.display()), &eval((&sig).into())?));
    }

    let (argmin, min_profit) = evaluations
        .iter()
        .fold((String::new(), f64::INFINITY), |m, e| if e.profit < m.1 { (e.signal.clone(), e.profit) } else { m });
    let revenue_under_prior = rpb_profit(&r, f);
    let guarantee_expression = rpb_guarantee(&r, f);
    let tol = cfg.tolerances.guarantee * a.alpha.abs().max(1.0);
    let checks = vec![
        Check::at_least("min_profit", min_profit, a.alpha - tol),
        Check::at_most("|profit(buyer_optimal) - pi_star|", (evaluations[0].profit - a.alpha).abs(), IDENTITY_TOL),
        Check::at_most("|guarantee_expression - pi_star|", (guarantee_expression - a.alpha).abs(), IDENTITY_TOL),
        Check::at_least("revenue_under_prior", revenue_under_prior, a.alpha - tol),
        Check::at_most("cdf_gap", s.cdf_gap, 1e-6),
        Check::at_most("partial_mean_gap", s.partial_mean_gap, 1e-6 * f.scale()),
    ];
    Ok(RobustReport {
        n,
        mu_bar: f.mean(),
        pi_star: a.alpha,
        s_star: s.s_star,
        beta: a.pareto.beta(),
        cdf_gap: s.cdf_gap,
        partial_mean_gap: s.partial_mean_gap,
        revenue_under_prior,
        guarantee_expression,
        evaluations,
        min_profit,
        argmin,
        mechanism: MechanismJson::from_mechanism(&mech),
        checks,
        rpb: r,
    })
}

impl RobustReport {
    pub fn output(&self) -> AppResult<Output> {
        let mut table = Table::new(&["signal", "profit", "consumer_surplus", "trade_probability"]);
        for e in &self.evaluations {
            table.push(vec![e.signal.clone(), fmt(e.profit), fmt(e.consumer_surplus), fmt(e.trade_probability)]);
        }
        let mut o = Output::new(Command::Robust, self, table, self.checks.clone())?;
        let cdf = self.rpb.price_cdf_samples(PLOT_POINTS).into_iter().map(|(p, c)| vec![p, c]).collect();
        o.plots.push(Plot::new("price_cdf", &["price", "cdf"], cdf));
        Ok(o)
    }
}

// ---------------------------------------------------------------- comparative statics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeStaticsRow {
    pub n: usize,
    /// `p̄*_n / n`.
    pub per_good_price: f64,
    /// `CS_n = μ̃ − p̄*_n / n`.
    pub average_consumer_surplus: f64,
    /// `π*_n`.
    pub total_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeStaticsReport {
    pub marginal_mean: f64,
    pub rows: Vec<ComparativeStaticsRow>,
    pub checks: Vec<Check>,
}

pub fn run_comparative_statics(cfg: &ExperimentConfig, n_max: usize) -> AppResult<ComparativeStaticsReport> {
    let Instance { model, prior } = cfg.instance()?;
    let PriorKind::IidMarginal(marginal) = prior.kind() else {
        return Err(AppError::Config(
            "comparative statics needs iid goods (the prior must be an iid marginal)".into(),
        ));
    };
    if !model.is_additive() {
        return Err(AppError::Config("comparative statics needs additive values (every kappa equal to 1)".into()));
    }
    if n_max == 0 {
        return Err(AppError::Config("n_max must be positive".into()));
    }
    let mu = marginal.mean();
    let tol = cfg.tolerances.alpha;
    let rows: Vec<AppResult<ComparativeStaticsRow>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let a = alpha_star(&marginal.convolve_iid(n), tol)?;
            let p = a.alpha / n as f64;
            Ok(ComparativeStaticsRow { n, per_good_price: p, average_consumer_surplus: mu - p, total_profit: a.alpha })
        })
        .collect();
    let rows = rows.into_iter().collect::<AppResult<Vec<_>>>()?;

    let mut checks = Vec::new();
    for w in rows.windows(2) {
        let (x, y) = (&w[0], &w[1]);
        checks.push(Check::at_least(
            format!("CS_{} - CS_{}", x.n, y.n),
            x.average_consumer_surplus - y.average_consumer_surplus,
            -1e-8,
        ));
        checks.push(Check::at_least(
            format!("price_{} - price_{}", y.n, x.n),
            y.per_good_price - x.per_good_price,
            -1e-8,
        ));
    }
    if n_max >= 3 {
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        checks.push(Check::holds(
            format!("CS_{} < CS_1", last.n),
            last.average_consumer_surplus < first.average_consumer_surplus,
        ));
    }
    let single = alpha_star(marginal, tol)?;
    let scale = marginal.scale();
    checks.push(Check::at_most("|row 1 - alpha_star(marginal)|", (rows[0].total_profit - single.alpha).abs(), 1e-8 * scale));
    Ok(ComparativeStaticsReport { marginal_mean: mu, rows, checks })
}

impl ComparativeStaticsReport {
    pub fn output(&self) -> AppResult<Output> {
        let mut table = Table::new(&["n", "per_good_price", "average_consumer_surplus", "total_profit"]);
        for r in &self.rows {
            table.push(vec![
                r.n.to_string(),
                fmt(r.per_good_price),
                fmt(r.average_consumer_surplus),
                fmt(r.total_profit),
            ]);
        }
        let mut o = Output::new(Command::ComparativeStatics, self, table, self.checks.clone())?;
        let pts = self.rows.iter().map(|r| vec![r.n as f64, r.average_consumer_surplus, r.per_good_price]).collect();
        o.plots.push(Plot::new("consumer_surplus", &["n", "average_consumer_surplus", "per_good_price"], pts));
        Ok(o)
    }
}

// ---------------------------------------------------------------- min-max

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult {
    pub signal: String,
    pub types: usize,
    pub lp_profit: f64,
    pub pb_profit: f64,
    pub duality_gap: f64,
    pub max_violation: f64,
}

/// Outcomes of selling the grand bundle at `π*` and of separate sales at
/// `π*/n` per good under the buyer-optimal signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitComparison {
    pub pure_bundling: Evaluation,
    pub separate_sales: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinmaxVerification {
    pub n: usize,
    pub grid: usize,
    pub cells: usize,
    /// Max-min value: the revenue guarantee `π*` of the robust mechanism.
    pub pi_star: f64,
    pub s_star: f64,
    /// Min-max value: smallest seller-optimal profit over the candidates.
    pub min_profit: f64,
    pub argmin: String,
    pub buyer_optimal_profit: f64,
    pub buyer_optimal_pb_profit: f64,
    pub candidates: Vec<CandidateResult>,
    pub split: SplitComparison,
    pub robust_mechanism: MechanismJson,
    /// The seller-optimal menu under the minimizing signal.
    pub witness_mechanism: MechanismJson,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub witness_signal: EstimatesFile,
}

fn solve_candidates(
    cands: &[Candidate],
    model: &BundleValueModel,
    opts: &LpOptions,
) -> AppResult<Vec<(LpSolution, f64)>> {
    let solved: Vec<AppResult<(LpSolution, f64)>> = cands
        .par_iter()
        .map(|c| {
            let s = optimal_mechanism(&c.estimates, model, opts)?;
            let (_, pb) = pb_best_on(&c.estimates)?;
            Ok((s, pb))
        })
        .collect();
    solved.into_iter().collect()
}

pub fn run_verify_minmax(cfg: &ExperimentConfig) -> AppResult<MinmaxVerification> {
    let Instance { model, prior } = cfg.instance()?;
    let n = prior.n();
    if n > MINMAX_MAX_GOODS {
        return Err(AppError::Resource(format!(
            "verify_minmax solves screening LPs with 2^n bundles per type; n = {n} exceeds {MINMAX_MAX_GOODS}"
        )));
    }
    if matches!(prior.kind(), PriorKind::ExplicitGrandBundle(_)) {
        return Err(AppError::Config("verify_minmax needs a joint prior (iid or discrete), not a grand-bundle law".into()));
    }
    let a = solve_pi_star(&prior, cfg.tolerances.alpha)?;
    // A degenerate grand-bundle value leaves nothing to randomize over: the
    // robust mechanism is the posted price μ̄.
    let (robust, s_star) = if a.pareto.beta() > a.pareto.alpha() {
        let (_, s, r) = robust_mechanism(&prior, cfg.tolerances.alpha)?;
        (Mechanism::RandomPureBundling(r), s.s_star)
    } else {
        (Mechanism::PureBundling { price: a.alpha }, a.alpha)
    };
    let grid = cfg.grid_for(n);
    let seeds = cfg.seeds_or(MINMAX_SEEDS);
    let coarse: Vec<usize> = cfg.coarseness_or(&MINMAX_COARSENESS).iter().map(|c| c.cells()).collect();
    let cands = minmax_candidates_on(&prior, grid, cfg.cells, &seeds, &coarse)?;
    let opts = LpOptions::default();
    let solved = solve_candidates(&cands, &model, &opts)?;
    let summary = summarize_minmax(cands.iter().zip(&solved).map(|(c, s)| (c.label.clone(), s.0.profit)).collect(), a.alpha);

    let candidates: Vec<CandidateResult> = cands
        .iter()
        .zip(&solved)
        .map(|(c, (s, pb))| CandidateResult {
            signal: c.label.clone(),
            types: c.estimates.len(),
            lp_profit: s.profit,
            pb_profit: *pb,
            duality_gap: s.duality_gap,
            max_violation: s.max_violation,
        })
        .collect();
    let bo = candidates.iter().find(|c| c.signal == "buyer_optimal").expect("buyer-optimal candidate");
    let wi = cands.iter().position(|c| c.label == summary.argmin).expect("argmin is a candidate");

    let f = prior.grand_bundle_dist();
    let h = a.pareto.to_dist(f.lo(), f.hi())?;
    let sig = make_perfectly_correlated(&h, n, f)?;
    let pb_mech = Mechanism::PureBundling { price: a.alpha };
    let sep_mech = Mechanism::SeparateSales { prices: vec![a.alpha / n as f64; n] };
    let tb = TieBreak::SellerFavoring;
    let split = SplitComparison {
        pure_bundling: Evaluation::new("buyer_optimal", &evaluate(&pb_mech, &sig, &model, tb)?),
        separate_sales: Evaluation::new("buyer_optimal", &evaluate(&sep_mech, &sig, &model, tb)?),
    };

    let tol = cfg.tolerances.minmax;
    let worst_gap = candidates.iter().map(|c| c.duality_gap.abs()).fold(0.0, f64::max);
    let worst_violation = candidates.iter().map(|c| c.max_violation).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_least("min_profit", summary.min_profit, a.alpha - tol),
        Check::at_most("|min_profit - pi_star|", (summary.min_profit - a.alpha).abs(), tol),
        Check::at_most("|buyer_optimal_profit - pi_star|", (bo.lp_profit - a.alpha).abs(), tol),
        Check::at_most("|lp - pb| on buyer_optimal", (bo.lp_profit - bo.pb_profit).abs(), cfg.tolerances.lp_vs_pb),
        Check::at_most("max duality gap", worst_gap, LP_GAP_TOL),
        Check::at_most("max incentive violation", worst_violation, 1e-8),
        Check::at_least("pb trade probability at pi_star", split.pure_bundling.trade_probability, 1.0 - 1e-9),
    ];
    // With a singleton worth more than its share of the grand bundle, the
    // lowest diagonal types prefer a single good at π*/n.
    if model.bundles().any(|b| bundle_size(b) == 1 && model.kappa(b) > 1.0) {
        checks.push(Check::holds(
            "separate sales at pi_star/n: trade < 1 and profit < pi_star",
            split.separate_sales.trade_probability < 1.0 - 1e-9 && split.separate_sales.profit < a.alpha - 1e-9,
        ));
    }
    Ok(MinmaxVerification {
        n,
        grid,
        cells: cfg.cells,
        pi_star: a.alpha,
        s_star,
        min_profit: summary.min_profit,
        argmin: summary.argmin,
        buyer_optimal_profit: bo.lp_profit,
        buyer_optimal_pb_profit: bo.pb_profit,
        split,
        robust_mechanism: MechanismJson::from_mechanism(&robust),
        witness_mechanism: MechanismJson::from_mechanism(&solved[wi].0.mechanism()),
        witness_signal: EstimatesFile::from_prior(&cands[wi].estimates),
        candidates,
        checks,
    })
}

impl MinmaxVerification {
    pub fn output(&self) -> AppResult<Output> {
        let mut table = Table::new(&["signal", "types", "lp_profit", "pb_profit", "duality_gap", "max_violation"]);
        for c in &self.candidates {
            table.push(vec![
                c.signal.clone(),
                c.types.to_string(),
                fmt(c.lp_profit),
                fmt(c.pb_profit),
                fmt(c.duality_gap),
                fmt(c.max_violation),
            ]);
        }
        let mut o = Output::new(Command::VerifyMinmax, self, table, self.checks.clone())?;
        o.artifacts.push(Artifact { name: "witness_signal.json".into(), contents: to_json(&self.witness_signal)? });
        o.artifacts.push(Artifact { name: "witness_mechanism.json".into(), contents: to_json(&self.witness_mechanism)? });
        Ok(o)
    }
}

// ---------------------------------------------------------------- guarantee sampling

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GarblingResult {
    pub seed: u64,
    pub coarseness: String,
    pub realizations: usize,
    pub profit: f64,
    pub consumer_surplus: f64,
    pub trade_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeVerification {
    pub pi_star: f64,
    pub s_star: f64,
    pub samples: usize,
    pub min_profit: f64,
    /// Index into `garblings` of the least profitable signal.
    pub argmin: usize,
    pub garblings: Vec<GarblingResult>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub witness: SignalFile,
}

pub fn run_verify_guarantee(cfg: &ExperimentConfig) -> AppResult<GuaranteeVerification> {
    let Instance { model, prior } = cfg.instance()?;
    let Some(dp) = discretized_joint(&prior, cfg.grid_for(prior.n()))? else {
        return Err(AppError::Config("verify_guarantee needs a joint prior (iid or discrete) to garble".into()));
    };
    let (a, s, r) = robust_mechanism(&prior, cfg.tolerances.alpha)?;
    let mech = Mechanism::RandomPureBundling(r);
    let grid = garbling_grid(cfg, GUARANTEE_SEEDS, &GUARANTEE_COARSENESS);
    let results: Vec<AppResult<(GarblingResult, DiscreteSignal)>> = grid
        .par_iter()
        .map(|&(seed, c)| {
            let g = garble(&dp, seed, c.cells())?;
            let rep = evaluate(&mech, &g, &model, TieBreak::SellerAdverse)?;
            let row = GarblingResult {
                seed,
                coarseness: cells_label(c),
                realizations: g.signal_grid().len(),
                profit: rep.profit,
                consumer_surplus: rep.consumer_surplus,
                trade_probability: rep.trade_probability,
            };
            Ok((row, g))
        })
        .collect();
    let mut garblings = Vec::with_capacity(results.len());
    let mut worst: Option<(usize, f64, DiscreteSignal)> = None;
    for (i, res) in results.into_iter().enumerate() {
        let (row, g) = res?;
        if worst.as_ref().is_none_or(|w| row.profit < w.1) {
            worst = Some((i, row.profit, g));
        }
        garblings.push(row);
    }
    let (argmin, min_profit, witness) = worst.expect("at least one garbling");
    let tol = cfg.tolerances.guarantee * a.alpha.abs().max(1.0);
    let checks = vec![Check::at_least("min_profit", min_profit, a.alpha - tol)];
    Ok(GuaranteeVerification {
        pi_star: a.alpha,
        s_star: s.s_star,
        samples: garblings.len(),
        min_profit,
        argmin,
        garblings,
        checks,
        witness: SignalFile::from_signal(&witness),
    })
}

impl GuaranteeVerification {
    pub fn output(&self) -> AppResult<Output> {
        let mut table =
            Table::new(&["seed", "coarseness", "realizations", "profit", "consumer_surplus", "trade_probability"]);
        for g in &self.garblings {
            table.push(vec![
                g.seed.to_string(),
                g.coarseness.clone(),
                g.realizations.to_string(),
                fmt(g.profit),
                fmt(g.consumer_surplus),
                fmt(g.trade_probability),
            ]);
        }
        let mut o = Output::new(Command::VerifyGuarantee, self, table, self.checks.clone())?;
        o.artifacts.push(Artifact { name: "witness_signal.json".into(), contents: to_json(&self.witness)? });
        Ok(o)
    }
}

// ---------------------------------------------------------------- LP export

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LpExportSummary {
    types: usize,
    variables: usize,
    constraints: usize,
}

/// The full screening LP of the fully revealing signal on the configured
/// grid, in CPLEX LP format.
pub fn export_lp(cfg: &ExperimentConfig) -> AppResult<Output> {
    let Instance { model, prior } = cfg.instance()?;
    let Some(dp) = discretized_joint(&prior, cfg.grid_for(prior.n()))? else {
        return Err(AppError::Config("export_lp needs a joint prior (iid or discrete)".into()));
    };
    let p = screening_problem(&dp, &model, &LpOptions::default())?;
    let summary = LpExportSummary { types: dp.len(), variables: p.var_names.len(), constraints: p.rows.len() };
    let table = Table::key_values(&[
        ("types", summary.types as f64),
        ("variables", summary.variables as f64),
        ("constraints", summary.constraints as f64),
    ]);
    let mut o = Output::new(Command::ExportLp, &summary, table, Vec::new())?;
    o.raw = Some(to_cplex_lp(&p));
    Ok(o)
}
