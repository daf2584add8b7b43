//! Selling mechanisms, buyer best responses and outcome evaluation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{min_integrated_gap, Dist1D};
use crate::error::{Error, Result};
use crate::math::{abs, ln};
use crate::pareto::TruncatedPareto;
use crate::signals::{DiscreteSignal, PerfectlyCorrelatedSignal};
use crate::value_model::{bundle_size, Bundle, BundleValueModel};

/// How the buyer breaks ties between equally good items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieBreak {
    /// Highest transfer among the maximizers.
    SellerFavoring,
    /// Lowest transfer among the maximizers.
    SellerAdverse,
}

/// A lottery over bundles with a transfer. Probabilities sum to at most
/// one; the remainder allocates nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct MenuItem {
    pub lottery: Vec<(Bundle, f64)>,
    pub transfer: f64,
}

impl MenuItem {
    pub fn null() -> Self {
        Self { lottery: Vec::new(), transfer: 0.0 }
    }

    pub fn deterministic(b: Bundle, transfer: f64) -> Self {
        Self { lottery: vec![(b, 1.0)], transfer }
    }

    pub fn is_null(&self) -> bool {
        self.transfer == 0.0 && self.lottery.iter().all(|&(_, q)| q == 0.0)
    }

    /// Expected value of the lottery to a buyer with estimate `s`.
    pub fn expected_value(&self, model: &BundleValueModel, s: &[f64]) -> f64 {
        self.lottery.iter().map(|&(b, q)| q * model.value(s, b)).sum()
    }

    /// Probability of receiving the bundle `b`.
    pub fn probability_of(&self, b: Bundle) -> f64 {
        self.lottery.iter().filter(|e| e.0 == b).map(|e| e.1).sum()
    }

    /// Expected value per unit of `s̄` for estimates on the diagonal.
    fn diagonal_slope(&self, model: &BundleValueModel) -> f64 {
        let n = model.n() as f64;
        self.lottery
            .iter()
            .map(|&(b, q)| q * model.kappa(b) * bundle_size(b) as f64 / n)
            .sum()
    }
}

/// A finite menu; always contains the null item.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    items: Vec<MenuItem>,
}

impl Menu {
    pub fn new(mut items: Vec<MenuItem>) -> Result<Self> {
        for it in &items {
            if it.lottery.iter().any(|&(b, q)| b == 0 || !(q >= 0.0)) {
                return Err(Error::Domain("lottery needs nonempty bundles and non-negative probabilities".into()));
            }
            let total: f64 = it.lottery.iter().map(|e| e.1).sum();
            if total > 1.0 + 1e-9 {
                return Err(Error::Domain(alloc::format!("lottery probabilities sum to {total} > 1")));
            }
            if !it.transfer.is_finite() {
                return Err(Error::Domain("transfer must be finite".into()));
            }
        }
        if !items.iter().any(MenuItem::is_null) {
            items.insert(0, MenuItem::null());
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[MenuItem] {
        &self.items
    }
}

/// Random posted price for the grand bundle with CDF
/// `P(p) = ln(p/π*) / ln(s̄*/π*)` on `[π*, s̄*]`, in direct form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPureBundling {
    pi_star: f64,
    s_star: f64,
}

impl RandomPureBundling {
    pub fn new(pi_star: f64, s_star: f64) -> Result<Self> {
        if !(pi_star > 0.0 && pi_star < s_star && s_star.is_finite()) {
            return Err(Error::Domain(alloc::format!(
                "random pure bundling needs 0 < pi* < s*, got ({pi_star}, {s_star})"
            )));
        }
        Ok(Self { pi_star, s_star })
    }

    pub fn pi_star(&self) -> f64 {
        self.pi_star
    }

    pub fn s_star(&self) -> f64 {
        self.s_star
    }

    /// `ln(s̄*/π*)`.
    pub fn log_span(&self) -> f64 {
        ln(self.s_star / self.pi_star)
    }

    pub fn price_cdf(&self, p: f64) -> f64 {
        if p < self.pi_star {
            0.0
        } else if p > self.s_star {
            1.0
        } else {
            ln(p / self.pi_star) / self.log_span()
        }
    }

    /// Probability that the grand bundle is allocated at estimate sum `s̄`.
    pub fn allocation(&self, s_bar: f64) -> f64 {
        if s_bar <= self.pi_star {
            0.0
        } else {
            ln(s_bar / self.pi_star).min(self.log_span()) / self.log_span()
        }
    }

    /// Expected payment at estimate sum `s̄`.
    pub fn transfer(&self, s_bar: f64) -> f64 {
        if s_bar <= self.pi_star {
            0.0
        } else {
            (s_bar - self.pi_star).min(self.s_star - self.pi_star) / self.log_span()
        }
    }

    /// The price CDF at `points` equally spaced prices in `[π*, s̄*]`.
    pub fn price_cdf_samples(&self, points: usize) -> Vec<(f64, f64)> {
        let k = points.max(2) - 1;
        (0..=k)
            .map(|i| {
                let p = if i == k {
                    self.s_star
                } else {
                    self.pi_star + (self.s_star - self.pi_star) * i as f64 / k as f64
                };
                (p, self.price_cdf(p))
            })
            .collect()
    }

    fn item_for(&self, grand: Bundle, s_bar: f64) -> MenuItem {
        MenuItem { lottery: vec![(grand, self.allocation(s_bar))], transfer: self.transfer(s_bar) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    PureBundling { price: f64 },
    SeparateSales { prices: Vec<f64> },
    RandomPureBundling(RandomPureBundling),
    Menu(Menu),
}

impl Mechanism {
    pub fn descriptor(&self) -> String {
        match self {
            Mechanism::PureBundling { price } => alloc::format!("pure_bundling(price={price})"),
            Mechanism::SeparateSales { prices } => alloc::format!("separate_sales(prices={prices:?})"),
            Mechanism::RandomPureBundling(r) => {
                alloc::format!("random_pure_bundling(pi_star={}, s_star={})", r.pi_star, r.s_star)
            }
            Mechanism::Menu(m) => alloc::format!("menu({} items)", m.items.len()),
        }
    }

    /// Every item the buyer can pick, or `None` for the continuum of items
    /// offered by random pure bundling.
    pub fn finite_items(&self, model: &BundleValueModel) -> Result<Option<Vec<MenuItem>>> {
        Ok(Some(match self {
            Mechanism::PureBundling { price } => {
                vec![MenuItem::null(), MenuItem::deterministic(model.grand(), *price)]
            }
            Mechanism::SeparateSales { prices } => {
                if prices.len() != model.n() {
                    return Err(Error::Dimension { expected: model.n(), got: prices.len() });
                }
                let mut items = vec![MenuItem::null()];
                for b in model.bundles() {
                    let t = (0..model.n()).filter(|i| b >> i & 1 == 1).map(|i| prices[i]).sum();
                    items.push(MenuItem::deterministic(b, t));
                }
                items
            }
            Mechanism::Menu(m) => {
                if let Some(&(b, _)) = m.items.iter().flat_map(|it| &it.lottery).find(|e| e.0 > model.grand()) {
                    return Err(Error::Domain(alloc::format!("menu bundle {b:#b} has goods beyond n")));
                }
                m.items.clone()
            }
            Mechanism::RandomPureBundling(_) => return Ok(None),
        }))
    }
}

/// Seller profit, buyer surplus and grand-bundle trade probability.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeReport {
    pub profit: f64,
    pub consumer_surplus: f64,
    pub trade_probability: f64,
    pub mechanism_descriptor: String,
}

fn tie_eps(model: &BundleValueModel) -> f64 {
    1e-9 * 1.0f64.max(model.n() as f64 * model.theta_hi())
}

/// Index of the chosen item among `(utility, transfer)` pairs.
fn choose(options: impl Iterator<Item = (f64, f64)> + Clone, eps: f64, tb: TieBreak) -> usize {
    let best = options.clone().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let mut pick: Option<(usize, f64)> = None;
    for (i, (u, t)) in options.enumerate() {
        if u < best - eps {
            continue;
        }
        let better = match (pick, tb) {
            (None, _) => true,
            (Some((_, pt)), TieBreak::SellerFavoring) => t > pt,
            (Some((_, pt)), TieBreak::SellerAdverse) => t < pt,
        };
        if better {
            pick = Some((i, t));
        }
    }
    pick.map_or(0, |p| p.0)
}

/// The buyer's best item at estimate `s` and its utility.
pub fn best_response(
    mech: &Mechanism,
    s: &[f64],
    model: &BundleValueModel,
    tb: TieBreak,
) -> Result<(MenuItem, f64)> {
    // validates dimension and the type box
    model.bundle_value(s, model.grand())?;
    match mech.finite_items(model)? {
        None => {
            let Mechanism::RandomPureBundling(r) = mech else { unreachable!() };
            let s_bar: f64 = s.iter().sum();
            let item = r.item_for(model.grand(), s_bar);
            let u = item.expected_value(model, s) - item.transfer;
            Ok((item, u))
        }
        Some(items) => {
            let utils: Vec<(f64, f64)> = items
                .iter()
                .map(|it| (it.expected_value(model, s) - it.transfer, it.transfer))
                .collect();
            let i = choose(utils.iter().copied(), tie_eps(model), tb);
            let u = utils[i].0;
            Ok((items.into_iter().nth(i).unwrap(), u))
        }
    }
}

/// Either kind of signal, for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub enum SignalRef<'a> {
    Correlated(&'a PerfectlyCorrelatedSignal),
    Discrete(&'a DiscreteSignal),
}

impl<'a> From<&'a PerfectlyCorrelatedSignal> for SignalRef<'a> {
    fn from(s: &'a PerfectlyCorrelatedSignal) -> Self {
        SignalRef::Correlated(s)
    }
}

impl<'a> From<&'a DiscreteSignal> for SignalRef<'a> {
    fn from(s: &'a DiscreteSignal) -> Self {
        SignalRef::Discrete(s)
    }
}

/// Expected profit, consumer surplus and trade probability when the buyer
/// best-responds to `mech` at every estimate of the signal.
pub fn evaluate<'a>(
    mech: &Mechanism,
    sig: impl Into<SignalRef<'a>>,
    model: &BundleValueModel,
    tb: TieBreak,
) -> Result<OutcomeReport> {
    let sig = sig.into();
    let n = match sig {
        SignalRef::Correlated(c) => c.n(),
        SignalRef::Discrete(d) => d.n(),
    };
    if n != model.n() {
        return Err(Error::Dimension { expected: model.n(), got: n });
    }
    let (profit, value, trade) = match sig {
        SignalRef::Discrete(d) => evaluate_discrete(mech, d, model, tb)?,
        SignalRef::Correlated(c) => match mech {
            Mechanism::RandomPureBundling(r) => evaluate_rpb_correlated(r, c.grand_bundle()),
            _ => {
                let items = mech.finite_items(model)?.unwrap_or_default();
                evaluate_items_correlated(&items, c.grand_bundle(), model, tb)
            }
        },
    };
    Ok(OutcomeReport {
        profit,
        consumer_surplus: value - profit,
        trade_probability: trade.clamp(0.0, 1.0),
        mechanism_descriptor: mech.descriptor(),
    })
}

fn evaluate_discrete(
    mech: &Mechanism,
    d: &DiscreteSignal,
    model: &BundleValueModel,
    tb: TieBreak,
) -> Result<(f64, f64, f64)> {
    let (mut profit, mut value, mut trade) = (0.0, 0.0, 0.0);
    for (s, g) in d.signal_grid().iter().zip(d.signal_probs()) {
        if g <= 0.0 {
            continue;
        }
        let (item, _) = best_response(mech, s, model, tb)?;
        profit += g * item.transfer;
        value += g * item.expected_value(model, s);
        trade += g * item.probability_of(model.grand());
    }
    Ok((profit, value, trade))
}

fn evaluate_rpb_correlated(r: &RandomPureBundling, g: &Dist1D) -> (f64, f64, f64) {
    let splits = [r.pi_star, r.s_star];
    let profit = rpb_profit(r, g);
    let value = g.expect(&mut |x| r.allocation(x) * x, &splits);
    let trade = g.expect(&mut |x| r.allocation(x), &splits);
    (profit, value, trade)
}

/// Items are lines `a x - t` in the estimate sum `x`; the buyer's choice is
/// constant between pairwise crossings, so the expectation reduces to
/// interval masses and partial means plus the atoms sitting on crossings.
fn evaluate_items_correlated(
    items: &[MenuItem],
    g: &Dist1D,
    model: &BundleValueModel,
    tb: TieBreak,
) -> (f64, f64, f64) {
    let lines: Vec<(f64, f64)> = items.iter().map(|it| (it.diagonal_slope(model), it.transfer)).collect();
    let grand: Vec<f64> = items.iter().map(|it| it.probability_of(model.grand())).collect();
    let (lo, hi) = (g.lo(), g.hi());
    let mut xs = vec![lo, hi];
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let da = lines[i].0 - lines[j].0;
            if abs(da) > 1e-15 {
                let x = (lines[i].1 - lines[j].1) / da;
                if x > lo && x < hi {
                    xs.push(x);
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let eps = tie_eps(model);
    let pick = |x: f64| choose(lines.iter().map(|&(a, t)| (a * x - t, t)), eps, tb);

    let (mut profit, mut value, mut trade) = (0.0, 0.0, 0.0);
    let mut add = |i: usize, mass: f64, moment: f64| {
        profit += lines[i].1 * mass;
        value += lines[i].0 * moment;
        trade += grand[i] * mass;
    };
    for (k, &x) in xs.iter().enumerate() {
        let m = g.atom_mass(x);
        if m > 0.0 {
            add(pick(x), m, m * x);
        }
        if let Some(&r) = xs.get(k + 1) {
            let mass = g.cdf_left(r) - g.cdf(x);
            if mass > 0.0 {
                let moment = g.partial_mean_left(r) - g.partial_mean(x);
                add(pick(0.5 * (x + r)), mass, moment);
            }
        }
    }
    // atoms strictly inside intervals are covered by the interval terms
    (profit, value, trade)
}

/// Profit of a posted grand-bundle price when the buyer buys at
/// indifference.
pub fn pb_profit(g: &Dist1D, price: f64) -> f64 {
    price * (1.0 - g.cdf_left(price))
}

/// Profit-maximizing posted price, the lowest among maximizers.
///
/// Candidates are the breakpoints of `g` (grid nodes, atoms, kinks) plus
/// the stationary point of `p (1 - F(p))` on every piece where `F` is
/// linear.
pub fn pb_best_price(g: &Dist1D) -> (f64, f64) {
    let bps = g.breakpoints();
    let mut cands = bps.clone();
    for w in bps.windows(2) {
        let (l, r) = (w[0], w[1]);
        let d = g.density(0.5 * (l + r));
        if d > 0.0 {
            let p = (1.0 - g.cdf(l) + d * l) / (2.0 * d);
            if p > l && p < r {
                cands.push(p);
            }
        }
    }
    if let Some(h) = g.as_pareto() {
        cands.push(h.alpha());
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let profits: Vec<f64> = cands.iter().map(|&p| pb_profit(g, p)).collect();
    let best = profits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * 1.0f64.max(abs(best));
    let i = profits.iter().position(|&p| p >= best - tol).unwrap_or(0);
    (cands[i], profits[i])
}

/// Expected revenue of random pure bundling when grand-bundle estimates are
/// distributed as `g`.
pub fn rpb_profit(r: &RandomPureBundling, g: &Dist1D) -> f64 {
    let (pi, s) = (r.pi_star, r.s_star);
    let upper = g.partial_mean(s) - g.partial_mean(pi);
    let mass = g.cdf(s) - g.cdf(pi);
    ((upper - pi * mass) + (s - pi) * (1.0 - g.cdf(s))) / r.log_span()
}

/// `E_g[min(s̄ - π*, s̄* - π*)] / ln(s̄*/π*)` over the whole support. This is
/// the revenue bound that holds for every signal whose estimate sum is a
/// mean-preserving contraction of `g`.
pub fn rpb_guarantee(r: &RandomPureBundling, g: &Dist1D) -> f64 {
    let (pi, s) = (r.pi_star, r.s_star);
    let below = g.partial_mean(s) - pi * g.cdf(s);
    (below + (s - pi) * (1.0 - g.cdf(s))) / r.log_span()
}

/// Interior touching point of the integrated CDFs with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SStar {
    pub s_star: f64,
    /// `∫F̄ - ∫H` at `s_star`.
    pub gap: f64,
    /// Distance from `H(s*)` to `[F̄(s*-), F̄(s*)]`.
    pub cdf_gap: f64,
    /// Difference of the partial means up to `s*`.
    pub partial_mean_gap: f64,
}

/// Largest integrated-CDF gap accepted as touching, relative to the support.
pub const TOUCH_TOL: f64 = 1e-7;

/// Tolerance of the first-order and partial-mean identities at `s*`.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Finds `s̄* ∈ (α, β)` where the integrated CDFs of `f_bar` and `H` meet.
pub fn solve_s_star(f_bar: &Dist1D, h: &TruncatedPareto) -> Result<SStar> {
    let (a, b) = (h.alpha(), h.beta());
    if !(a < b) {
        return Err(Error::Construction { min_gap: f64::NAN, at: a });
    }
    let hd = h.to_dist(f_bar.lo(), f_bar.hi())?;
    let g = min_integrated_gap(f_bar, &hd, a, b);
    let scale = f_bar.scale();
    if g.gap > TOUCH_TOL * scale || g.at <= a || g.at >= b {
        return Err(Error::Construction { min_gap: g.gap, at: g.at });
    }
    let x = g.at;
    let hv = h.cdf(x);
    let (fl, fr) = (f_bar.cdf_left(x), f_bar.cdf(x));
    let cdf_gap = if hv < fl {
        fl - hv
    } else if hv > fr {
        hv - fr
    } else {
        0.0
    };
    let pm_h = h.partial_mean(x);
    let pm_gap = abs(f_bar.partial_mean(x) - pm_h).min(abs(f_bar.partial_mean_left(x) - pm_h));
    if cdf_gap > IDENTITY_TOL || pm_gap > IDENTITY_TOL * scale {
        return Err(Error::Construction { min_gap: g.gap, at: x });
    }
    Ok(SStar { s_star: x, gap: g.gap, cdf_gap, partial_mean_gap: pm_gap })
}

/// Random pure bundling with price support `[π*, s̄*]`.
pub fn build_robust_mechanism(f_bar: &Dist1D, pi_star: f64, h_star: &TruncatedPareto) -> Result<Mechanism> {
    if abs(h_star.alpha() - pi_star) > 1e-9 * f_bar.scale() {
        return Err(Error::Domain(alloc::format!(
            "pi* = {pi_star} differs from the Pareto lower end {}",
            h_star.alpha()
        )));
    }
    let s = solve_s_star(f_bar, h_star)?;
    Ok(Mechanism::RandomPureBundling(RandomPureBundling::new(pi_star, s.s_star)?))
}
