//! Exact screening LP over a finite distribution of estimates.
//!
//! For types `s¹ … sᵐ` with probabilities `g_j`, the seller chooses
//! lotteries `q_j(b)` and utilities `U_j ≥ 0` (so `t_j = Σ_b q_j(b) u(sʲ,b) - U_j`)
//! to maximize `Σ_j g_j t_j` subject to `Σ_b q_j(b) ≤ 1` and incentive
//! compatibility
//!
//! ```text
//! U_j ≥ U_k + Σ_b q_k(b) (u(sʲ,b) - u(sᵏ,b))   for all j ≠ k.
//! ```
//!
//! Writing the program in utilities makes every right-hand side zero or
//! one, so the slack basis is feasible. The `m(m-1)` incentive constraints
//! are generated lazily: the LP starts from constraints between nearby
//! types and adds the most violated ones until none remain.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;
use crate::mechanisms::{best_response, pb_best_price, Mechanism, Menu, MenuItem, TieBreak};
use crate::pareto::alpha_star;
use crate::signals::{garble, DiscreteSignal, PerfectlyCorrelatedSignal};
use crate::simplex::{SparseRow, Tableau};
use crate::value_model::{sum_pushforward, Bundle, BundleValueModel, DiscretePrior, PriorSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    /// Largest admissible `m · 2ⁿ`.
    pub max_vars: usize,
    /// Incentive violations below this (times the value scale) are ignored.
    pub violation_tol: f64,
    /// Nearby types linked by incentive constraints from the start.
    pub initial_neighbors: usize,
    /// Violated constraints added per type and round.
    pub cuts_per_type: usize,
    pub max_rounds: usize,
    /// Solve over orbits of coordinate permutations when the instance is
    /// exchangeable.
    pub exploit_symmetry: bool,
    /// Drop slack incentive constraints between rounds.
    pub prune_rows: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_vars: 100_000,
            violation_tol: 1e-10,
            initial_neighbors: 4,
            cuts_per_type: 4,
            max_rounds: 500,
            exploit_symmetry: true,
            prune_rows: true,
        }
    }
}

/// Optimal menu with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub profit: f64,
    pub menu: Menu,
    /// `q_j(b)` for each type `j` with positive probability, indexed by
    /// bundle mask minus one.
    pub allocations: Vec<Vec<f64>>,
    pub transfers: Vec<f64>,
    /// Objective of the dual solution; an upper bound on the optimum.
    pub dual_bound: f64,
    pub duality_gap: f64,
    /// Largest violation of a dual constraint (zero for an exact
    /// certificate).
    pub dual_infeasibility: f64,
    /// Largest violation of any incentive or feasibility constraint.
    pub max_violation: f64,
    pub rounds: usize,
    pub pivots: usize,
    pub active_constraints: usize,
}

impl LpSolution {
    pub fn mechanism(&self) -> Mechanism {
        Mechanism::Menu(self.menu.clone())
    }
}

/// Coordinate permutation `p`: coordinate `i` moves to position `p[i]`.
type Perm = Vec<usize>;

fn permutations(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur: Perm = (0..n).collect();
    fn rec(k: usize, cur: &mut Perm, out: &mut Vec<Perm>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

fn permute_bundle(p: &[usize], b: Bundle) -> Bundle {
    p.iter().enumerate().filter(|(i, _)| b >> i & 1 == 1).fold(0, |acc, (_, &pi)| acc | 1 << pi)
}

fn permute_type(p: &[usize], s: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.len()];
    for (i, &pi) in p.iter().enumerate() {
        out[pi] = s[i];
    }
    out
}

fn type_key(s: &[f64]) -> Vec<u64> {
    s.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Largest `n` for which permutation symmetry is exploited.
const MAX_SYMMETRY_GOODS: usize = 4;

/// The LP in orbit form. Types are grouped into orbits under coordinate
/// permutations that leave the prior and the model invariant; only one
/// representative per orbit carries variables, and type `k = σ(r)` receives
/// `q_k(σb) = q_r(b)`. Without symmetry every type is its own orbit.
struct Instance {
    nb: usize,
    /// `u[k][b-1]` for every type.
    u: Vec<Vec<f64>>,
    /// Orbit masses of the representatives.
    weight: Vec<f64>,
    /// Type index of each representative.
    rep_type: Vec<usize>,
    /// Representative of each type.
    orbit: Vec<usize>,
    /// Permutations (indices into `bmap`) carrying the representative to
    /// each type.
    carriers: Vec<Vec<usize>>,
    /// `bmap[σ][b-1] = σ(b) - 1`.
    bmap: Vec<Vec<usize>>,
}

impl Instance {
    fn new(est: &DiscretePrior, model: &BundleValueModel, symmetric: bool) -> Result<Self> {
        if est.n != model.n() {
            return Err(Error::Dimension { expected: model.n(), got: est.n });
        }
        let nb = model.grand() as usize;
        let mut types = Vec::new();
        let mut probs = Vec::new();
        for (t, &g) in est.types.iter().zip(&est.probs) {
            if g <= 0.0 {
                continue;
            }
            model.bundle_value(t, model.grand())?;
            types.push(t.clone());
            probs.push(g);
        }
        if types.is_empty() {
            return Err(Error::Domain("no type with positive probability".into()));
        }
        let u: Vec<Vec<f64>> = types.iter().map(|t| model.bundles().map(|b| model.value(t, b)).collect()).collect();
        let m = types.len();
        let identity = || Self {
            nb,
            u: u.clone(),
            weight: probs.clone(),
            rep_type: (0..m).collect(),
            orbit: (0..m).collect(),
            carriers: vec![vec![0]; m],
            bmap: vec![(0..nb).collect()],
        };
        if !symmetric || model.n() > MAX_SYMMETRY_GOODS {
            return Ok(identity());
        }
        let perms = permutations(model.n());
        let kappa_symmetric = perms
            .iter()
            .all(|p| model.bundles().all(|b| model.kappa(b) == model.kappa(permute_bundle(p, b))));
        if !kappa_symmetric {
            return Ok(identity());
        }
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for (k, t) in types.iter().enumerate() {
            if index.insert(type_key(t), k).is_some() {
                // duplicate points: keep the plain formulation
                return Ok(identity());
            }
        }
        let mut image = vec![vec![0usize; perms.len()]; m];
        for (k, t) in types.iter().enumerate() {
            for (pi, p) in perms.iter().enumerate() {
                match index.get(&type_key(&permute_type(p, t))) {
                    Some(&k2) if abs(probs[k2] - probs[k]) <= 1e-12 * probs[k].max(probs[k2]) => image[k][pi] = k2,
                    _ => return Ok(identity()),
                }
            }
        }
        let mut orbit = vec![usize::MAX; m];
        let mut carriers = vec![Vec::new(); m];
        let mut rep_type = Vec::new();
        let mut weight = Vec::new();
        for k in 0..m {
            if orbit[k] != usize::MAX {
                continue;
            }
            let r = rep_type.len();
            rep_type.push(k);
            let mut mass = 0.0;
            for (pi, &k2) in image[k].iter().enumerate() {
                if orbit[k2] == usize::MAX {
                    orbit[k2] = r;
                    mass += probs[k2];
                }
                carriers[k2].push(pi);
            }
            weight.push(mass);
        }
        let bmap = perms
            .iter()
            .map(|p| model.bundles().map(|b| permute_bundle(p, b) as usize - 1).collect())
            .collect();
        Ok(Self { nb, u, weight, rep_type, orbit, carriers, bmap })
    }

    fn reps(&self) -> usize {
        self.rep_type.len()
    }

    fn types(&self) -> usize {
        self.u.len()
    }

    fn q(&self, r: usize, b: usize) -> usize {
        r * (self.nb + 1) + b
    }

    fn util(&self, r: usize) -> usize {
        r * (self.nb + 1) + self.nb
    }

    fn num_vars(&self) -> usize {
        self.reps() * (self.nb + 1)
    }

    fn objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        for r in 0..self.reps() {
            let ur = &self.u[self.rep_type[r]];
            for b in 0..self.nb {
                c[self.q(r, b)] = self.weight[r] * ur[b];
            }
            c[self.util(r)] = -self.weight[r];
        }
        c
    }

    fn feasibility_row(&self, r: usize) -> SparseRow {
        SparseRow::new((0..self.nb).map(|b| self.q(r, b)).collect(), vec![1.0; self.nb], 1.0)
    }

    /// Representative `j` does not gain by reporting type `k`, reached from
    /// its representative through carrier `c`:
    /// `-U_j + U_{r_k} + Σ_b q_{r_k}(b) (u_j(σb) - u_k(σb)) ≤ 0`.
    fn ic_row(&self, cut: Cut) -> SparseRow {
        let (j, k, c) = cut;
        let rk = self.orbit[k];
        let map = &self.bmap[self.carriers[k][c]];
        let uj = &self.u[self.rep_type[j]];
        let uk = &self.u[k];
        let mut idx = vec![self.util(j)];
        let mut val = vec![-1.0];
        if rk != j {
            idx.push(self.util(rk));
            val.push(1.0);
        } else {
            val[0] = 0.0;
        }
        for b in 0..self.nb {
            let d = uj[map[b]] - uk[map[b]];
            if d != 0.0 {
                idx.push(self.q(rk, b));
                val.push(d);
            }
        }
        SparseRow::new(idx, val, 0.0)
    }

    fn scale(&self) -> f64 {
        self.u.iter().flatten().fold(1.0f64, |m, v| m.max(abs(*v)))
    }

    /// Cuts against the `per_rep` nearest types of each representative.
    fn neighbors(&self, per_rep: usize) -> Vec<Cut> {
        let mut out = Vec::new();
        if per_rep == 0 {
            return out;
        }
        for j in 0..self.reps() {
            let tj = self.rep_type[j];
            let mut dist: Vec<(f64, usize)> = (0..self.types())
                .filter(|&k| k != tj)
                .map(|k| {
                    let d: f64 = self.u[tj].iter().zip(&self.u[k]).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, k)
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, k) in dist.iter().take(per_rep) {
                out.extend((0..self.carriers[k].len()).map(|c| (j, k, c)));
            }
        }
        out
    }

    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let uu = (0..self.reps()).map(|r| x[self.util(r)]).collect();
        let q = (0..self.reps()).map(|r| (0..self.nb).map(|b| x[self.q(r, b)]).collect()).collect();
        (uu, q)
    }

    /// Violated cuts, most violated first per representative, and the
    /// largest violation.
    fn violations(&self, x: &[f64], tol: f64, per_rep: usize) -> (Vec<Cut>, f64) {
        let (uu, q) = self.split(x);
        let mut worst = 0.0f64;
        let mut cuts = Vec::new();
        let mut found: Vec<(f64, Cut)> = Vec::new();
        for j in 0..self.reps() {
            let uj = &self.u[self.rep_type[j]];
            found.clear();
            for k in 0..self.types() {
                let rk = self.orbit[k];
                for (c, &s) in self.carriers[k].iter().enumerate() {
                    let map = &self.bmap[s];
                    let gain: f64 = (0..self.nb).map(|b| q[rk][b] * (uj[map[b]] - self.u[k][map[b]])).sum();
                    let v = uu[rk] + gain - uu[j];
                    if v > tol {
                        found.push((v, (j, k, c)));
                    }
                    worst = worst.max(v);
                }
            }
            found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            cuts.extend(found.iter().take(per_rep).map(|&(_, c)| c));
        }
        (cuts, worst)
    }

    /// Allocation of every type, averaged over its carriers.
    fn expand(&self, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.types())
            .map(|k| {
                let r = self.orbit[k];
                let mut out = vec![0.0; self.nb];
                let cs = &self.carriers[k];
                for &s in cs {
                    for b in 0..self.nb {
                        out[self.bmap[s][b]] += q[r][b] / cs.len() as f64;
                    }
                }
                out
            })
            .collect()
    }
}

/// `(representative, reported type, carrier)`.
type Cut = (usize, usize, usize);

/// Number of LP variables `m · 2ⁿ` for `m` types of dimension `n`.
pub fn lp_size(m: usize, n: usize) -> usize {
    m.saturating_mul(1usize << n)
}

/// Largest violation of incentive compatibility, participation or
/// feasibility by the direct mechanism `(q, t)` for types with values `u`.
pub fn menu_violation(u: &[Vec<f64>], q: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    let truthful: Vec<f64> = (0..u.len()).map(|j| dot(&q[j], &u[j]) - t[j]).collect();
    for j in 0..u.len() {
        worst = worst.max(-truthful[j]);
        worst = worst.max(q[j].iter().sum::<f64>() - 1.0);
        worst = worst.max(-q[j].iter().fold(0.0f64, |m, v| m.min(*v)));
        for k in 0..u.len() {
            worst = worst.max(dot(&q[k], &u[j]) - t[k] - truthful[j]);
        }
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The seller's optimal mechanism for the finite estimate distribution
/// `est`, as a menu, with a duality certificate.
pub fn optimal_mechanism(est: &DiscretePrior, model: &BundleValueModel, opts: &LpOptions) -> Result<LpSolution> {
    let inst = Instance::new(est, model, opts.exploit_symmetry)?;
    let needed = lp_size(inst.types(), model.n());
    if needed > opts.max_vars {
        return Err(Error::Resource { needed, limit: opts.max_vars });
    }
    let tol = opts.violation_tol * inst.scale();
    let reps = inst.reps();

    let mut rows: Vec<SparseRow> = (0..reps).map(|r| inst.feasibility_row(r)).collect();
    let mut active: BTreeSet<Cut> = BTreeSet::new();
    let mut labels: Vec<Option<Cut>> = vec![None; reps];
    for cut in inst.neighbors(opts.initial_neighbors) {
        if active.insert(cut) {
            rows.push(inst.ic_row(cut));
            labels.push(Some(cut));
        }
    }
    let mut tab = Tableau::new(inst.objective(), rows)?;
    tab.solve_primal()?;

    let mut rounds = 0;
    loop {
        let x = tab.primal();
        let (cuts, worst) = inst.violations(&x, tol, opts.cuts_per_type);
        let fresh: Vec<Cut> = cuts.into_iter().filter(|c| !active.contains(c)).collect();
        if fresh.is_empty() {
            break;
        }
        if rounds >= opts.max_rounds {
            return Err(Error::Lp(alloc::format!(
                "incentive constraints still violated by {worst:e} after {rounds} rounds"
            )));
        }
        rounds += 1;
        if opts.prune_rows {
            let removed = tab.remove_rows(|i, slack| labels[i].is_some() && slack > tol);
            for &i in removed.iter().rev() {
                if let Some(c) = labels.remove(i) {
                    active.remove(&c);
                }
            }
        }
        let new_rows = fresh.iter().map(|&c| inst.ic_row(c)).collect();
        for &c in &fresh {
            active.insert(c);
            labels.push(Some(c));
        }
        tab.add_rows(new_rows)?;
        tab.reoptimize()?;
    }

    let profit = tab.objective();
    let y = tab.duals();
    let c = tab.objective_coefficients();
    let mut aty = vec![0.0; c.len()];
    let mut dual_bound = 0.0;
    for (yi, r) in y.iter().zip(tab.rows()) {
        let yi = yi.max(0.0);
        dual_bound += yi * r.rhs;
        for (&i, &v) in r.idx.iter().zip(&r.val) {
            aty[i] += yi * v;
        }
    }
    let dual_infeasibility = aty.iter().zip(c).fold(0.0f64, |m, (a, ci)| m.max(ci - a));

    let (uu, qr) = inst.split(&tab.primal());
    let allocations = inst.expand(&qr);
    let transfers: Vec<f64> = (0..inst.types())
        .map(|k| dot(&allocations[k], &inst.u[k]) - uu[inst.orbit[k]])
        .collect();
    let max_violation = menu_violation(&inst.u, &allocations, &transfers).max(0.0);
    let menu = extract_menu(model, &allocations, &transfers)?;
    Ok(LpSolution {
        profit,
        menu,
        allocations,
        transfers,
        dual_bound,
        duality_gap: dual_bound - profit,
        dual_infeasibility,
        max_violation,
        rounds,
        pivots: tab.pivots(),
        active_constraints: tab.num_rows(),
    })
}

fn extract_menu(model: &BundleValueModel, q: &[Vec<f64>], transfers: &[f64]) -> Result<Menu> {
    let mut items: Vec<MenuItem> = Vec::new();
    for (qj, &t) in q.iter().zip(transfers) {
        let lottery: Vec<_> = model
            .bundles()
            .zip(qj)
            .filter(|(_, &p)| p > 1e-12)
            .map(|(b, &p)| (b, p.min(1.0)))
            .collect();
        let item = MenuItem { lottery, transfer: if abs(t) < 1e-12 { 0.0 } else { t } };
        let same = |a: &MenuItem| {
            abs(a.transfer - item.transfer) <= 1e-9
                && a.lottery.len() == item.lottery.len()
                && a.lottery.iter().zip(&item.lottery).all(|(x, y)| x.0 == y.0 && abs(x.1 - y.1) <= 1e-9)
        };
        if !items.iter().any(same) {
            items.push(item);
        }
    }
    Menu::new(items)
}

/// Full LP (every incentive constraint) in the same variable order as
/// [`optimal_mechanism`], for export to external solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

pub fn screening_problem(est: &DiscretePrior, model: &BundleValueModel, opts: &LpOptions) -> Result<LpProblem> {
    let inst = Instance::new(est, model, false)?;
    let m = inst.types();
    let needed = lp_size(m, model.n());
    if needed > opts.max_vars {
        return Err(Error::Resource { needed, limit: opts.max_vars });
    }
    let mut var_names = Vec::with_capacity(inst.num_vars());
    for j in 0..m {
        for b in 1..=inst.nb {
            var_names.push(alloc::format!("q_{j}_{b}"));
        }
        var_names.push(alloc::format!("u_{j}"));
    }
    let mut rows = Vec::new();
    let mut row_names = Vec::new();
    for j in 0..m {
        rows.push(inst.feasibility_row(j));
        row_names.push(alloc::format!("feas_{j}"));
    }
    for j in 0..m {
        for k in 0..m {
            if j != k {
                rows.push(inst.ic_row((j, k, 0)));
                row_names.push(alloc::format!("ic_{j}_{k}"));
            }
        }
    }
    Ok(LpProblem { objective: inst.objective(), rows, var_names, row_names })
}

/// Best pure-bundling price on a finite estimate distribution.
pub fn pb_best_on(est: &DiscretePrior) -> Result<(f64, f64)> {
    let g = sum_pushforward(est.n, est.theta_lo, est.theta_hi, &est.types, &est.probs)?;
    Ok(pb_best_price(&g))
}

/// Best separate-sales prices on a finite estimate distribution, searched
/// over all price vectors whose entries are per-good estimate values (and a
/// price above every value). Large instances fall back to symmetric prices.
pub fn separate_sales_best(est: &DiscretePrior, model: &BundleValueModel) -> Result<(Vec<f64>, f64)> {
    let n = model.n();
    let mut cands: Vec<f64> = est.types.iter().flatten().copied().collect();
    cands.push(model.theta_hi() * 1.0001 + 1.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let combos = cands.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    let symmetric = combos.saturating_mul(est.len()) > 20_000_000;
    let profit_of = |prices: &[f64]| -> Result<f64> {
        let mech = Mechanism::SeparateSales { prices: prices.to_vec() };
        let mut p = 0.0;
        for (t, &g) in est.types.iter().zip(&est.probs) {
            if g > 0.0 {
                p += g * best_response(&mech, t, model, TieBreak::SellerFavoring)?.0.transfer;
            }
        }
        Ok(p)
    };
    let mut best = (vec![cands[cands.len() - 1]; n], 0.0);
    if symmetric {
        for &c in &cands {
            let pr = vec![c; n];
            let v = profit_of(&pr)?;
            if v > best.1 {
                best = (pr, v);
            }
        }
        return Ok(best);
    }
    let mut idx = vec![0usize; n];
    loop {
        let pr: Vec<f64> = idx.iter().map(|&i| cands[i]).collect();
        let v = profit_of(&pr)?;
        if v > best.1 {
            best = (pr, v);
        }
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(best);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < cands.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// A signal evaluated by [`minmax_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: String,
    pub estimates: DiscretePrior,
}

/// Cells used to discretize the buyer-optimal correlated signal.
pub const CORRELATED_CELLS: usize = 400;

/// Uninformative, fully revealing and buyer-optimal candidates followed by
/// one garbling per `(seed, coarseness)` pair, in that order.
pub fn minmax_candidates(prior: &PriorSpec, seeds: &[u64], coarseness: &[usize]) -> Result<Vec<Candidate>> {
    minmax_candidates_on(prior, PriorSpec::default_points(prior.n()), CORRELATED_CELLS, seeds, coarseness)
}

/// [`minmax_candidates`] with `points` grid points per dimension and
/// `cells` cells for the correlated signal.
pub fn minmax_candidates_on(
    prior: &PriorSpec,
    points: usize,
    cells: usize,
    seeds: &[u64],
    coarseness: &[usize],
) -> Result<Vec<Candidate>> {
    let dp = prior.discretize(points)?;
    let mut out = vec![
        Candidate {
            label: "uninformative".into(),
            estimates: DiscreteSignal::uninformative(&dp)?.estimate_distribution(),
        },
        Candidate {
            label: "fully_revealing".into(),
            estimates: DiscreteSignal::fully_revealing(&dp)?.estimate_distribution(),
        },
    ];
    let f = prior.grand_bundle_dist();
    let a = alpha_star(f, 1e-9)?;
    let h = a.pareto.to_dist(f.lo(), f.hi())?;
    let sig = PerfectlyCorrelatedSignal::new_unchecked(h, prior.n());
    out.push(Candidate { label: "buyer_optimal".into(), estimates: sig.discretize(cells) });
    for &seed in seeds {
        for &k in coarseness {
            out.push(Candidate {
                label: alloc::format!("garbling(seed={seed}, coarseness={k})"),
                estimates: garble(&dp, seed, k)?.estimate_distribution(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinmaxReport {
    /// `(label, optimal profit)` per candidate, in candidate order.
    pub profits: Vec<(String, f64)>,
    pub min_profit: f64,
    pub argmin: String,
    pub pi_star: f64,
    pub buyer_optimal_profit: f64,
}

/// Collects per-candidate optima into a report.
pub fn summarize_minmax(profits: Vec<(String, f64)>, pi_star: f64) -> MinmaxReport {
    let mut min = (String::new(), f64::INFINITY);
    for (l, p) in &profits {
        if *p < min.1 {
            min = (l.clone(), *p);
        }
    }
    let buyer_optimal_profit = profits
        .iter()
        .find(|(l, _)| l == "buyer_optimal")
        .map_or(f64::NAN, |p| p.1);
    MinmaxReport { min_profit: min.1, argmin: min.0, profits, pi_star, buyer_optimal_profit }
}

/// Smallest seller-optimal profit over sampled signals and the canonical
/// candidates.
pub fn minmax_estimate(
    prior: &PriorSpec,
    model: &BundleValueModel,
    seeds: &[u64],
    coarseness: &[usize],
    opts: &LpOptions,
) -> Result<MinmaxReport> {
    let pi_star = alpha_star(prior.grand_bundle_dist(), 1e-9)?.alpha;
    let mut profits = Vec::new();
    for c in minmax_candidates(prior, seeds, coarseness)? {
        let s = optimal_mechanism(&c.estimates, model, opts)?;
        profits.push((c.label, s.profit));
    }
    Ok(summarize_minmax(profits, pi_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist1D;

    fn model() -> BundleValueModel {
        BundleValueModel::new(2, 0.0, 1.0).unwrap()
    }

    fn prior_of(types: Vec<Vec<f64>>, probs: Vec<f64>) -> DiscretePrior {
        DiscretePrior { n: 2, theta_lo: 0.0, theta_hi: 1.0, types, probs }
    }

    #[test]
    fn single_type_full_extraction() {
        let est = prior_of(vec![vec![0.3, 0.6]], vec![1.0]);
        let s = optimal_mechanism(&est, &model(), &LpOptions::default()).unwrap();
        assert!((s.profit - 0.9).abs() < 1e-12);
        assert!(s.duality_gap.abs() < 1e-9);
    }

    #[test]
    fn two_types_match_posted_menus() {
        let est = prior_of(vec![vec![0.2, 0.2], vec![0.9, 0.9]], vec![0.5, 0.5]);
        let s = optimal_mechanism(&est, &model(), &LpOptions::default()).unwrap();
        // selling the bundle at 1.8 to the high type beats 0.4 to both
        assert!((s.profit - 0.9).abs() < 1e-12);
        assert!(s.duality_gap.abs() < 1e-9 && s.dual_infeasibility < 1e-9);
    }

    #[test]
    fn lp_dominates_simple_mechanisms() {
        let p = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
        let dp = p.discretize(6).unwrap();
        let m = model();
        let s = optimal_mechanism(&dp, &m, &LpOptions::default()).unwrap();
        let (_, pb) = pb_best_on(&dp).unwrap();
        let (_, sep) = separate_sales_best(&dp, &m).unwrap();
        assert!(s.profit >= pb - 1e-9 && s.profit >= sep - 1e-9);
        assert!(s.duality_gap.abs() <= 1e-7);
        assert!(s.max_violation <= 1e-9);
    }

    #[test]
    fn orbit_reduction_keeps_the_optimum() {
        let p = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
        let dp = p.discretize(7).unwrap();
        let m = model();
        let sym = optimal_mechanism(&dp, &m, &LpOptions::default()).unwrap();
        let plain = LpOptions { exploit_symmetry: false, prune_rows: false, ..LpOptions::default() };
        let full = optimal_mechanism(&dp, &m, &plain).unwrap();
        assert!((sym.profit - full.profit).abs() < 1e-10);
        assert!(sym.max_violation < 1e-9);
        assert_eq!(sym.allocations.len(), dp.len());
    }

    #[test]
    fn size_limit_enforced() {
        let p = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
        let dp = p.discretize(21).unwrap();
        let opts = LpOptions { max_vars: 1000, ..LpOptions::default() };
        assert!(matches!(optimal_mechanism(&dp, &model(), &opts), Err(Error::Resource { .. })));
    }
}
