//! Unbiased signals: perfectly correlated ones, described by their
//! grand-bundle distribution alone, and finite discrete ones used for
//! adversarial sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{is_mps, min_integrated_gap, Dist1D, INTEGRAL_TOL};
use crate::error::{Error, Result};
use crate::math::abs;
use crate::value_model::{sum_pushforward, DiscretePrior, PriorSpec};

/// Signal whose estimates lie on the diagonal: realization `s̄` means the
/// estimate `(s̄/n, …, s̄/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectlyCorrelatedSignal {
    grand_bundle: Dist1D,
    n: usize,
}

/// Wraps `h` as a perfectly correlated signal after checking that the
/// prior's grand-bundle distribution `f_bar` is a mean-preserving spread of
/// it.
pub fn make_perfectly_correlated(h: &Dist1D, n: usize, f_bar: &Dist1D) -> Result<PerfectlyCorrelatedSignal> {
    make_perfectly_correlated_tol(h, n, f_bar, INTEGRAL_TOL)
}

pub fn make_perfectly_correlated_tol(
    h: &Dist1D,
    n: usize,
    f_bar: &Dist1D,
    tol: f64,
) -> Result<PerfectlyCorrelatedSignal> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let h = if h.lo() > f_bar.lo() || h.hi() < f_bar.hi() {
        h.clone().with_support(f_bar.lo(), f_bar.hi())?
    } else {
        h.clone()
    };
    if !is_mps(f_bar, &h, tol)? {
        let g = min_integrated_gap(f_bar, &h, f_bar.lo(), f_bar.hi());
        let mean_gap = f_bar.mean() - h.mean();
        if abs(mean_gap) > tol {
            return Err(Error::NotInducible { gap: mean_gap, at: f_bar.hi() });
        }
        return Err(Error::NotInducible { gap: g.gap, at: g.at });
    }
    Ok(PerfectlyCorrelatedSignal { grand_bundle: h, n })
}

impl PerfectlyCorrelatedSignal {
    /// Skips the feasibility check.
    pub fn new_unchecked(grand_bundle: Dist1D, n: usize) -> Self {
        Self { grand_bundle, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grand_bundle(&self) -> &Dist1D {
        &self.grand_bundle
    }

    pub fn induced_grand_bundle(&self) -> Dist1D {
        self.grand_bundle.clone()
    }

    pub fn estimate(&self, s_bar: f64) -> Vec<f64> {
        vec![s_bar / self.n as f64; self.n]
    }

    /// Finite distribution of estimates with `cells` pieces for the
    /// continuous part (atoms kept exactly).
    pub fn discretize(&self, cells: usize) -> DiscretePrior {
        let n = self.n as f64;
        let (types, probs) = self
            .grand_bundle
            .quantize(cells)
            .into_iter()
            .map(|(x, g)| (self.estimate(x), g))
            .unzip();
        DiscretePrior {
            n: self.n,
            theta_lo: self.grand_bundle.lo() / n,
            theta_hi: self.grand_bundle.hi() / n,
            types,
            probs,
        }
    }
}

/// Finite joint distribution over signal realizations and types. Each
/// realization is the estimate it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignal {
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    signal_grid: Vec<Vec<f64>>,
    type_grid: Vec<Vec<f64>>,
    prior: Vec<f64>,
    joint: Vec<Vec<f64>>,
}

impl DiscreteSignal {
    /// `joint[i][j]` is the probability of realization `i` and type `j`;
    /// `prior[j]` is the discretized prior mass of type `j`.
    pub fn new(
        theta_lo: f64,
        theta_hi: f64,
        signal_grid: Vec<Vec<f64>>,
        type_grid: Vec<Vec<f64>>,
        prior: Vec<f64>,
        joint: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = type_grid.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Domain("type grid must be nonempty".into()));
        }
        for v in signal_grid.iter().chain(&type_grid) {
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
        }
        if prior.len() != type_grid.len() {
            return Err(Error::Dimension { expected: type_grid.len(), got: prior.len() });
        }
        if joint.len() != signal_grid.len() {
            return Err(Error::Dimension { expected: signal_grid.len(), got: joint.len() });
        }
        for row in &joint {
            if row.len() != type_grid.len() {
                return Err(Error::Dimension { expected: type_grid.len(), got: row.len() });
            }
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Domain("joint probabilities must be non-negative".into()));
            }
        }
        Ok(Self { n, theta_lo, theta_hi, signal_grid, type_grid, prior, joint })
    }

    /// Realization `labels[j]` for type `j`, each realization set to the
    /// conditional mean of its cell. Empty labels are dropped.
    pub fn from_partition(prior: &DiscretePrior, labels: &[usize]) -> Result<Self> {
        if labels.len() != prior.len() {
            return Err(Error::Dimension { expected: prior.len(), got: labels.len() });
        }
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut mass = vec![0.0; k];
        let mut count = vec![0usize; k];
        let mut member = vec![0usize; k];
        let mut moment = vec![vec![0.0; prior.n]; k];
        for (j, &c) in labels.iter().enumerate() {
            let g = prior.probs[j];
            mass[c] += g;
            count[c] += 1;
            member[c] = j;
            for (m, t) in moment[c].iter_mut().zip(&prior.types[j]) {
                *m += g * t;
            }
        }
        let mut remap = vec![usize::MAX; k];
        let mut signal_grid = Vec::new();
        for c in 0..k {
            if mass[c] > 0.0 {
                remap[c] = signal_grid.len();
                if count[c] == 1 {
                    signal_grid.push(prior.types[member[c]].clone());
                } else {
                    signal_grid.push(moment[c].iter().map(|m| m / mass[c]).collect::<Vec<f64>>());
                }
            }
        }
        let mut joint = vec![vec![0.0; prior.len()]; signal_grid.len()];
        for (j, &c) in labels.iter().enumerate() {
            if remap[c] != usize::MAX {
                joint[remap[c]][j] = prior.probs[j];
            }
        }
        Self::new(
            prior.theta_lo,
            prior.theta_hi,
            signal_grid,
            prior.types.clone(),
            prior.probs.clone(),
            joint,
        )
    }

    /// Every type learns its own value.
    pub fn fully_revealing(prior: &DiscretePrior) -> Result<Self> {
        let labels: Vec<usize> = (0..prior.len()).collect();
        Self::from_partition(prior, &labels)
    }

    /// One realization, the prior mean.
    pub fn uninformative(prior: &DiscretePrior) -> Result<Self> {
        Self::from_partition(prior, &vec![0; prior.len()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta_lo(&self) -> f64 {
        self.theta_lo
    }

    pub fn theta_hi(&self) -> f64 {
        self.theta_hi
    }

    pub fn signal_grid(&self) -> &[Vec<f64>] {
        &self.signal_grid
    }

    pub fn type_grid(&self) -> &[Vec<f64>] {
        &self.type_grid
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn joint(&self) -> &[Vec<f64>] {
        &self.joint
    }

    /// Probability of each realization.
    pub fn signal_probs(&self) -> Vec<f64> {
        self.joint.iter().map(|row| row.iter().sum()).collect()
    }

    /// Marginal over types.
    pub fn type_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.type_grid.len()];
        for row in &self.joint {
            for (mj, p) in m.iter_mut().zip(row) {
                *mj += p;
            }
        }
        m
    }

    /// `E[θ | s]` for each realization with positive probability.
    pub fn conditional_means(&self) -> Vec<Option<Vec<f64>>> {
        self.joint
            .iter()
            .map(|row| {
                let mass: f64 = row.iter().sum();
                if mass <= 0.0 {
                    return None;
                }
                let mut m = vec![0.0; self.n];
                for (p, t) in row.iter().zip(&self.type_grid) {
                    for (mi, ti) in m.iter_mut().zip(t) {
                        *mi += p * ti;
                    }
                }
                Some(m.into_iter().map(|x| x / mass).collect())
            })
            .collect()
    }

    /// True iff the type marginal equals the prior and every realization is
    /// its own conditional mean, both within `tol`.
    pub fn check_unbiased(&self, tol: f64) -> bool {
        let marginal_ok = self
            .type_marginal()
            .iter()
            .zip(&self.prior)
            .all(|(a, b)| abs(a - b) <= tol);
        let means_ok = self
            .conditional_means()
            .iter()
            .zip(&self.signal_grid)
            .all(|(m, s)| match m {
                Some(m) => m.iter().zip(s).all(|(a, b)| abs(a - b) <= tol),
                None => true,
            });
        marginal_ok && means_ok
    }

    /// Realizations with their probabilities, as a finite distribution of
    /// estimates.
    pub fn estimate_distribution(&self) -> DiscretePrior {
        let probs = self.signal_probs();
        let (types, probs) = self
            .signal_grid
            .iter()
            .zip(probs)
            .filter(|(_, g)| *g > 0.0)
            .map(|(s, g)| (s.clone(), g))
            .unzip();
        DiscretePrior { n: self.n, theta_lo: self.theta_lo, theta_hi: self.theta_hi, types, probs }
    }

    /// Distribution of the sum of the estimate, on `[n θℓ, n θh]`.
    pub fn induced_grand_bundle(&self) -> Result<Dist1D> {
        let e = self.estimate_distribution();
        sum_pushforward(self.n, self.theta_lo, self.theta_hi, &e.types, &e.probs)
    }

    /// Grand-bundle distribution of the discretized prior on the same support.
    pub fn prior_grand_bundle(&self) -> Result<Dist1D> {
        sum_pushforward(self.n, self.theta_lo, self.theta_hi, &self.type_grid, &self.prior)
    }
}

/// Random partition of the discretized prior into `coarseness` cells (fewer
/// if some come out empty), each revealed only through its conditional
/// mean. Deterministic in `seed`.
pub fn sample_garbling(prior: &PriorSpec, seed: u64, coarseness: usize) -> Result<DiscreteSignal> {
    let dp = prior.discretize(PriorSpec::default_points(prior.n()))?;
    garble(&dp, seed, coarseness)
}

/// [`sample_garbling`] on an explicit finite prior.
///
/// Cells are the Voronoi regions of `coarseness` distinct random centers
/// under a random weighted norm, so cells are spatially coherent and the
/// garbling ranges from nearly revealing to nearly pooling.
pub fn garble(prior: &DiscretePrior, seed: u64, coarseness: usize) -> Result<DiscreteSignal> {
    let m = prior.len();
    if m == 0 {
        return Err(Error::Domain("empty prior".into()));
    }
    if coarseness >= m {
        return DiscreteSignal::fully_revealing(prior);
    }
    if coarseness <= 1 {
        return DiscreteSignal::uninformative(prior);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // partial Fisher-Yates for distinct centers
    let mut order: Vec<usize> = (0..m).collect();
    for i in 0..coarseness {
        let j = rng.random_range(i..m);
        order.swap(i, j);
    }
    let centers: Vec<&Vec<f64>> = order[..coarseness].iter().map(|&i| &prior.types[i]).collect();
    let weights: Vec<f64> = (0..prior.n).map(|_| rng.random_range(0.25..4.0)).collect();
    let labels: Vec<usize> = prior
        .types
        .iter()
        .map(|t| {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d: f64 = t
                    .iter()
                    .zip(center.iter())
                    .zip(&weights)
                    .map(|((a, b), w)| w * (a - b) * (a - b))
                    .sum();
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        })
        .collect();
    DiscreteSignal::from_partition(prior, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::alpha_star;

    fn uniform_prior() -> PriorSpec {
        PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2)
    }

    #[test]
    fn uninformative_correlated_signal() {
        let p = uniform_prior();
        let f = p.grand_bundle_dist();
        let d = Dist1D::degenerate(f.mean()).unwrap().with_support(f.lo(), f.hi()).unwrap();
        let s = make_perfectly_correlated(&d, 2, f).unwrap();
        let e = s.estimate(f.mean());
        assert!((e[0] - 0.5).abs() < 1e-9 && e[0] == e[1]);
        assert_eq!(s.induced_grand_bundle(), d);
    }

    #[test]
    fn buyer_optimal_signal_round_trip() {
        let p = uniform_prior();
        let f = p.grand_bundle_dist();
        let a = alpha_star(f, 1e-9).unwrap();
        let h = a.pareto.to_dist(f.lo(), f.hi()).unwrap();
        let s = make_perfectly_correlated(&h, 2, f).unwrap();
        assert_eq!(s.induced_grand_bundle(), h);
        let d = s.discretize(50);
        let total: f64 = d.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d.types.iter().all(|t| t[0] == t[1] && t[0] >= 0.0 && t[0] <= 1.0));
    }

    #[test]
    fn infeasible_signal_rejected() {
        let f = uniform_prior().grand_bundle_dist().clone();
        let wide = Dist1D::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        assert!(matches!(
            make_perfectly_correlated(&wide, 2, &f),
            Err(Error::NotInducible { .. })
        ));
    }

    #[test]
    fn garbling_extremes() {
        let p = uniform_prior();
        let dp = p.discretize(5).unwrap();
        let full = garble(&dp, 7, dp.len()).unwrap();
        assert_eq!(full.signal_grid(), dp.types.as_slice());
        let none = garble(&dp, 7, 1).unwrap();
        assert_eq!(none.signal_grid().len(), 1);
        assert!((none.signal_grid()[0][0] - 0.5).abs() < 1e-12);
        for seed in 0..5 {
            let g = garble(&dp, seed, 4).unwrap();
            assert!(g.check_unbiased(1e-9));
            assert_eq!(g, garble(&dp, seed, 4).unwrap());
        }
    }

    #[test]
    fn displaced_realization_is_biased() {
        let dp = uniform_prior().discretize(5).unwrap();
        let g = garble(&dp, 3, 3).unwrap();
        let mut grid = g.signal_grid().to_vec();
        grid[0][0] += 0.05;
        let bad = DiscreteSignal::new(
            g.theta_lo(),
            g.theta_hi(),
            grid,
            g.type_grid().to_vec(),
            g.prior().to_vec(),
            g.joint().to_vec(),
        )
        .unwrap();
        assert!(!bad.check_unbiased(1e-9));
    }

    #[test]
    fn fully_revealing_induces_discretized_prior() {
        let dp = uniform_prior().discretize(7).unwrap();
        let s = DiscreteSignal::fully_revealing(&dp).unwrap();
        assert_eq!(s.induced_grand_bundle().unwrap(), dp.grand_bundle().unwrap());
    }
}
