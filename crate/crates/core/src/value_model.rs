//! Bundle values `u(θ, b) = κ_b Σ_{i∈b} θ_i` and exchangeable priors.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dist::Dist1D;
use crate::error::{Error, Result};
use crate::math::abs;

/// A set of goods as a bitmask; bit `i` is good `i`.
pub type Bundle = u32;

pub const MAX_GOODS: usize = 16;

pub fn bundle_size(b: Bundle) -> usize {
    b.count_ones() as usize
}

/// Upper bound on `κ_b` for a bundle of `size` goods out of `n`.
pub fn free_disposal_bound(n: usize, size: usize, theta_lo: f64, theta_hi: f64) -> f64 {
    1.0 + (n - size) as f64 / size as f64 * (theta_lo / theta_hi)
}

/// First bundle whose coefficient breaks weak free disposal, as
/// `(bundle, kappa, bound)`.
pub fn free_disposal_violation(
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    kappa: impl Fn(Bundle) -> f64,
) -> Option<(Bundle, f64, f64)> {
    (1..(1u32 << n)).find_map(|b| {
        let k = kappa(b);
        let bound = free_disposal_bound(n, bundle_size(b), theta_lo, theta_hi);
        (k > bound + 1e-12).then_some((b, k, bound))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleValueModel {
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    kappa: Vec<f64>,
}

impl BundleValueModel {
    /// Additive model (`κ ≡ 1`) on `[theta_lo, theta_hi]^n`.
    pub fn new(n: usize, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if !(2..=MAX_GOODS).contains(&n) {
            return Err(Error::Model(alloc::format!("n must be in 2..={MAX_GOODS}, got {n}")));
        }
        if !(theta_lo >= 0.0 && theta_hi > theta_lo && theta_hi.is_finite()) {
            return Err(Error::Model(alloc::format!(
                "need 0 <= theta_lo < theta_hi, got [{theta_lo}, {theta_hi}]"
            )));
        }
        let mut kappa = vec![1.0; 1 << n];
        kappa[0] = 0.0;
        Ok(Self { n, theta_lo, theta_hi, kappa })
    }

    /// Sets `κ_b`. The grand bundle stays normalized to one.
    pub fn with_kappa(mut self, b: Bundle, kappa: f64) -> Result<Self> {
        if b == 0 || b > self.grand() {
            return Err(Error::Model(alloc::format!("bundle {b:#b} is not a nonempty subset")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Model(alloc::format!("kappa must be non-negative, got {kappa}")));
        }
        if b == self.grand() && kappa != 1.0 {
            return Err(Error::Model("kappa of the grand bundle is normalized to 1".into()));
        }
        self.kappa[b as usize] = kappa;
        Ok(self)
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

    pub fn grand(&self) -> Bundle {
        ((1u64 << self.n) - 1) as Bundle
    }

    pub fn kappa(&self, b: Bundle) -> f64 {
        self.kappa[b as usize]
    }

    /// Nonempty bundles in increasing mask order.
    pub fn bundles(&self) -> impl Iterator<Item = Bundle> {
        1..=self.grand()
    }

    pub fn is_additive(&self) -> bool {
        self.kappa[1..].iter().all(|&k| k == 1.0)
    }

    /// Same coefficients on the box scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { theta_lo: self.theta_lo * c, theta_hi: self.theta_hi * c, ..self.clone() }
    }

    /// Checks weak free disposal, naming the first violating bundle.
    pub fn validate(&self) -> Result<()> {
        match free_disposal_violation(self.n, self.theta_lo, self.theta_hi, |b| self.kappa(b)) {
            Some((bundle, kappa, bound)) => Err(Error::FreeDisposal { bundle, kappa, bound }),
            None => Ok(()),
        }
    }

    /// `u(s, b)`; `s` must lie in the type box.
    pub fn bundle_value(&self, s: &[f64], b: Bundle) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: s.len() });
        }
        let eps = 1e-9 * 1.0f64.max(self.theta_hi);
        if let Some(x) = s.iter().find(|&&x| !(x >= self.theta_lo - eps && x <= self.theta_hi + eps)) {
            return Err(Error::Domain(alloc::format!(
                "estimate {x} outside [{}, {}]",
                self.theta_lo, self.theta_hi
            )));
        }
        if b > self.grand() {
            return Err(Error::Domain(alloc::format!("bundle {b:#b} has goods beyond n")));
        }
        Ok(self.value(s, b))
    }

    /// `u(s, b)` without validation.
    pub fn value(&self, s: &[f64], b: Bundle) -> f64 {
        if b == 0 {
            return 0.0;
        }
        let sum: f64 = (0..self.n).filter(|i| b >> i & 1 == 1).map(|i| s[i]).sum();
        self.kappa[b as usize] * sum
    }
}

/// True iff every bundle satisfies weak free disposal.
pub fn validate_free_disposal(m: &BundleValueModel) -> bool {
    m.validate().is_ok()
}

/// Finite exchangeable joint distribution over type vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    n: usize,
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| (x + 0.0).to_bits()).collect()
}

impl DiscreteJoint {
    pub fn new(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::Dimension { expected: points.len(), got: probs.len() });
        }
        let n = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::Dimension { expected: n, got: p.len() });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&g| !(g >= 0.0)) || abs(total - 1.0) > 1e-9 {
            return Err(Error::Model(alloc::format!(
                "joint probabilities must be non-negative and sum to one (sum {total})"
            )));
        }
        let mut table: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (p, &g) in points.iter().zip(&probs) {
            *table.entry(key(p)).or_insert(0.0) += g;
        }
        for (p, &g) in points.iter().zip(&probs) {
            if g == 0.0 {
                continue;
            }
            for i in 0..n.saturating_sub(1) {
                let mut q = p.clone();
                q.swap(i, i + 1);
                let h = table.get(&key(&q)).copied().unwrap_or(0.0);
                let own = table[&key(p)];
                if abs(h - own) > 1e-12 {
                    return Err(Error::Model(alloc::format!(
                        "joint is not exchangeable: swapping coordinates {i} and {} changes mass {own} to {h}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { n, points, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A finite prior over type vectors, the input of the signal sampler and
/// the screening LP.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    pub n: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub types: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

/// Distribution of coordinate sums, declared on `[n lo, n hi]`. Sums are
/// taken over sorted coordinates so permuted tables give identical output.
pub(crate) fn sum_pushforward(n: usize, lo: f64, hi: f64, types: &[Vec<f64>], probs: &[f64]) -> Result<Dist1D> {
    let mut pairs: Vec<(f64, f64)> = types
        .iter()
        .zip(probs)
        .filter(|(_, &g)| g > 0.0)
        .map(|(t, &g)| {
            let mut c = t.clone();
            c.sort_by(f64::total_cmp);
            (c.iter().sum::<f64>(), g)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (l, h) = (n as f64 * lo, n as f64 * hi);
    Dist1D::discrete(&pairs)?.with_support(l.min(pairs[0].0), h.max(pairs[pairs.len() - 1].0))
}

impl DiscretePrior {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Mean type vector.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (t, &g) in self.types.iter().zip(&self.probs) {
            for (mi, ti) in m.iter_mut().zip(t) {
                *mi += g * ti;
            }
        }
        m
    }

    pub fn grand_bundle(&self) -> Result<Dist1D> {
        sum_pushforward(self.n, self.theta_lo, self.theta_hi, &self.types, &self.probs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind {
    IidMarginal(Dist1D),
    ExplicitGrandBundle(Dist1D),
    DiscreteJoint(DiscreteJoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    kind: PriorKind,
    grand_bundle: Dist1D,
}

impl PriorSpec {
    /// Iid goods with the given marginal; the type box is its support.
    pub fn iid(marginal: Dist1D, n: usize) -> Self {
        Self::iid_with(marginal, n, crate::dist::DEFAULT_GRID_CELLS)
    }

    pub fn iid_with(marginal: Dist1D, n: usize, cells: usize) -> Self {
        let grand_bundle = marginal.convolve_iid_with(n, cells);
        Self {
            n,
            theta_lo: marginal.lo(),
            theta_hi: marginal.hi(),
            kind: PriorKind::IidMarginal(marginal),
            grand_bundle,
        }
    }

    /// Prior given only through its grand-bundle distribution on `[n lo, n hi]`.
    pub fn explicit(dist: Dist1D, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Model("n must be positive".into()));
        }
        Ok(Self {
            n,
            theta_lo: dist.lo() / n as f64,
            theta_hi: dist.hi() / n as f64,
            grand_bundle: dist.clone(),
            kind: PriorKind::ExplicitGrandBundle(dist),
        })
    }

    /// Finite exchangeable joint on the box `[theta_lo, theta_hi]^n`.
    pub fn discrete(joint: DiscreteJoint, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        let eps = 1e-12 * 1.0f64.max(abs(theta_hi));
        if joint.points.iter().flatten().any(|&x| x < theta_lo - eps || x > theta_hi + eps) {
            return Err(Error::Model("joint has support outside the type box".into()));
        }
        let grand_bundle = sum_pushforward(joint.n, theta_lo, theta_hi, &joint.points, &joint.probs)?;
        Ok(Self { n: joint.n, theta_lo, theta_hi, kind: PriorKind::DiscreteJoint(joint), grand_bundle })
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

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn grand_bundle_dist(&self) -> &Dist1D {
        &self.grand_bundle
    }

    /// `μ̄`, the expected value of the grand bundle.
    pub fn max_surplus(&self) -> f64 {
        self.grand_bundle.mean()
    }

    /// Grid size per dimension used when none is given.
    pub fn default_points(n: usize) -> usize {
        match n {
            0 | 1 => 101,
            2 => 21,
            3 => 9,
            4 => 5,
            _ => 3,
        }
    }

    /// Finite approximation of the joint prior. Iid marginals are cut into
    /// `points_per_dim` equal cells, each represented by its conditional
    /// mean, so the discretized prior keeps the exact marginal mean.
    pub fn discretize(&self, points_per_dim: usize) -> Result<DiscretePrior> {
        match &self.kind {
            PriorKind::DiscreteJoint(j) => Ok(DiscretePrior {
                n: self.n,
                theta_lo: self.theta_lo,
                theta_hi: self.theta_hi,
                types: j.points.clone(),
                probs: j.probs.clone(),
            }),
            PriorKind::ExplicitGrandBundle(_) => Err(Error::Model(
                "a prior given only by its grand-bundle distribution has no joint to discretize".into(),
            )),
            PriorKind::IidMarginal(m) => {
                if points_per_dim == 0 {
                    return Err(Error::Domain("points per dimension must be positive".into()));
                }
                let cells = marginal_cells(m, points_per_dim);
                let total = cells.len().checked_pow(self.n as u32).unwrap_or(usize::MAX);
                if total > 1_000_000 {
                    return Err(Error::Resource { needed: total, limit: 1_000_000 });
                }
                let mut types = Vec::with_capacity(total);
                let mut probs = Vec::with_capacity(total);
                let mut idx = vec![0usize; self.n];
                loop {
                    types.push(idx.iter().map(|&i| cells[i].0).collect());
                    probs.push(idx.iter().map(|&i| cells[i].1).product());
                    let mut d = self.n;
                    loop {
                        if d == 0 {
                            return Ok(DiscretePrior {
                                n: self.n,
                                theta_lo: self.theta_lo,
                                theta_hi: self.theta_hi,
                                types,
                                probs,
                            });
                        }
                        d -= 1;
                        idx[d] += 1;
                        if idx[d] < cells.len() {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
            }
        }
    }
}

/// `(conditional mean, mass)` of equal-width cells `[c_i, c_{i+1})` (the
/// last one closed) over the support of `m`; empty cells are dropped.
fn marginal_cells(m: &Dist1D, k: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = (m.lo(), m.hi());
    if hi <= lo {
        return vec![(lo, 1.0)];
    }
    let w = (hi - lo) / k as f64;
    let edge = |i: usize| if i == k { hi } else { lo + w * i as f64 };
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (edge(i), edge(i + 1));
        let (mass, moment) = if i + 1 == k {
            (1.0 - m.cdf_left(a), m.mean() - m.partial_mean_left(a))
        } else {
            (m.cdf_left(b) - m.cdf_left(a), m.partial_mean_left(b) - m.partial_mean_left(a))
        };
        if mass > 1e-15 {
            out.push(((moment / mass).clamp(a, b), mass));
        }
    }
    let total: f64 = out.iter().map(|c| c.1).sum();
    for c in &mut out {
        c.1 /= total;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_value_examples() {
        let m = BundleValueModel::new(2, 0.0, 1.0).unwrap();
        assert!((m.bundle_value(&[0.3, 0.7], 0b11).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.bundle_value(&[0.3, 0.7], 0).unwrap(), 0.0);
        assert!(m.bundle_value(&[0.3, 1.7], 0b11).is_err());
        let k = BundleValueModel::new(2, 0.5, 1.0).unwrap().with_kappa(0b01, 1.2).unwrap();
        assert!((k.bundle_value(&[1.0, 1.0], 0b01).unwrap() - 1.2).abs() < 1e-15);
        assert!(k.validate().is_ok());
    }

    #[test]
    fn free_disposal_examples() {
        assert!(validate_free_disposal(&BundleValueModel::new(3, 0.0, 1.0).unwrap()));
        let bad = BundleValueModel::new(2, 0.0, 1.0).unwrap().with_kappa(0b01, 1.1).unwrap();
        assert!(!validate_free_disposal(&bad));
        assert!(matches!(bad.validate(), Err(Error::FreeDisposal { bundle: 0b01, .. })));
        assert_eq!(free_disposal_bound(2, 1, 1.0, 1.0), 2.0);
        assert!(free_disposal_violation(2, 1.0, 1.0, |b| if b == 0b01 { 2.0 } else { 1.0 }).is_none());
    }

    #[test]
    fn grand_bundle_of_discrete_joint() {
        let j = DiscreteJoint::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0.25; 4],
        )
        .unwrap();
        let p = PriorSpec::discrete(j, 0.0, 1.0).unwrap();
        let f = p.grand_bundle_dist();
        assert_eq!(f.atoms(), vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]);
        assert_eq!((f.lo(), f.hi()), (0.0, 2.0));
    }

    #[test]
    fn non_exchangeable_joint_rejected() {
        let r = DiscreteJoint::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.7, 0.3]);
        assert!(matches!(r, Err(Error::Model(_))));
    }

    #[test]
    fn discretized_uniform_keeps_mean() {
        let p = PriorSpec::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2);
        let d = p.discretize(21).unwrap();
        assert_eq!(d.len(), 441);
        let m = d.mean();
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
        assert!((p.max_surplus() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn explicit_prior_not_discretizable() {
        let p = PriorSpec::explicit(Dist1D::uniform(0.0, 2.0).unwrap(), 2).unwrap();
        assert!(p.discretize(5).is_err());
        assert_eq!(p.grand_bundle_dist().mean(), 1.0);
    }
}
