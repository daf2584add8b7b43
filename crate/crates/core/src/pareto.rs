//! Truncated Pareto distributions and the buyer-optimal signal search.
//!
//! `H_{α,β}` has CDF `1 - α/x` on `[α, β)` and an atom of size `α/β` at
//! `β`. Against it a pure-bundling seller earns exactly `α` at every price
//! in `[α, β]`.

use crate::dist::{min_integrated_gap, Dist1D};
use crate::error::{Error, Result};
use crate::math::{abs, exp, ln};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPareto {
    alpha: f64,
    beta: f64,
}

impl TruncatedPareto {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite() && alpha <= beta) {
            return Err(Error::Domain(alloc::format!(
                "truncated Pareto needs 0 < alpha <= beta, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The member of the family with lower end `alpha` and mean `mean`.
    pub fn with_mean(alpha: f64, mean: f64, cap: f64) -> Result<Self> {
        Self::new(alpha, beta_of_alpha(alpha, mean, cap)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha * (1.0 + ln(self.beta / self.alpha))
    }

    pub fn atom(&self) -> (f64, f64) {
        (self.beta, self.alpha / self.beta)
    }

    pub fn atom_mass(&self, x: f64) -> f64 {
        if x == self.beta {
            self.alpha / self.beta
        } else {
            0.0
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.alpha {
            0.0
        } else if x < self.beta {
            1.0 - self.alpha / x
        } else {
            1.0
        }
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= self.alpha {
            0.0
        } else if x <= self.beta {
            1.0 - self.alpha / x
        } else {
            1.0
        }
    }

    /// `∫_{-∞}^{x} H(t) dt`.
    pub fn integrated_cdf(&self, x: f64) -> f64 {
        let a = self.alpha;
        if x <= a {
            0.0
        } else if x < self.beta {
            x - a - a * ln(x / a)
        } else {
            (self.beta - a - a * ln(self.beta / a)) + (x - self.beta)
        }
    }

    /// `∫_{[α, x]} t dH(t)`.
    pub fn partial_mean(&self, x: f64) -> f64 {
        let a = self.alpha;
        if x < a {
            0.0
        } else if x < self.beta {
            a * ln(x / a)
        } else {
            self.mean()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { alpha: self.alpha * c, beta: self.beta * c }
    }

    pub fn to_dist(&self, lo: f64, hi: f64) -> Result<Dist1D> {
        Dist1D::pareto(*self, lo, hi)
    }
}

/// Mean of `H_{α,β}`.
pub fn tpd_mean(alpha: f64, beta: f64) -> Result<f64> {
    Ok(TruncatedPareto::new(alpha, beta)?.mean())
}

/// The `β ∈ [α, cap]` with `α (1 + ln(β/α)) = target_mean`.
pub fn beta_of_alpha(alpha: f64, target_mean: f64, cap: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(alloc::format!("alpha must be positive, got {alpha}")));
    }
    let eps = 1e-12 * 1.0f64.max(abs(target_mean));
    if target_mean < alpha - eps {
        return Err(Error::Infeasible(alloc::format!(
            "mean {target_mean} is below alpha {alpha}"
        )));
    }
    let log_ratio = (target_mean / alpha - 1.0).max(0.0);
    if cap < alpha || log_ratio > ln(cap / alpha) + 1e-12 {
        return Err(Error::Infeasible(alloc::format!(
            "mean {target_mean} needs beta above cap {cap} at alpha {alpha}"
        )));
    }
    let mut beta = alpha * exp(log_ratio);
    // one Newton step on α(1 + ln(β/α)) - target; derivative α/β
    let resid = alpha * (1.0 + ln(beta / alpha)) - target_mean;
    beta -= resid * beta / alpha;
    Ok(beta.clamp(alpha, cap.max(alpha)))
}

/// Upper end of the truncated Pareto whose pure-bundling profit is `pi` and
/// whose mean is `mu_bar`.
pub fn tau_for_profit(pi: f64, mu_bar: f64, cap: f64) -> Result<f64> {
    beta_of_alpha(pi, mu_bar, cap)
}

/// Outcome of the search for the smallest feasible lower end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaStar {
    pub alpha: f64,
    pub pareto: TruncatedPareto,
    /// Smallest integrated-CDF gap between the prior and `H_{α*}` inside
    /// `(α*, β)`.
    pub residual_gap: f64,
    /// Where that smallest gap is attained.
    pub touch_point: f64,
}

/// Absolute slack allowed on the integrated-CDF dominance during the search.
pub fn gap_tolerance(f_bar: &Dist1D) -> f64 {
    1e-12 * f_bar.scale()
}

/// Smallest `α` such that `f_bar` is a mean-preserving spread of
/// `H_{α, β(α)}` with `β(α) ≤ hi`.
///
/// Feasibility is monotone in `α`, so bisection applies; the returned value
/// is the feasible end of the final bracket, within `tol * (hi - lo)` of the
/// infimum.
pub fn alpha_star(f_bar: &Dist1D, tol: f64) -> Result<AlphaStar> {
    let (lo, hi) = (f_bar.lo(), f_bar.hi());
    let mu = f_bar.mean();
    if !(mu > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "grand-bundle mean must be positive, got {mu}"
        )));
    }
    if f_bar.atom_mass(mu) >= 1.0 - 1e-15 {
        // only the uninformative signal is inducible
        let h = TruncatedPareto::new(mu, mu)?;
        return Ok(AlphaStar { alpha: mu, pareto: h, residual_gap: 0.0, touch_point: mu });
    }
    let gap_tol = gap_tolerance(f_bar);
    let feasible = |a: f64| -> Option<(TruncatedPareto, f64, f64)> {
        let beta = beta_of_alpha(a, mu, hi).ok()?;
        let h = TruncatedPareto::new(a, beta).ok()?;
        let hd = h.to_dist(lo, hi).ok()?;
        let g = min_integrated_gap(f_bar, &hd, lo, hi);
        (g.gap >= -gap_tol).then_some((h, g.gap, g.at))
    };

    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let mut a_hi = mu.min(hi);
    let mut best = feasible(a_hi).ok_or_else(|| {
        Error::Infeasible("degenerate signal at the mean is not inducible".into())
    })?;
    let a_floor = lo.max(0.0);
    if a_floor > 0.0 {
        if let Some(b) = feasible(a_floor) {
            return finish(f_bar, a_floor, b.0);
        }
    }
    let mut a_lo = a_floor;
    let step = tol.max(1e-15) * span;
    while a_hi - a_lo > step {
        let mid = 0.5 * (a_lo + a_hi);
        match feasible(mid) {
            Some(b) => {
                a_hi = mid;
                best = b;
            }
            None => a_lo = mid,
        }
    }
    finish(f_bar, a_hi, best.0)
}

fn finish(f_bar: &Dist1D, alpha: f64, h: TruncatedPareto) -> Result<AlphaStar> {
    let hd = h.to_dist(f_bar.lo(), f_bar.hi())?;
    let (from, to) = (h.alpha(), h.beta());
    let g = if to > from {
        min_integrated_gap(f_bar, &hd, from, to)
    } else {
        min_integrated_gap(f_bar, &hd, f_bar.lo(), f_bar.hi())
    };
    Ok(AlphaStar { alpha, pareto: h, residual_gap: g.gap, touch_point: g.at })
}
