//! JSON and TOML file formats: distribution literals, model files,
//! discrete signals and mechanisms.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use screenlab_core::{
    Bundle, BundleValueModel, DiscreteJoint, DiscretePrior, DiscreteSignal, Dist1D, Mechanism, Menu, MenuItem, PriorSpec,
    RandomPureBundling, Shape, TruncatedPareto,
};

use crate::error::{AppError, AppResult};

/// Points at which the random-price CDF is tabulated in mechanism JSON.
pub const PRICE_CDF_POINTS: usize = 1024;

/// Cells used when a grid distribution is written out.
pub const EXPORT_CELLS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistLiteral {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Degenerate {
        at: f64,
    },
    ParetoTrunc {
        alpha: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    /// Right-continuous CDF at equally spaced nodes over `[lo, hi]`,
    /// including the atom masses.
    Grid {
        lo: f64,
        hi: f64,
        cdf: Vec<f64>,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
}

impl DistLiteral {
    pub fn build(&self) -> AppResult<Dist1D> {
        let d = match self {
            DistLiteral::Uniform { lo, hi } => Dist1D::uniform(*lo, *hi),
            DistLiteral::Degenerate { at } => Dist1D::degenerate(*at),
            DistLiteral::ParetoTrunc { alpha, beta, lo, hi } => TruncatedPareto::new(*alpha, *beta)
                .and_then(|h| h.to_dist(lo.unwrap_or(*alpha), hi.unwrap_or(*beta))),
            DistLiteral::Grid { lo, hi, cdf, atoms } => Dist1D::from_cdf_grid(*lo, *hi, cdf, atoms),
            DistLiteral::Discrete { atoms } => Dist1D::discrete(atoms),
        };
        d.map_err(|e| AppError::Config(format!("bad distribution literal: {e}")))
    }

    /// Literal for `d`; closed-form families are written exactly, grids are
    /// resampled on [`EXPORT_CELLS`] cells.
    pub fn from_dist(d: &Dist1D) -> Self {
        match d.shape() {
            Shape::Degenerate(at) => DistLiteral::Degenerate { at },
            Shape::Uniform(lo, hi) => DistLiteral::Uniform { lo, hi },
            Shape::Pareto(h) => DistLiteral::ParetoTrunc {
                alpha: h.alpha(),
                beta: h.beta(),
                lo: Some(d.lo()),
                hi: Some(d.hi()),
            },
            Shape::Discrete => DistLiteral::Discrete { atoms: d.atoms() },
            Shape::Grid => {
                let g = d.to_grid(EXPORT_CELLS);
                DistLiteral::Grid { lo: g.lo(), hi: g.hi(), cdf: g.cdf_values(), atoms: g.atoms() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorBlock {
    Iid {
        marginal: DistLiteral,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cells: Option<usize>,
    },
    Explicit {
        grand_bundle: DistLiteral,
    },
    Discrete {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
}

/// Model file: dimension, type box, `kappa` overrides keyed by bundle
/// bitmask (decimal or `0b…`), and the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    #[serde(default)]
    pub kappa: BTreeMap<String, f64>,
    pub prior: PriorBlock,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub model: BundleValueModel,
    pub prior: PriorSpec,
}

pub fn parse_bundle(key: &str, n: usize) -> AppResult<Bundle> {
    let k = key.trim();
    let parsed = if let Some(bits) = k.strip_prefix("0b") {
        Bundle::from_str_radix(bits, 2)
    } else {
        k.parse::<Bundle>()
    };
    let b = parsed.map_err(|_| AppError::Config(format!("kappa key {key:?} is not a bundle bitmask")))?;
    if b == 0 || (n < 32 && b >> n != 0) {
        return Err(AppError::Config(format!("kappa key {key:?} is not a nonempty bundle of {n} goods")));
    }
    Ok(b)
}

/// Model-building failures are configuration errors whatever their kind.
fn cfg(e: screenlab_core::Error) -> AppError {
    use screenlab_core::Error as E;
    match e {
        E::Domain(m) | E::Model(m) | E::Infeasible(m) => AppError::Config(m),
        E::Dimension { expected, got } => AppError::Config(format!("dimension mismatch: expected {expected}, got {got}")),
        other => other.into(),
    }
}

impl ModelFile {
    pub fn build(&self) -> AppResult<Instance> {
        let mut model = BundleValueModel::new(self.n, self.theta_lo, self.theta_hi).map_err(cfg)?;
        for (k, &v) in &self.kappa {
            model = model.with_kappa(parse_bundle(k, self.n)?, v).map_err(cfg)?;
        }
        model.validate()?;
        let prior = match &self.prior {
            PriorBlock::Iid { marginal, cells } => {
                let m = marginal.build()?;
                let eps = 1e-12 * self.theta_hi.abs().max(1.0);
                if m.lo() < self.theta_lo - eps || m.hi() > self.theta_hi + eps {
                    return Err(AppError::Config(format!(
                        "marginal support [{}, {}] leaves the type box [{}, {}]",
                        m.lo(),
                        m.hi(),
                        self.theta_lo,
                        self.theta_hi
                    )));
                }
                let m = m.with_support(self.theta_lo, self.theta_hi).map_err(cfg)?;
                match cells {
                    Some(c) => PriorSpec::iid_with(m, self.n, *c),
                    None => PriorSpec::iid(m, self.n),
                }
            }
            PriorBlock::Explicit { grand_bundle } => {
                let d = grand_bundle.build()?;
                let n = self.n as f64;
                let d = d.with_support(n * self.theta_lo, n * self.theta_hi).map_err(|e| {
                    AppError::Config(format!("grand-bundle distribution leaves [n θℓ, n θh]: {e}"))
                })?;
                PriorSpec::explicit(d, self.n).map_err(cfg)?
            }
            PriorBlock::Discrete { points, probs } => {
                let joint = DiscreteJoint::new(points.clone(), probs.clone()).map_err(cfg)?;
                PriorSpec::discrete(joint, self.theta_lo, self.theta_hi).map_err(cfg)?
            }
        };
        if prior.n() != self.n {
            return Err(AppError::Config(format!("prior has dimension {}, model has {}", prior.n(), self.n)));
        }
        Ok(Instance { model, prior })
    }
}

/// Parses TOML, falling back to JSON.
pub fn parse_toml_or_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> AppResult<T> {
    match toml::from_str(text) {
        Ok(v) => Ok(v),
        Err(te) => serde_json::from_str(text)
            .map_err(|je| AppError::Config(format!("{what} is neither valid TOML ({te}) nor JSON ({je})"))),
    }
}

pub fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> AppResult<ModelFile> {
    parse_toml_or_json(&read_text(path)?, &format!("model file {}", path.display()))
}

/// Discrete signal: realizations, type grid, prior masses and the joint
/// table `joint[realization][type]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFile {
    pub n: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub signal_grid: Vec<Vec<f64>>,
    pub type_grid: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
    pub joint: Vec<Vec<f64>>,
}

impl SignalFile {
    pub fn from_signal(s: &DiscreteSignal) -> Self {
        Self {
            n: s.n(),
            theta_lo: s.theta_lo(),
            theta_hi: s.theta_hi(),
            signal_grid: s.signal_grid().to_vec(),
            type_grid: s.type_grid().to_vec(),
            prior: s.prior().to_vec(),
            joint: s.joint().to_vec(),
        }
    }

    pub fn build(&self) -> AppResult<DiscreteSignal> {
        let s = DiscreteSignal::new(
            self.theta_lo,
            self.theta_hi,
            self.signal_grid.clone(),
            self.type_grid.clone(),
            self.prior.clone(),
            self.joint.clone(),
        )
        .map_err(cfg)?;
        if s.n() != self.n {
            return Err(AppError::Config(format!("signal grids have dimension {}, file says {}", s.n(), self.n)));
        }
        Ok(s)
    }
}

pub fn load_signal(path: &Path) -> AppResult<DiscreteSignal> {
    let text = read_text(path)?;
    let f: SignalFile = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("signal file {}: {e}", path.display())))?;
    f.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuItemJson {
    /// `(bundle bitmask, probability)` pairs.
    pub lottery: Vec<(Bundle, f64)>,
    pub transfer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismJson {
    PureBundling {
        price: f64,
    },
    SeparateSales {
        prices: Vec<f64>,
    },
    RandomPureBundling {
        pi_star: f64,
        s_star: f64,
        /// `(price, P(price))` on [`PRICE_CDF_POINTS`] points of `[π*, s̄*]`.
        #[serde(default)]
        price_cdf: Vec<(f64, f64)>,
    },
    Menu {
        items: Vec<MenuItemJson>,
    },
}

impl MechanismJson {
    pub fn from_mechanism(m: &Mechanism) -> Self {
        match m {
            Mechanism::PureBundling { price } => MechanismJson::PureBundling { price: *price },
            Mechanism::SeparateSales { prices } => MechanismJson::SeparateSales { prices: prices.clone() },
            Mechanism::RandomPureBundling(r) => MechanismJson::RandomPureBundling {
                pi_star: r.pi_star(),
                s_star: r.s_star(),
                price_cdf: r.price_cdf_samples(PRICE_CDF_POINTS),
            },
            Mechanism::Menu(menu) => MechanismJson::Menu {
                items: menu
                    .items()
                    .iter()
                    .map(|it| MenuItemJson { lottery: it.lottery.clone(), transfer: it.transfer })
                    .collect(),
            },
        }
    }

    pub fn build(&self) -> AppResult<Mechanism> {
        Ok(match self {
            MechanismJson::PureBundling { price } => Mechanism::PureBundling { price: *price },
            MechanismJson::SeparateSales { prices } => Mechanism::SeparateSales { prices: prices.clone() },
            MechanismJson::RandomPureBundling { pi_star, s_star, .. } => {
                Mechanism::RandomPureBundling(RandomPureBundling::new(*pi_star, *s_star).map_err(cfg)?)
            }
            MechanismJson::Menu { items } => Mechanism::Menu(Menu::new(
                items.iter().map(|i| MenuItem { lottery: i.lottery.clone(), transfer: i.transfer }).collect(),
            )
            .map_err(cfg)?),
        })
    }
}

/// A finite distribution of estimates, e.g. the signal witnessing a
/// min-max value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesFile {
    pub n: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub types: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl EstimatesFile {
    pub fn from_prior(p: &DiscretePrior) -> Self {
        Self { n: p.n, theta_lo: p.theta_lo, theta_hi: p.theta_hi, types: p.types.clone(), probs: p.probs.clone() }
    }

    pub fn to_prior(&self) -> DiscretePrior {
        DiscretePrior {
            n: self.n,
            theta_lo: self.theta_lo,
            theta_hi: self.theta_hi,
            types: self.types.clone(),
            probs: self.probs.clone(),
        }
    }
}
