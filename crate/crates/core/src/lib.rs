//! Buyer-optimal information and informationally robust bundling for a
//! multi-good monopolist.
//!
//! The crate works in `no_std` environments with `alloc`. Everything that
//! touches files, the terminal or threads lives in the `screenlab` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dist;
pub mod error;
pub mod math;
pub mod mechanisms;
pub mod pareto;
pub mod screening;
pub mod signals;
pub mod simplex;
pub mod value_model;

pub use dist::{is_mps, min_integrated_gap, Dist1D, GapMin, Shape};
pub use error::{Error, Result};
pub use mechanisms::{
    best_response, build_robust_mechanism, evaluate, pb_best_price, pb_profit, rpb_guarantee,
    rpb_profit, solve_s_star, Mechanism, Menu, MenuItem, OutcomeReport, RandomPureBundling, SStar,
    SignalRef, TieBreak,
};
pub use pareto::{alpha_star, beta_of_alpha, tau_for_profit, tpd_mean, AlphaStar, TruncatedPareto};
pub use screening::{
    minmax_estimate, optimal_mechanism, LpOptions, LpSolution, MinmaxReport,
};
pub use signals::{
    make_perfectly_correlated, sample_garbling, DiscreteSignal, PerfectlyCorrelatedSignal,
};
pub use value_model::{
    bundle_size, free_disposal_bound, validate_free_disposal, Bundle, BundleValueModel,
    DiscreteJoint, DiscretePrior, PriorKind, PriorSpec,
};
