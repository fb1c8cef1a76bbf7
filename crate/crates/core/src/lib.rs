//! Revenue-maximizing signaling for second-price auctions with uncertain goods.
//!
//! A seller knows which of `m` goods is for sale, drawn from a public prior,
//! and commits to a signaling scheme that reveals partial information to `n`
//! bidders before a second-price auction. This crate evaluates schemes,
//! computes optimal ones for known and Bayesian valuations, and ships the
//! worked examples and the MAX-CUT hardness gadget as generators.
//!
//! ```
//! use sigauction::gadgets::gen_gap;
//! use sigauction::solver_known::solve_optimal;
//!
//! let inst = gen_gap(2).unwrap();
//! let sol = solve_optimal(&inst).unwrap();
//! assert!((sol.report.revenue - 2.0 / 3.0).abs() < 1e-9);
//! ```

pub mod error;
pub mod gadgets;
pub mod io;
pub mod lp;
pub mod model;
pub mod simulate;
pub mod solver_bayes;
pub mod solver_known;

pub use error::{Error, Result};
pub use model::{
    revenue, welfare, BayesInstance, Instance, KnownInstance, LabelTuple, SchemeReport, SignalingScheme, Solution,
    Valuations,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/known.md")]
    mod known {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/bayes.md")]
    mod bayes {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/maxcut.md")]
    mod maxcut {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
