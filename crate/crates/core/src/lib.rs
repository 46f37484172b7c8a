//! Revenue of optimal one- and two-item mechanisms for a single additive buyer
//! with independent discrete values, and checks of how far separate sale can
//! fall short of the two-item optimum.

pub mod bounds;
pub mod distribution;
pub mod error;
pub mod harness;
pub mod lp;
pub mod mechanism;
pub mod myerson;

pub use bounds::{analyze, guarantee_factor, BoundReport};
pub use distribution::{expected_min, DiscreteDistribution};
pub use error::{Error, Result};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use mechanism::{optimal_revenue, separate_sale_revenue, Mechanism, ProductInstance};
pub use myerson::{optimal_price, MyersonResult};
