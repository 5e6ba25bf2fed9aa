//! High-order (mean, variance, skewness, kurtosis) portfolio optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`moments`] estimates the co-moment tensors of a return sample and
//!   evaluates portfolio moments together with their gradients and Hessians.
//! * [`bounds`] provides the curvature constants used by the majorizing
//!   surrogates and the nearest positive semidefinite projection.
//! * [`subsolvers`] contains the dense convex solvers (QP, LP, QCQP) that the
//!   outer loops call once or twice per iteration.
//! * [`sca`] implements the five outer algorithms: DC, MM and Q-MVSK for the
//!   MVSK problem, and L-MVSKT and Q-MVSKT for MVSK tilting.
//! * [`synthetic`] generates skewed, heavy-tailed return panels for tests and
//!   benchmarks.
//!
//! ```no_run
//! use mvsk_core::moments::{estimate_moments, crra_lambdas};
//! use mvsk_core::sca::{solve_mvsk_q, MvskOptions};
//! use mvsk_core::synthetic::{generate_returns, SyntheticSpec};
//! use mvsk_core::FeasibleSet;
//!
//! let returns = generate_returns(&SyntheticSpec::new(10, 42)).unwrap();
//! let moments = estimate_moments(&returns).unwrap();
//! let spec = crra_lambdas(10.0).unwrap();
//! let report = solve_mvsk_q(&moments, &spec, &FeasibleSet::long_only(), &MvskOptions::default()).unwrap();
//! println!("{:?}", report.termination);
//! ```

pub mod bounds;
pub mod error;
pub mod moments;
pub mod sca;
pub mod subsolvers;
pub mod synthetic;

pub use error::{Error, Result};
pub use moments::{FeasibleSet, MomentSet, MvskSpec, ReturnsMatrix, Weights};
pub use sca::{SolveReport, Termination, TiltingSpec};
