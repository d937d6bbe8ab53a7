//! Iterated differential forms over coordinate (super)algebras and the
//! Levi-Civita-like connection of an arbitrary covariant 2-tensor.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: exact symbolic scalars, differentiation, evaluation and seeded
//!   randomized identity testing.
//! * [`forms`]: the multigraded algebra of iterated forms with Koszul signs,
//!   differentials, the involution `kappa`, insertions and form-valued
//!   derivations.
//! * [`connection`]: split `tau = g + omega`, Christoffel data along two
//!   independent routes, torsion, curvature and covariant-derivative towers.
//! * [`geodesics`], [`relativity`], [`supergeometry`]: applications.
//! * [`cli`]: model files, built-in models and the command-line driver.
//! * [`selftest`]: the acceptance battery, shared by the CLI and the test suite.

pub mod cli;
pub mod connection;
pub mod expr;
pub mod forms;
pub mod geodesics;
pub mod relativity;
pub mod selftest;
pub mod supergeometry;

pub use connection::{Chart, Connection, Curvature, TensorField2};
pub use expr::{eq_randomized, SamplingDomain, ScalarExpr};
pub use forms::{FormContext, IteratedForm, MultiDegree};
