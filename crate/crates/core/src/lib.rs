//! Exact-arithmetic engine for homotopy probability theory.
//!
//! Everything is computed symbolically over the rationals: correlation
//! algebras and their derived product families, homotopy probability
//! spaces with moment/cumulant morphisms, descendant sL∞-structures and
//! morphisms, polynomial homotopy flows, homotopy transfer to cohomology,
//! Koszul-complex realizations of classical probability spaces with
//! infinitesimal symmetries, and the flat-connection geometry of
//! finite-dimensional spaces.
//!
//! The crate is organized in layers:
//!
//! - [`kernel`]: rationals, graded bases, Koszul signs, set partitions,
//!   graded-symmetric multilinear maps, truncated supercommutative power
//!   series, exact linear algebra, and τ-polynomials.
//! - [`corralg`]: correlation algebras `(V, M)` and the derived family `m`.
//! - [`cumulants`]: moment/cumulant morphisms, generating series,
//!   independence, and the central-limit scaling law.
//! - [`slinfty`]: unital sL∞-algebras and morphisms, homotopy flows,
//!   Maurer–Cartan checks, and minimal models on cohomology.
//! - [`descend`]: the descendant functor from probability algebras to
//!   sL∞-algebras and from pointed cochain maps to sL∞-morphisms.
//! - [`realize`]: Koszul realizations of classical spaces with
//!   infinitesimal symmetries, coinvariant reduction, and mechanical
//!   derivation of moment-generating-function ODEs.
//! - [`randomvar`]: spaces of homotopical random variables, their laws,
//!   complete integrability, and complete spaces.
//! - [`flatgeo`]: connection tensors, flat coordinates, and the MGF PDE
//!   system of finite-dimensional spaces.
//! - [`schema`]: the JSON structure-constant interchange format.
//! - [`testgen`]: seeded random instance generators used by the property
//!   and acceptance suites.

pub mod kernel;

pub mod corralg;
pub mod cumulants;
pub mod descend;
pub mod flatgeo;
pub mod randomvar;
pub mod realize;
pub mod slinfty;

pub mod schema;
pub mod testgen;

mod error;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
