//! The computational substrate: exact rationals, graded vector spaces,
//! Koszul signs, classical set partitions, graded-symmetric multilinear
//! maps, truncated supercommutative power series, exact linear algebra,
//! and univariate polynomials over ℚ.

pub mod grading;
pub mod linalg;
pub mod multimap;
pub mod partition;
pub mod poly;
pub mod rational;
pub mod series;

pub use grading::{Element, GradedBasis};
pub use multimap::{MultiMap, PolyElement, PolyMultiMap, TensorMap};
pub use partition::{
    enumerate_partitions, eps_pi_i, hooked_partitions, koszul_sign, partition_sign, subset_sign,
    Partition, DEFAULT_PARTITION_CAP,
};
pub use poly::{Poly, RatFun};
pub use rational::{format_rat, parse_rat, rat, Rat};
pub use series::{SeriesVector, SuperSeries};
