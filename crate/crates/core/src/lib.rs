//! Exact computations with line-parallelisms of PG(3,q) assembled from one
//! Desarguesian spread and q²+q Hall spreads.
//!
//! The geometry is modelled inside PG(3,q²): the Baer subgeometry Σ_η is
//! the fixed-point set of a semilinear involution τ_η, and every line of
//! Σ_η is stored as its unique τ_η-stable extension.

pub mod equivalence;
pub mod field_tower;
pub mod formats;
pub mod goodsets;
pub mod parallelisms;
pub mod proj_geometry;
pub mod spreads;
pub mod suites;

pub use field_tower::{Fe, Field, FieldError, FieldSpec, LambdaSystem, NormPartition};
