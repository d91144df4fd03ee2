//! Numerical laboratory for a generalized additive-quadratic functional
//! equation on ternary Banach algebras.
//!
//! The crate evaluates the equation's residual operator on concrete algebras,
//! extracts exact additive/quadratic mappings from perturbed ones through the
//! dyadic contraction `2^j f(x/2^n)`, and certifies the resulting pointwise
//! stability bounds alongside recovered homomorphism and derivation structure.
//! Everything is seeded and deterministic: identical inputs produce identical
//! reports, byte for byte.

pub mod algebra;
pub mod error;
pub mod fixedpoint;
pub mod funceq;
pub mod grid;
pub mod report;
pub mod stability;

pub use algebra::{check_algebra_axioms, AlgebraInstance, AxiomReport, Element, Scalar};
pub use error::{Error, Result};
pub use fixedpoint::{
    contraction_constant_estimate, diaz_margolis_iterate, direct_method_point,
    generalized_distance, halving_operator, stability_bound, ContractionEstimate,
    ControlFamily, ControlFunction, ControlRole, ConvergenceCertificate, ExtendedReal,
    ExtractedMapping,
};
pub use funceq::{
    hom_residual, homder_residual, j_mapping_defect, residual, residual_sup,
    verify_specialization, CatalogTerm, DefectReport, DirectionRule, FunctionHandle, JIndex,
    Parity, PointMap, RhoParameter, SpecializationIdentity,
};
pub use grid::SampleGrid;
pub use stability::{
    corollary_bound, make_perturbed_mapping, run_theorem_2_5, run_theorem_2_6, BoundCheck,
    CorollaryBound, ExperimentSpec, StabilityReport, Tolerances, Verdict,
};
