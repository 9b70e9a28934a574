//! Exact computation of GLSM and toric I-functions.

pub mod error;
pub mod git;
pub mod io;
pub mod lattice;
pub mod lp;
pub mod model;
pub mod poly;
pub mod ring;
pub mod scalar;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use git::{
    cone_contains, effective_degrees, inertia_sectors, iota, sector_of_degree, semistable_supports, sr_generators,
    Degree, SectorLabel, SupportSet,
};
pub use model::{
    invariants_trivial, j_membership, no_strict_semistable, parse_model, potential_check, validate_model, GlsmModel,
    PotentialPolynomial, ValidationReport,
};
pub use scalar::{ExactScalar, Rational};
pub use io::{parse_series, render_latex, render_text, series_from_json, series_to_json, series_to_string, Cache, JobKey};
pub use ring::{build_ring, class_from_character, divides_ideal, CohClass, SectorRing};
pub use series::{
    big_I, big_I_with, compact_type_report, exp_factor, glsm_I, glsm_I_with, hyper_factor, hypothesis_check,
    series_compare, twist_novikov, z_partial, CompactTypeReport, Engine, EngineOptions, GradedSeries, InsertionSet,
    LaurentZ, Mode, SeriesDiff, SeriesMap, SeriesState, ZMethod,
};
pub use special::{
    ci_build, ci_compare, ci_wang_rhs, fjrw_build, fjrw_I_direct, hybrid_build, hybrid_I_direct, parse_specialization,
    CiReport, CiSpec, CyclicFactor, FjrwSpec, HybridSpec, Specialization,
};
