//! Evaluation harness: estimator convergence, ranking agreement with human
//! annotations (MAP@K with partial-reference bounds), ranking baselines, and
//! entropy-stratified state sampling.

pub mod annotation;
pub mod convergence;
pub mod ranking;
pub mod report;
pub mod strata;

pub use annotation::{read_annotations, write_annotations, AnnotationRecord};
pub use convergence::{cosine_similarity, mean_pairwise_cosine, sbue_convergence, sica_convergence, ConvergenceReport};
pub use ranking::{
    average_precision_at_k, baseline_ranking, expected_random_ap, map_bounds, mean_average_precision, ApScore,
    BaselineMode, MapScore,
};
pub use strata::{entropy_bands, strength_entropy, EntropyBands};
