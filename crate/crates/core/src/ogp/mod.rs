//! Overlap-gap machinery: correlation sets, interpolation paths, S-set scans, overlap graphs,
//! first-moment exponents, covariance identities, Gaussian tails and parameter feasibility.

pub mod correlation;
pub mod covariance;
pub mod exponents;
pub mod feasibility;
pub mod gaussian;
pub mod graph;
pub mod scan;

pub use correlation::{build_tau_sequence, interpolated_instance, AuditReport, CorrelationSet, InterpolationPath};
pub use covariance::covariance_pair;
pub use exponents::{
    binary_entropy, brute_cardinality, cardinality_bound, entropy_bound_check, psi_chaos_kspin, psi_chaos_pk,
    psi_mqogp_pk, CardinalityBound, ExponentParams,
};
pub use feasibility::{corollary_chain, feasibility_theorem2, ChainInput, ChainReport, ChainVariant, FeasibilityReport};
pub use gaussian::{equicorr_algebra, gaussian_min_tail, EquicorrAlgebra, TailReport};
pub use graph::{find_monochromatic_clique, is_m_admissible, overlap_graph, OverlapGraph};
pub use scan::{s_set_scan, EStar, ScanConfig, ScanResult};
