//! Bayesian evidence computation and model selection for undirected
//! random graphs.
//!
//! Three candidate models are supported: a single shared edge probability
//! (ER), one free probability per vertex pair (IE), and a rank-1 K-block
//! stochastic blockmodel whose blocks carry latent positions in (0, 1).
//! Evidence is exact (beta integrals) for ER and IE, and either exact
//! quadrature, a complete-graph closed form, or a Laplace approximation
//! around the posterior mode for the blockmodel. Under the matched prior
//! set (flat for ER, Beta(1/n, 1/n) per pair for IE, Beta(2, 1) per block
//! for the SBM) the three evidences are directly comparable, and
//! [`selection::select_model`] picks the largest.
//!
//! Supporting machinery includes a general conjugate exponential-family
//! layer ([`expfam`]) with flexibility/Occam-penalty diagnostics, graph
//! samplers for all three models ([`sample`]), spectral membership
//! estimation ([`membership`]), adaptive Gauss-Legendre quadrature in log
//! space ([`quadrature`]), and edge-list/CSV readers ([`io`]).

pub mod er_ie;
pub mod error;
pub mod expfam;
pub mod graph;
pub mod io;
pub mod membership;
pub mod quadrature;
pub mod sample;
pub mod sbm;
pub mod selection;
pub mod special;

pub use er_ie::{BetaParams, EdgeSummary};
pub use error::{Error, Result};
pub use graph::{BlockAssignment, BlockStats, Graph};
pub use sbm::{LaplaceResult, MapOptions, SbmPrior};
pub use selection::{EvidenceReport, MembershipSpec, ModelOutcome, ModelSpec, Selection};
