//! Community detection by successive spectral relaxation of modularity.
//!
//! A graph is divided by repeated bisection. Each bisection starts from the
//! leading eigenvector of the (generalized) modularity matrix and rounds it
//! to ±1 a fraction at a time, re-optimizing the still-undecided entries
//! with a constrained power method between rounds.
//!
//! ```no_run
//! use modsplit::{detect, load_gml, Method, SsrConfig};
//!
//! let graph = load_gml("karate.gml", false)?;
//! let report = detect(&graph, &SsrConfig::default(), Method::Ssr)?;
//! println!("Q={:.6} communities={}", report.q(), report.partition.community_count());
//! # Ok::<(), modsplit::Error>(())
//! ```

mod error;
pub mod graph;
pub mod nmi;
pub mod operator;
mod par;
pub mod partition;
pub mod spectral;
pub mod ssr;
pub mod synth;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use graph::{load_edge_list, load_gml, parse_edge_list, parse_gml, Graph, VertexSubset};
pub use nmi::{contingency, nmi, ContingencyTable};
pub use operator::{modularity, LinearOperator, Mode, ModularityOperator, PartitionScore, Shifted, WorkCounter};
pub use partition::{detect, method_conventional_bisect, AcceptedSplit, DetectReport, Method, Partition};
pub use spectral::{leading_eigenvector, power_iterate, power_iterate_with, sign_round, EigenEstimate, PowerConfig};
pub use ssr::{
    cpm_solve, cpm_step, partial_round, pd_shift, residual_objective, ssr_bipartition, CouplingVector, CpmOutcome,
    RoundingState, SsrConfig, SsrOutcome,
};
pub use synth::{generate, PlantedConfig, PlantedGraph};
