//! Certified lower bounds for scalar optimal control problems whose control
//! `u = dx/dt` may be unbounded.
//!
//! The pipeline compactifies the control direction with `u = z / w` on the
//! slice `z^s + w^s = 1, w >= 0`, writes the problem as a linear program on
//! occupation measures with polynomial data ([`homogenize`]), and solves its
//! moment relaxations of increasing order ([`relaxation`], [`sdp`]).
//! [`oracle`] supplies independent upper bounds from explicit trajectories.

// Links the system OpenBLAS/LAPACK used by the SDP backend.
extern crate openblas_src;

pub mod homogenize;
pub mod measure_lp;
pub mod oracle;
pub mod pipeline;
pub mod poly;
pub mod problem;
pub mod relaxation;
pub mod sdp;

pub use homogenize::{build_polynomial_lp, build_polynomial_lp_split, map_control, unmap_control, ExtendedReal};
pub use measure_lp::{LinearFunctionalRow, MeasureLp, Relation, SupportSet};
pub use pipeline::{format_report, run, OrderSpec, ReportFormat, RunConfig, RunReport};
pub use poly::{Monomial, Polynomial, Var};
pub use problem::{lavrentiev_modified, ControlSign, OcpProblem, ProblemSpec};
pub use relaxation::{assemble_sdp, min_order, MomentRelaxation, SolveReport};
pub use sdp::{SdpStandardForm, SolveStatus, SolverSettings};
