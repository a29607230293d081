//! Exact one-step empowerment on discrete MDPs and a rank check of the
//! agent's learned intrinsic signal against it.

mod blahut;
mod estimator;
mod rank;

pub use blahut::{blahut_arimoto, exact_empowerment_map, Channel, EmpowermentResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use estimator::{estimator_correlation, write_validation_csv, CorrelationReport, MdpEnv, StateRow};
pub use rank::{average_ranks, spearman};
