//! Desk-scale recommendation simulator.
//!
//! The state is factored into one slot per item category (last item shown in
//! that category, its feedback and how many steps ago), the user's
//! demographic vector and a noisy observation of their current interest. A
//! recommendation touches exactly one slot, which gives every transition a
//! known local causal structure.

mod catalog;
mod config;
mod env;
mod state;
mod toy;
mod trace;

pub use catalog::{Item, ItemCatalog};
pub use config::{EnvConfig, InterestMode};
pub use env::{Mechanism, RecEnv, StepInfo, StepOutcome, UserProfile};
pub use state::{FactoredState, Slot};
pub use toy::{make_toy_mdp, DiscreteMdp, ToyMdpConfig};
pub use trace::{write_trace_csv, TraceRow};

pub(crate) fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
