//! Dense feed-forward approximators with exact analytic gradients.

mod adam;
mod net;
mod serialize;
mod squashed;

pub use adam::Adam;
pub use net::{Activation, DenseNet, Tape};
pub use serialize::{read_net, write_net, NetManifest};
pub(crate) use serialize::{checksum, f64_blob, parse_f64_blob};
pub use squashed::{gaussian_kl, gaussian_kl_grads, SquashedGaussianHead, SquashedSample, LOG_STD_MAX, LOG_STD_MIN, TANH_EPS};
