//! Tracking triadic cardinality distributions of social activity streams.
//!
//! Each time window of a stream is Bernoulli-sampled in one pass. The
//! per-node counts of sampled triangles are summarised in a histogram, and
//! an EM estimator under a Beta-binomial observation model recovers the
//! distribution of true triangle counts. Windows whose estimate diverges
//! from a base distribution are flagged as bursts.
//!
//! ```
//! use triadic::prelude::*;
//!
//! // Three users close one triangle; sampled at p = 1 nothing is lost.
//! let stream = [
//!     Activity::user(1, 2, 0).unwrap(),
//!     Activity::user(2, 3, 1).unwrap(),
//!     Activity::user(3, 1, 2).unwrap(),
//! ];
//! let window = TimeWindow::nth(0, 10, 0).unwrap();
//! let sampler = SamplerConfig::new(1.0, 1.0, 7, Mode::UserUser).unwrap();
//! let graph = sample_window(&stream, &window, &sampler, None).unwrap();
//! let h = calibrate_g0(&compute_histogram(&graph), 4).unwrap();
//! let fit = em_known_n(&h, &BetaBinParams::new(1.0, 0.0).unwrap(), &EmConfig::default().with_w(5)).unwrap();
//! assert!((fit.theta.prob(1) - 0.75).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod betabin;
pub mod burst;
pub mod em;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result};

/// The types and entry points most programs need.
pub mod prelude {
    pub use crate::betabin::BetaBinParams;
    pub use crate::burst::{build_base, kl_divergence, score_window, BurstScore, Threshold};
    pub use crate::em::{em_known_n, em_unknown_n, EmConfig, KnownSizeFit, UnknownSizeFit};
    pub use crate::error::{Error, Result};
    pub use crate::model::{
        Activity, Mode, SocialGraph, SupportFloor, TimeWindow, TriadicDistribution, TriadicHistogram, DEFAULT_W,
    };
    pub use crate::pipeline::{run_activities, PipelineConfig};
    pub use crate::sampler::{calibrate_g0, compute_histogram, sample_window, SamplerConfig};
}
