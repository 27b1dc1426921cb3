//! Qubit decoherence, open-loop propagation and tracking control of coherence.
//!
//! States live in the coherence-vector picture `ρ = ½(I + v·σ)`; channels are
//! given by a GKS matrix or directly as the affine Bloch generator
//! `dv/dt = (M₀ + M(t)) v + k`. The tracking controller holds the in-plane
//! components fixed until the synthesized fields diverge.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod integrate;
pub mod random;
pub mod sweep;
pub mod tracking;
pub mod trajectory;
pub mod waveform;

pub use bloch::{
    bloch_to_density, control_matrix, density_to_bloch, gks_to_channel, BlochChannel,
    ChannelParams, CoherenceVector, DensityMatrix, GksMatrix,
};
pub use error::{Error, Result};
pub use integrate::{IntegratorConfig, Method, TimeGrid};
pub use tracking::{Omega0, SingularityClass, SingularityReport, TrackingSolution};
pub use trajectory::{Sample, Termination, Trajectory};
pub use waveform::ControlWaveform;
