//! Physical model of the pulsed resonance-fluorescence source.

mod excitation;
mod ou;
mod params;
mod stream;

pub use excitation::{lifetime_draws, lifetime_histogram, lifetime_mean, rabi_rate, LIFETIME_BIN};
pub use ou::{detuning_variance, ou_step, OuState};
pub use params::{EmitterParams, DEFAULT_T1, DEFAULT_T2_HOM, KEYS};
pub use stream::{
    apply_losses, generate_stream, generate_stream_with_workers, Multiplicity, PhotonChunks, PhotonRecord,
    PhotonSource, StreamSlice, CHUNK_PULSES, JITTER_CLIP,
};
