//! Simulation of a disorder-free spin-1 chain under a ternary Floquet drive.
//!
//! - [`ops`]: Gell-Mann, spin-1, rotation, kick, coupling and MS operators
//! - [`engine`]: exact statevector evolution
//! - [`observables`]: magnetization, correlations, overlap, entropy, QFI, DFT
//! - [`mps`]: finite TEBD and two-site-cell iTEBD
//! - [`compiler`]: spin-spin couplings from native qudit gates
//! - [`phase`]: parameter sweeps, lifetime fits, dip finding, `n_t` predictor

pub mod compiler;
pub mod engine;
pub mod kernels;
pub mod linalg;
pub mod mps;
pub mod observables;
pub mod ops;
pub mod phase;
pub mod state;

pub use engine::{evolve, floquet_step, EngineError, FloquetParams, FloquetStepper, Observable, UxMode};
pub use mps::{mps_evolve, mps_qfi, MpsError, MpsState, TebdOptions, TruncationPolicy};
pub use observables::{QfiResult, Spectrum, TimeSeries};
pub use ops::{Axis, Level};
pub use phase::{fit_lifetime, find_dips, predict_nt, sweep, sweep_sequential, GridAxis, PhaseGrid, SweepSpec};
pub use state::StateVector;

pub use num_complex::Complex64 as C64;
