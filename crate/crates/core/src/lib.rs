//! Three-qubit open-system toolkit: gate-level preparation of GHZ, W and WW̄
//! states, Lindblad and correlated-bath evolution, negativity and fidelity
//! measures, dynamical-decoupling schedules and simulated tomography.
//!
//! ```
//! use triq::prelude::*;
//!
//! let ghz = prepare_ghz();
//! assert!((tripartite_negativity(&ghz) - 1.0).abs() < 1e-12);
//! ```

pub mod analytic;
pub mod ddseq;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod noise;
pub mod states;
pub mod tomo;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analytic::{
        decay_times, ghz_analytic, ghz_analytic_signed, w_analytic, wwbar_analytic, CornerSign, RateSet,
    };
    pub use crate::ddseq::{
        build_cpmg, build_kddxy, build_xy16s, cycle_duration, run_protected, run_unprotected, DDSchedule,
        Pulse,
    };
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{
        hermitian_eigs, kron, matrix_exp_hermitian, partial_trace, partial_transpose, ComplexMatrix,
        DensityMatrix, C64,
    };
    pub use crate::measures::{
        disentanglement_time, fidelity, fit_decay_rate, negativity, purity, tripartite_negativity, DecayCurve,
    };
    pub use crate::noise::{
        evolve_correlated, evolve_markovian, evolve_markovian_at, lindblad_rhs, Bath, NoiseModel, OuBath,
        SpinSystem,
    };
    pub use crate::states::{
        cnot, controlled_rotation, crusher, prepare_ghz, prepare_w, prepare_wwbar, pseudopure, rotation,
        StateKind,
    };
    pub use crate::tomo::{fidelity_report, mle_reconstruct, simulate_all, simulate_readout, ReadoutSetting};
}
