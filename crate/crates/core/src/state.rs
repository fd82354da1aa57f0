//! Two-ququart states, generator evolution, and coincidence statistics.
//!
//! Amplitudes are stored signal-major: `|k>_s |l>_i` lives at index
//! `4 * k + l` (0-based modes). Read as a 4x4 row-major matrix `G`, a local
//! operation `A ⊗ B` acts as `G -> A G B^T`, which is how every routine here
//! evaluates it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{haar_random_unitary, ComplexMatrix, ComplexVector, Unitary, C64};
use crate::mesh::{mesh_unitary, MeshPhases, PHASE_COUNT};
use crate::projector::{projection_matrix, ProjectorPhases, MONITORED_PORT, PROJECTOR_PHASES};

pub const QUQUART_DIM: usize = 4;
pub const STATE_DIM: usize = QUQUART_DIM * QUQUART_DIM;
/// Flat index of the coincidence at both monitored ports.
pub const COINCIDENCE_OUTCOME: usize = MONITORED_PORT * QUQUART_DIM + MONITORED_PORT;

pub const GENERATOR_PHASES: usize = 2 * PHASE_COUNT;
pub const DISCRIMINATOR_PHASES: usize = 2 * PROJECTOR_PHASES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Signal, Arm::Idler];
}

/// Normalized pure state of a signal/idler photon pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQuquartState {
    amplitudes: ComplexVector,
}

impl TwoQuquartState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.dim() != STATE_DIM {
            return Err(Error::DimensionMismatch { expected: STATE_DIM, actual: amplitudes.dim() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Amplitude of `|signal>_s |idler>_i`, 0-based modes.
    pub fn amplitude(&self, signal: usize, idler: usize) -> C64 {
        self.amplitudes[signal * QUQUART_DIM + idler]
    }

    fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(QUQUART_DIM, QUQUART_DIM, self.amplitudes.as_slice().to_vec())
            .expect("state has 16 amplitudes")
    }

    fn from_matrix(g: ComplexMatrix) -> Self {
        Self { amplitudes: ComplexVector::new(g.as_slice().to_vec()) }
    }

    /// Reduced density matrix of the signal photon, `G G^dagger`.
    pub fn reduced_signal(&self) -> ComplexMatrix {
        let g = self.as_matrix();
        g.matmul(&g.adjoint())
    }

    /// Reduced density matrix of the idler photon, `G^T conj(G)`.
    pub fn reduced_idler(&self) -> ComplexMatrix {
        let g = self.as_matrix();
        g.transpose().matmul(&g.adjoint().transpose())
    }
}

/// Generator phases: one mesh per photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub signal: MeshPhases,
    pub idler: MeshPhases,
}

impl GeneratorParams {
    pub fn identity() -> Self {
        let p = crate::mesh::identity_phases();
        Self { signal: p, idler: p }
    }

    pub fn arm(&self, arm: Arm) -> &MeshPhases {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }

    pub fn arm_mut(&mut self, arm: Arm) -> &mut MeshPhases {
        match arm {
            Arm::Signal => &mut self.signal,
            Arm::Idler => &mut self.idler,
        }
    }

    /// Signal phases then idler phases.
    pub fn to_flat(&self) -> [f64; GENERATOR_PHASES] {
        let mut out = [0.0; GENERATOR_PHASES];
        out[..PHASE_COUNT].copy_from_slice(&self.signal.to_array());
        out[PHASE_COUNT..].copy_from_slice(&self.idler.to_array());
        out
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != GENERATOR_PHASES {
            return Err(Error::DimensionMismatch { expected: GENERATOR_PHASES, actual: flat.len() });
        }
        Ok(Self {
            signal: MeshPhases::from_slice(&flat[..PHASE_COUNT])?,
            idler: MeshPhases::from_slice(&flat[PHASE_COUNT..])?,
        })
    }
}

/// Discriminator phases: one projection circuit per photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorParams {
    pub signal: ProjectorPhases,
    pub idler: ProjectorPhases,
}

impl DiscriminatorParams {
    pub fn to_flat(&self) -> [f64; DISCRIMINATOR_PHASES] {
        let mut out = [0.0; DISCRIMINATOR_PHASES];
        out[..PROJECTOR_PHASES].copy_from_slice(&self.signal.0);
        out[PROJECTOR_PHASES..].copy_from_slice(&self.idler.0);
        out
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != DISCRIMINATOR_PHASES {
            return Err(Error::DimensionMismatch { expected: DISCRIMINATOR_PHASES, actual: flat.len() });
        }
        Ok(Self {
            signal: ProjectorPhases::from_slice(&flat[..PROJECTOR_PHASES])?,
            idler: ProjectorPhases::from_slice(&flat[PROJECTOR_PHASES..])?,
        })
    }
}

/// `(1/2) sum_k |k>_s |k>_i`.
pub fn bell_state() -> TwoQuquartState {
    let mut v = ComplexVector::zeros(STATE_DIM);
    for k in 0..QUQUART_DIM {
        v[k * QUQUART_DIM + k] = C64::new(0.5, 0.0);
    }
    TwoQuquartState { amplitudes: v }
}

/// `(U_s ⊗ U_i)` applied to the Bell state, i.e. `G = U_s U_i^T / 2`.
pub fn state_from_unitaries(signal: &Unitary, idler: &Unitary) -> TwoQuquartState {
    let g = signal.matrix().matmul(&idler.matrix().transpose()).scale(C64::new(0.5, 0.0));
    TwoQuquartState::from_matrix(g)
}

pub fn generate_state(g: &GeneratorParams) -> TwoQuquartState {
    state_from_unitaries(&mesh_unitary(&g.signal), &mesh_unitary(&g.idler))
}

/// A maximally entangled target drawn from two independent Haar unitaries.
pub fn random_true_state<R: Rng + ?Sized>(rng: &mut R) -> TwoQuquartState {
    let us = haar_random_unitary(QUQUART_DIM, rng);
    let ui = haar_random_unitary(QUQUART_DIM, rng);
    state_from_unitaries(&us, &ui)
}

/// Joint output-port probabilities `p[4k + l]` after both projection circuits.
pub fn outcome_distribution(s: &TwoQuquartState, d: &DiscriminatorParams) -> [f64; STATE_DIM] {
    let ps = projection_matrix(&d.signal);
    let pi = projection_matrix(&d.idler);
    let out = ps.matmul(&s.as_matrix()).matmul(&pi.transpose());
    std::array::from_fn(|e| out.as_slice()[e].norm_sqr())
}

/// Probability of a coincidence at both monitored ports,
/// `<s| P_s ⊗ P_i |s>`.
pub fn expectation(s: &TwoQuquartState, d: &DiscriminatorParams) -> f64 {
    let ps = projection_matrix(&d.signal);
    let pi = projection_matrix(&d.idler);
    let mut amp = C64::new(0.0, 0.0);
    for k in 0..QUQUART_DIM {
        let row: C64 = (0..QUQUART_DIM).map(|l| s.amplitude(k, l) * pi[(MONITORED_PORT, l)]).sum();
        amp += ps[(MONITORED_PORT, k)] * row;
    }
    amp.norm_sqr()
}

/// Pure-state fidelity `|<a|b>|`.
pub fn fidelity(a: &TwoQuquartState, b: &TwoQuquartState) -> f64 {
    a.amplitudes.inner(&b.amplitudes).norm().min(1.0)
}
