//! The discriminator arm: a triangular projection circuit that routes a
//! chosen ququart basis state to output port 2.
//!
//! Circuit order: phase shifters `ps1..ps3` on input modes 1-3, then
//! `MZI(ps4)` on modes (1,2) and `MZI(ps5)` on modes (3,4), then `MZI(ps6)`
//! on modes (2,3). Only port 2 is monitored.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, Unitary, C64};
use crate::mesh::mzi_block;

/// Number of hardware phases in one projection arm.
pub const PROJECTOR_PHASES: usize = 6;

/// 0-based index of the monitored output port ("port 2").
pub const MONITORED_PORT: usize = 1;

/// Seven-angle parametrization of a normalized ququart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisParams {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
}

impl BasisParams {
    pub fn from_array(a: [f64; 7]) -> Self {
        Self { theta1: a[0], theta2: a[1], theta3: a[2], phi1: a[3], phi2: a[4], phi3: a[5], phi4: a[6] }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.theta1, self.theta2, self.theta3, self.phi1, self.phi2, self.phi3, self.phi4]
    }

    /// Parameters selecting basis state `|k>` (0-based) with zero phase.
    pub fn basis_state(k: usize) -> Self {
        let zero = Self::from_array([0.0; 7]);
        match k {
            0 => Self { theta1: FRAC_PI_2, theta2: FRAC_PI_2, ..zero },
            1 => Self { theta1: FRAC_PI_2, theta2: 0.0, ..zero },
            2 => Self { theta1: 0.0, theta3: FRAC_PI_2, ..zero },
            3 => zero,
            _ => panic!("ququart basis index {k} out of range"),
        }
    }
}

/// Hardware phases `ps1..ps6` of one projection arm, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorPhases(pub [f64; PROJECTOR_PHASES]);

impl ProjectorPhases {
    pub fn from_slice(flat: &[f64]) -> Result<Self> {
        let arr: [f64; PROJECTOR_PHASES] =
            flat.try_into().map_err(|_| Error::DimensionMismatch { expected: PROJECTOR_PHASES, actual: flat.len() })?;
        Ok(Self(arr))
    }

    pub fn as_array(&self) -> &[f64; PROJECTOR_PHASES] {
        &self.0
    }
}

/// `e^{i phi1} s1 s2 |1> + e^{i phi2} s1 c2 |2> + e^{i phi3} c1 s3 |3> + e^{i phi4} c1 c3 |4>`.
pub fn ququart_from_params(p: &BasisParams) -> ComplexVector {
    let (s1, c1) = p.theta1.sin_cos();
    let (s2, c2) = p.theta2.sin_cos();
    let (s3, c3) = p.theta3.sin_cos();
    ComplexVector::new(vec![
        C64::from_polar(s1 * s2, p.phi1),
        C64::from_polar(s1 * c2, p.phi2),
        C64::from_polar(c1 * s3, p.phi3),
        C64::from_polar(c1 * c3, p.phi4),
    ])
}

/// Hardware setting that routes `ququart_from_params(p)` to port 2.
pub fn projection_phases(p: &BasisParams) -> ProjectorPhases {
    let common = p.phi4 - p.theta2 + p.theta3 + FRAC_PI_2;
    ProjectorPhases([
        -p.phi1 + common,
        -p.phi2 + common,
        -p.phi3 + p.phi4,
        PI + 2.0 * p.theta2,
        2.0 * p.theta3,
        2.0 * p.theta1,
    ])
}

pub(crate) fn projection_matrix(q: &ProjectorPhases) -> ComplexMatrix {
    let ps = &q.0;
    let mut u = ComplexMatrix::from_diagonal(&[
        C64::from_polar(1.0, ps[0]),
        C64::from_polar(1.0, ps[1]),
        C64::from_polar(1.0, ps[2]),
        C64::new(1.0, 0.0),
    ]);
    u.rotate_rows(&mzi_block(ps[3]), 0);
    u.rotate_rows(&mzi_block(ps[4]), 2);
    u.rotate_rows(&mzi_block(ps[5]), 1);
    u
}

/// Transfer matrix of the projection circuit.
pub fn projection_unitary(q: &ProjectorPhases) -> Unitary {
    Unitary::from_trusted(projection_matrix(q))
}

/// Probability of detecting `state4` at port 2 when the circuit is set to
/// project onto `ququart_from_params(p)`; equals `|<psi_M(p)|state4>|^2`.
pub fn expectation_of_projector(state4: &ComplexVector, p: &BasisParams) -> f64 {
    assert_eq!(state4.dim(), 4, "single-ququart state must have 4 amplitudes");
    let u = projection_matrix(&projection_phases(p));
    (0..4).map(|j| u[(MONITORED_PORT, j)] * state4[j]).sum::<C64>().norm_sqr()
}
