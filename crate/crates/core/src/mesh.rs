//! The generator arm: a 4-mode rectangular (Clements) mesh of six MZIs.
//!
//! Each MZI slot `k` is preceded by an external phase shifter on its upper
//! input, so the slot's transfer block is `MZI(theta_k) * PS(phi_k)`. After
//! the last column, output phase shifters sit on modes 1-3; the mode-4
//! output phase would only set the global phase and is omitted. That leaves
//! 15 phases, the minimum for an arbitrary 4-mode unitary.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Unitary, C64, ONE, ZERO};

pub const MODES: usize = 4;
pub const MZI_COUNT: usize = 6;
pub const OUTPUT_PHASES: usize = 3;
/// Phases per mesh arm.
pub const PHASE_COUNT: usize = 2 * MZI_COUNT + OUTPUT_PHASES;

/// Component order of the mesh, in the order light traverses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshLayout;

impl MeshLayout {
    /// Upper (0-based) mode of each MZI slot. Columns: `{(1,2), (3,4)}`,
    /// `{(2,3)}`, `{(1,2), (3,4)}`, `{(2,3)}` in 1-based mode labels.
    pub const MZI_UPPER_MODES: [usize; MZI_COUNT] = [0, 2, 1, 0, 2, 1];

    /// Column index of each MZI slot.
    pub const MZI_COLUMNS: [usize; MZI_COUNT] = [0, 0, 1, 2, 2, 3];
}

/// Phases of one mesh arm, in radians.
///
/// Flat order (see [`MeshPhases::to_array`]): `internal[0..6]`,
/// `external[0..6]`, `output[0..3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshPhases {
    /// Internal MZI phases `theta_k`.
    pub internal: [f64; MZI_COUNT],
    /// External phases `phi_k` on each MZI's upper input.
    pub external: [f64; MZI_COUNT],
    /// Output phases on modes 1-3.
    pub output: [f64; OUTPUT_PHASES],
}

impl MeshPhases {
    pub fn to_array(&self) -> [f64; PHASE_COUNT] {
        let mut out = [0.0; PHASE_COUNT];
        out[..MZI_COUNT].copy_from_slice(&self.internal);
        out[MZI_COUNT..2 * MZI_COUNT].copy_from_slice(&self.external);
        out[2 * MZI_COUNT..].copy_from_slice(&self.output);
        out
    }

    pub fn from_slice(flat: &[f64]) -> Result<Self> {
        if flat.len() != PHASE_COUNT {
            return Err(Error::DimensionMismatch { expected: PHASE_COUNT, actual: flat.len() });
        }
        let mut p = Self { internal: [0.0; MZI_COUNT], external: [0.0; MZI_COUNT], output: [0.0; OUTPUT_PHASES] };
        p.internal.copy_from_slice(&flat[..MZI_COUNT]);
        p.external.copy_from_slice(&flat[MZI_COUNT..2 * MZI_COUNT]);
        p.output.copy_from_slice(&flat[2 * MZI_COUNT..]);
        Ok(p)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.to_array()[index]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        match index {
            i if i < MZI_COUNT => self.internal[i] = value,
            i if i < 2 * MZI_COUNT => self.external[i - MZI_COUNT] = value,
            i => self.output[i - 2 * MZI_COUNT] = value,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|p| p.is_finite())
    }

    /// Every phase wrapped into `[0, 2pi)`.
    pub fn normalized(&self) -> Self {
        let flat = self.to_array().map(wrap_phase);
        Self::from_slice(&flat).expect("fixed length")
    }
}

/// Wraps a phase into `[0, 2pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// The 2x2 multimode-interferometer transfer matrix `(1/sqrt2)[[1, i], [i, 1]]`.
pub fn beam_splitter() -> Unitary {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let t = C64::new(0.0, FRAC_1_SQRT_2);
    Unitary::from_trusted(ComplexMatrix::from_rows([[r, t], [t, r]]))
}

/// `diag(e^{i theta}, 1)`.
pub fn phase_shifter(theta: f64) -> Unitary {
    Unitary::from_trusted(ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, theta), ONE]))
}

/// `BS * PS(theta) * BS`.
pub fn mzi(theta: f64) -> Unitary {
    Unitary::from_trusted(ComplexMatrix::from_rows(mzi_block(theta)))
}

pub(crate) fn mzi_block(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let k = C64::new(0.0, 1.0) * C64::from_polar(1.0, theta / 2.0);
    [[k * s, k * c], [k * c, -k * s]]
}

/// Block of one mesh slot: `MZI(theta) * PS(phi)`.
fn slot_block(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let k = C64::new(0.0, 1.0) * C64::from_polar(1.0, theta / 2.0);
    let e = C64::from_polar(1.0, phi);
    [[k * s * e, k * c], [k * c * e, -k * s]]
}

fn adjoint_block(b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]]
}

/// Places a 2x2 unitary on the adjacent modes `(i, i + 1)` (0-based) of an
/// `n`-mode identity.
pub fn embed_two_mode(u: &Unitary, modes: (usize, usize), n: usize) -> Result<Unitary> {
    let (i, j) = modes;
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: u.dim() });
    }
    if j != i + 1 || j >= n {
        return Err(Error::InvalidModePair(i, j, n));
    }
    let mut m = ComplexMatrix::identity(n);
    m[(i, i)] = u[(0, 0)];
    m[(i, j)] = u[(0, 1)];
    m[(j, i)] = u[(1, 0)];
    m[(j, j)] = u[(1, 1)];
    Ok(Unitary::from_trusted(m))
}

/// Transfer matrix of the full mesh: `D * T_6 * ... * T_1`.
pub fn mesh_unitary(phases: &MeshPhases) -> Unitary {
    let mut u = ComplexMatrix::identity(MODES);
    for (k, &upper) in MeshLayout::MZI_UPPER_MODES.iter().enumerate() {
        u.rotate_rows(&slot_block(phases.internal[k], phases.external[k]), upper);
    }
    for (mode, &delta) in phases.output.iter().enumerate() {
        let e = C64::from_polar(1.0, delta);
        for j in 0..MODES {
            u[(mode, j)] *= e;
        }
    }
    Unitary::from_trusted(u)
}

/// Phases for which the mesh is the identity: every slot at
/// `theta = phi = pi` has block `I`.
pub fn identity_phases() -> MeshPhases {
    MeshPhases { internal: [PI; MZI_COUNT], external: [PI; MZI_COUNT], output: [0.0; OUTPUT_PHASES] }
}

/// Slot phases whose adjoint, applied from the right on columns
/// `(m, m + 1)`, zeroes the entry in column `m` of a row holding `(x, y)`.
fn null_column_from_right(x: C64, y: C64) -> (f64, f64) {
    if x == ZERO && y == ZERO {
        return (PI, PI);
    }
    let theta = 2.0 * y.norm().atan2(x.norm());
    let phi = x.arg() - y.arg() - PI;
    (theta, phi)
}

/// Slot phases whose block, applied from the left on rows `(m, m + 1)`,
/// zeroes the row-`m + 1` entry of a column holding `(x, y)`.
fn null_row_from_left(x: C64, y: C64) -> (f64, f64) {
    if x == ZERO && y == ZERO {
        return (PI, PI);
    }
    let theta = 2.0 * x.norm().atan2(y.norm());
    let phi = y.arg() - x.arg();
    (theta, phi)
}

/// Rewrites `T(theta, phi)^dagger * diag(d_upper, d_lower)` as
/// `diag(e_upper, e_lower) * T(theta, phi')`, returning `(phi', e_upper, e_lower)`.
fn commute_through_diagonal(theta: f64, phi: f64, d_upper: C64, d_lower: C64) -> (f64, C64, C64) {
    let w = -C64::from_polar(1.0, -theta);
    let phi_new = d_upper.arg() - d_lower.arg();
    let e_upper = w * C64::from_polar(1.0, -phi) * d_lower;
    let e_lower = w * d_lower;
    (phi_new, e_upper, e_lower)
}

/// Programs the mesh to realize `u` up to a global phase.
///
/// Analytic nulling: the lower triangle of `u` is cleared by alternating
/// column operations (right-multiplied slot inverses) and row operations
/// (left-multiplied slots) along anti-diagonals, leaving a diagonal. The
/// left-side slots are then moved past that diagonal so every slot ends up
/// in the mesh's own order.
pub fn clements_decompose(u: &ComplexMatrix) -> Result<MeshPhases> {
    if u.rows() != MODES || u.cols() != MODES {
        return Err(Error::DimensionMismatch { expected: MODES, actual: u.rows().max(u.cols()) });
    }
    Unitary::new(u.clone())?;

    let mut t = u.clone();
    let mut right = Vec::with_capacity(4);

    // Anti-diagonal 1: entry (4,1) by columns (1,2).
    let (th, ph) = null_column_from_right(t[(3, 0)], t[(3, 1)]);
    t.rotate_cols(&adjoint_block(&slot_block(th, ph)), 0);
    right.push((th, ph));

    // Anti-diagonal 2: entries (3,1) then (4,2) by rows (2,3), (3,4).
    let (l1_th, l1_ph) = null_row_from_left(t[(1, 0)], t[(2, 0)]);
    t.rotate_rows(&slot_block(l1_th, l1_ph), 1);
    let (l2_th, l2_ph) = null_row_from_left(t[(2, 1)], t[(3, 1)]);
    t.rotate_rows(&slot_block(l2_th, l2_ph), 2);

    // Anti-diagonal 3: entries (4,3), (3,2), (2,1) by columns.
    for (row, left_col) in [(3, 2), (2, 1), (1, 0)] {
        let (th, ph) = null_column_from_right(t[(row, left_col)], t[(row, left_col + 1)]);
        t.rotate_cols(&adjoint_block(&slot_block(th, ph)), left_col);
        right.push((th, ph));
    }

    let mut diag: Vec<C64> = (0..MODES).map(|i| t[(i, i)]).collect();

    let (l2_phi, e2, e3) = commute_through_diagonal(l2_th, l2_ph, diag[2], diag[3]);
    diag[2] = e2;
    diag[3] = e3;
    let (l1_phi, e1, e2) = commute_through_diagonal(l1_th, l1_ph, diag[1], diag[2]);
    diag[1] = e1;
    diag[2] = e2;

    let slots = [right[0], right[1], right[2], right[3], (l2_th, l2_phi), (l1_th, l1_phi)];
    let mut phases =
        MeshPhases { internal: [0.0; MZI_COUNT], external: [0.0; MZI_COUNT], output: [0.0; OUTPUT_PHASES] };
    for (k, (th, ph)) in slots.into_iter().enumerate() {
        phases.internal[k] = th;
        phases.external[k] = ph;
    }
    let reference = diag[3].arg();
    for (out, z) in phases.output.iter_mut().zip(&diag) {
        *out = z.arg() - reference;
    }
    Ok(phases.normalized())
}
