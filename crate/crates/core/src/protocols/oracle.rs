//! Literal density-matrix execution of the two-pair purification circuit
//! and of entanglement swapping.
//!
//! Four qubits are ordered `(A0, B0, A1, B1)` with `A0` the most significant
//! bit of the 16-dimensional index. Pair 0 (`A0B0`) is kept and pair 1
//! (`A1B1`) is measured. Nothing here goes through the Bell-label algebra of
//! the parent module: states are built from Bell vectors, gates are explicit
//! unitaries and measurements are projectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{PurificationOutcome, PurificationProtocol};
use crate::error::{check_range, ModelError, Result};
use crate::state::BellDiagonalState;

type CMatrix = DMatrix<Complex64>;

const QUBITS: usize = 4;
const DIM: usize = 16;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Bell vectors in `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)` order on a pair `(a, b)`, index `2a + b`.
fn bell_vectors() -> [[Complex64; 4]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    [
        [c(s, 0.0), z, z, c(s, 0.0)],
        [c(s, 0.0), z, z, c(-s, 0.0)],
        [z, c(s, 0.0), c(s, 0.0), z],
        [z, c(s, 0.0), c(-s, 0.0), z],
    ]
}

/// `Σ wᵢ |Bᵢ⟩⟨Bᵢ|` as a 4×4 matrix.
pub fn bell_diagonal_matrix(state: &BellDiagonalState) -> CMatrix {
    let bell = bell_vectors();
    let mut m = CMatrix::zeros(4, 4);
    for (w, v) in state.weights().iter().zip(bell.iter()) {
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] += v[i] * v[j].conj() * *w;
            }
        }
    }
    m
}

/// Diagonal of a two-qubit density matrix in the Bell basis.
pub fn bell_weights(rho: &CMatrix) -> [f64; 4] {
    let bell = bell_vectors();
    let mut out = [0.0; 4];
    for (k, v) in bell.iter().enumerate() {
        let mut acc = c(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += v[i].conj() * rho[(i, j)] * v[j];
            }
        }
        out[k] = acc.re;
    }
    out
}

/// Density operator of two entangled pairs.
#[derive(Debug, Clone)]
pub struct TwoPairState {
    rho: CMatrix,
}

impl TwoPairState {
    /// Validates a 16×16 matrix: Hermitian and unit trace within 1e-12,
    /// smallest eigenvalue at least -1e-10.
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != DIM || rho.ncols() != DIM {
            return Err(ModelError::InvalidState(format!(
                "expected a 16x16 matrix, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm_dev = (&rho - rho.adjoint()).camax();
        if herm_dev > 1e-12 {
            return Err(ModelError::InvalidState(format!(
                "matrix is not Hermitian (deviation {herm_dev:e})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(ModelError::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = rho
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(ModelError::InvalidState(format!(
                "matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { rho })
    }

    /// `ρ_{A0B0} ⊗ ρ_{A1B1}` for two Bell-diagonal pairs.
    pub fn product(first: &BellDiagonalState, second: &BellDiagonalState) -> Self {
        Self {
            rho: bell_diagonal_matrix(first).kronecker(&bell_diagonal_matrix(second)),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

fn phase_gate() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

/// `exp(-iθX/2)`.
fn rx(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

/// Tensor product of one 2×2 operator per qubit, qubit 0 most significant.
fn tensor(ops: &[CMatrix]) -> CMatrix {
    ops.iter()
        .skip(1)
        .fold(ops[0].clone(), |acc, op| acc.kronecker(op))
}

fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// CNOT permutation matrix on an `n`-qubit register.
fn cnot(control: usize, target: usize, n: usize) -> CMatrix {
    let dim = 1 << n;
    let mut u = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let j = if bit(i, control, n) == 1 {
            i ^ (1 << (n - 1 - target))
        } else {
            i
        };
        u[(j, i)] = c(1.0, 0.0);
    }
    u
}

fn conjugate(rho: &CMatrix, u: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

/// Diagonal projector onto basis states whose `qubits` read `values`.
fn projector(qubits: &[usize], values: &[usize], n: usize) -> CMatrix {
    let dim = 1 << n;
    let mut p = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        if qubits.iter().zip(values).all(|(q, v)| bit(i, *q, n) == *v) {
            p[(i, i)] = c(1.0, 0.0);
        }
    }
    p
}

/// Reduced state of two kept qubits of a four-qubit register.
fn reduce_to_pair(rho: &CMatrix, keep: [usize; 2]) -> CMatrix {
    let traced: Vec<usize> = (0..QUBITS).filter(|q| !keep.contains(q)).collect();
    let compose = |k: usize, t: usize| -> usize {
        let mut idx = 0;
        for q in 0..QUBITS {
            let b = if q == keep[0] {
                k >> 1
            } else if q == keep[1] {
                k & 1
            } else if q == traced[0] {
                t >> 1
            } else {
                t & 1
            };
            idx |= b << (QUBITS - 1 - q);
        }
        idx
    };
    let mut out = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            for t in 0..4 {
                out[(i, j)] += rho[(compose(i, t), compose(j, t))];
            }
        }
    }
    out
}

/// The 24 single-qubit Clifford unitaries, up to global phase, generated
/// from H and S.
fn single_qubit_cliffords() -> Vec<CMatrix> {
    fn canonical(u: &CMatrix) -> CMatrix {
        // divide out the phase of the first entry with non-negligible modulus
        let pivot = u.iter().find(|z| z.norm() > 1e-9).copied().unwrap();
        let phase = pivot / pivot.norm();
        u.map(|z| z / phase)
    }
    fn same(a: &CMatrix, b: &CMatrix) -> bool {
        (a - b).camax() < 1e-9
    }
    let generators = [hadamard(), phase_gate()];
    let mut group = vec![identity2()];
    let mut frontier = vec![identity2()];
    while let Some(u) = frontier.pop() {
        for g in &generators {
            let next = canonical(&(g * &u));
            if !group.iter().any(|h| same(h, &next)) {
                group.push(next.clone());
                frontier.push(next);
            }
        }
    }
    group
}

/// Isotropic twirl `avg_U (U ⊗ U*) ρ (U ⊗ U*)†` applied to the pair on
/// `qubits` of an `n`-qubit register.
fn twirl_pair(rho: &CMatrix, qubits: [usize; 2], n: usize, cliffords: &[CMatrix]) -> CMatrix {
    let dim = 1 << n;
    let mut acc = CMatrix::zeros(dim, dim);
    for u in cliffords {
        let ops: Vec<CMatrix> = (0..n)
            .map(|q| {
                if q == qubits[0] {
                    u.clone()
                } else if q == qubits[1] {
                    u.map(|z| z.conj())
                } else {
                    identity2()
                }
            })
            .collect();
        acc += conjugate(rho, &tensor(&ops));
    }
    acc / c(cliffords.len() as f64, 0.0)
}

/// `(1 - q) ρ + q I/4` on a two-qubit density matrix.
fn depolarize_matrix(rho: &CMatrix, q: f64) -> CMatrix {
    rho * c(1.0 - q, 0.0) + CMatrix::identity(4, 4) * c(q / 4.0, 0.0)
}

/// Runs one purification round on `input` as an explicit circuit.
///
/// BBPSSW twirls both pairs, applies CNOT `A0→A1` and `B0→B1`, keeps the
/// pair when `A1` and `B1` agree and twirls the result. DEJMPS first applies
/// `Rx(π/2)` on Alice's qubits and `Rx(-π/2)` on Bob's. Gate noise is a
/// two-qubit depolarising channel on the kept pair.
pub fn oracle_circuit(
    input: &TwoPairState,
    protocol: PurificationProtocol,
    gate_error: f64,
) -> Result<PurificationOutcome> {
    check_range("gate_error", gate_error, 0.0, 1.0, "must lie in [0, 1]")?;
    let cliffords = match protocol {
        PurificationProtocol::Bbpssw => single_qubit_cliffords(),
        PurificationProtocol::Dejmps => Vec::new(),
    };
    let mut rho = input.rho.clone();
    match protocol {
        PurificationProtocol::Bbpssw => {
            rho = twirl_pair(&rho, [0, 1], QUBITS, &cliffords);
            rho = twirl_pair(&rho, [2, 3], QUBITS, &cliffords);
        }
        PurificationProtocol::Dejmps => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let rotation = tensor(&[rx(half_pi), rx(-half_pi), rx(half_pi), rx(-half_pi)]);
            rho = conjugate(&rho, &rotation);
        }
    }
    let bilateral_cnot = cnot(1, 3, QUBITS) * cnot(0, 2, QUBITS);
    rho = conjugate(&rho, &bilateral_cnot);

    let mut kept = CMatrix::zeros(4, 4);
    for outcome in 0..2 {
        let p = projector(&[2, 3], &[outcome, outcome], QUBITS);
        kept += reduce_to_pair(&(&p * &rho * &p), [0, 1]);
    }
    let success_prob = kept.trace().re;
    if !(success_prob > 0.0) {
        return Err(ModelError::InvalidState(
            "postselection has zero acceptance probability".into(),
        ));
    }
    let mut out = kept / c(success_prob, 0.0);
    if protocol == PurificationProtocol::Bbpssw {
        out = twirl_pair(&out, [0, 1], 2, &cliffords);
    }
    out = depolarize_matrix(&out, gate_error);
    Ok(PurificationOutcome {
        output_state: BellDiagonalState::normalized(bell_weights(&out).map(|w| w.max(0.0)))?,
        success_prob,
    })
}

/// Entanglement swapping as an explicit Bell-state measurement.
///
/// Qubits are `(A, C1, C2, B)` with `left` on `A C1` and `right` on `C2 B`.
/// Every BSM outcome on `C1 C2` is projected out, the matching Pauli
/// correction is applied to `B`, and the branches are summed.
pub fn oracle_swap(
    left: &BellDiagonalState,
    right: &BellDiagonalState,
    gate_error: f64,
) -> Result<BellDiagonalState> {
    check_range("gate_error", gate_error, 0.0, 1.0, "must lie in [0, 1]")?;
    let rho = bell_diagonal_matrix(left).kronecker(&bell_diagonal_matrix(right));
    let bell = bell_vectors();
    let corrections = [
        identity2(),
        pauli_z(),
        pauli_x(),
        &pauli_x() * &pauli_z(),
    ];
    let mut joined = CMatrix::zeros(4, 4);
    for (v, fix) in bell.iter().zip(corrections.iter()) {
        let bell_proj = CMatrix::from_fn(4, 4, |i, j| v[i] * v[j].conj());
        let p = tensor(&[identity2(), bell_proj, identity2()]);
        let branch = reduce_to_pair(&(&p * &rho * &p), [0, 3]);
        let u = identity2().kronecker(fix);
        joined += conjugate(&branch, &u);
    }
    let out = depolarize_matrix(&joined, gate_error);
    BellDiagonalState::normalized(bell_weights(&out).map(|w| w.max(0.0)))
}
