//! Brute-force dense reference simulators for cross-checking the chain
//! engines on small systems.
//!
//! The pure-state path evolves a full `2^n` statevector, the noisy path a
//! full `2^n x 2^n` density matrix with every gate embedded as an explicit
//! matrix. Both are deliberately simple: correctness over speed.

use crate::circuit::{Circuit, CircuitError};
use crate::mpo::NoiseModel;
use ndarray::linalg::kron;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

/// Largest system the statevector reference will simulate.
pub const PURE_MAX_QUBITS: usize = 12;
/// Largest system the density-matrix reference will simulate.
pub const MIXED_MAX_QUBITS: usize = 7;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n_qubits} qubits exceeds the dense {kind} reference limit of {cap}")]
    TooLarge {
        n_qubits: usize,
        cap: usize,
        kind: &'static str,
    },
    #[error("operands have mismatched dimensions {a} and {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Run the circuit on `|0..0>` as a dense statevector. Qubit 0 is the most
/// significant index bit.
pub fn dense_run(circuit: &Circuit) -> Result<Array1<Complex64>, OracleError> {
    let n = circuit.n_qubits;
    if n > PURE_MAX_QUBITS {
        return Err(OracleError::TooLarge {
            n_qubits: n,
            cap: PURE_MAX_QUBITS,
            kind: "statevector",
        });
    }
    circuit.validate()?;
    let dim = 1usize << n;
    let mut psi = vec![Complex64::default(); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    for op in &circuit.ops {
        match op.sites.as_slice() {
            [site] => apply_1q_vec(&mut psi, &op.matrix, n, *site),
            [left, _] => apply_2q_vec(&mut psi, &op.matrix, n, *left),
            _ => unreachable!("validated circuit"),
        }
    }
    Ok(Array1::from_vec(psi))
}

/// Run the circuit on `|0..0><0..0|` as a dense density matrix, applying a
/// depolarizing channel on each gate's support right after the gate
/// (strength `eps1` after one-qubit gates, `eps2` after two-qubit gates).
pub fn dense_run_noisy(
    circuit: &Circuit,
    noise: &NoiseModel,
) -> Result<Array2<Complex64>, OracleError> {
    let n = circuit.n_qubits;
    if n > MIXED_MAX_QUBITS {
        return Err(OracleError::TooLarge {
            n_qubits: n,
            cap: MIXED_MAX_QUBITS,
            kind: "density-matrix",
        });
    }
    circuit.validate()?;
    let dim = 1usize << n;
    let mut rho = Array2::<Complex64>::default((dim, dim));
    rho[[0, 0]] = Complex64::new(1.0, 0.0);
    for op in &circuit.ops {
        let full = embed(&op.matrix, op.sites[0], op.sites.len(), n);
        rho = conjugate(&full, &rho);
        match op.sites.as_slice() {
            [site] if noise.eps1 > 0.0 => {
                rho = depolarize_dense(&rho, &[*site], noise.eps1, n);
            }
            [left, _] if noise.eps2 > 0.0 => {
                rho = depolarize_dense(&rho, &[*left, *left + 1], noise.eps2, n);
            }
            _ => {}
        }
    }
    Ok(rho)
}

/// `|<a|b>|^2` of two statevectors.
pub fn fidelity_pure_dense(
    a: &Array1<Complex64>,
    b: &Array1<Complex64>,
) -> Result<f64, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::DimensionMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let ov: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(ov.norm_sqr())
}

/// Normalized operator-overlap fidelity
/// `|Tr(a b)| / sqrt(Tr(a a) Tr(b b))` of two density matrices.
pub fn fidelity_wang_dense(
    a: &Array2<Complex64>,
    b: &Array2<Complex64>,
) -> Result<f64, OracleError> {
    if a.shape() != b.shape() {
        return Err(OracleError::DimensionMismatch {
            a: a.shape()[0],
            b: b.shape()[0],
        });
    }
    let cross = trace_of_product(a, b).norm();
    let aa = trace_of_product(a, a).re;
    let bb = trace_of_product(b, b).re;
    Ok(cross / (aa * bb).sqrt())
}

fn trace_of_product(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let dim = a.shape()[0];
    let mut acc = Complex64::default();
    for i in 0..dim {
        for j in 0..dim {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

fn apply_1q_vec(psi: &mut [Complex64], u: &Array2<Complex64>, n: usize, site: usize) {
    let mask = 1usize << (n - 1 - site);
    for i in 0..psi.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (a0, a1) = (psi[i], psi[j]);
            psi[i] = u[[0, 0]] * a0 + u[[0, 1]] * a1;
            psi[j] = u[[1, 0]] * a0 + u[[1, 1]] * a1;
        }
    }
}

fn apply_2q_vec(psi: &mut [Complex64], u: &Array2<Complex64>, n: usize, left: usize) {
    let hi = 1usize << (n - 1 - left);
    let lo = 1usize << (n - 2 - left);
    for i in 0..psi.len() {
        if i & hi == 0 && i & lo == 0 {
            let idx = [i, i | lo, i | hi, i | hi | lo];
            let amps = idx.map(|k| psi[k]);
            for (row, &k) in idx.iter().enumerate() {
                let mut acc = Complex64::default();
                for (col, &amp) in amps.iter().enumerate() {
                    acc += u[[row, col]] * amp;
                }
                psi[k] = acc;
            }
        }
    }
}

fn identity(dim: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0))
}

/// Embed a gate on `arity` adjacent sites starting at `site` into the full
/// `2^n` space.
fn embed(gate: &Array2<Complex64>, site: usize, arity: usize, n: usize) -> Array2<Complex64> {
    let left = identity(1 << site);
    let right = identity(1 << (n - site - arity));
    kron(&kron(&left, gate), &right)
}

fn conjugate(u: &Array2<Complex64>, rho: &Array2<Complex64>) -> Array2<Complex64> {
    u.dot(rho).dot(&u.t().mapv(|v| v.conj()))
}

fn paulis() -> [Array2<Complex64>; 4] {
    let z = Complex64::default;
    let c = Complex64::new;
    [
        ndarray::array![[c(1.0, 0.0), z()], [z(), c(1.0, 0.0)]],
        ndarray::array![[z(), c(1.0, 0.0)], [c(1.0, 0.0), z()]],
        ndarray::array![[z(), c(0.0, -1.0)], [c(0.0, 1.0), z()]],
        ndarray::array![[c(1.0, 0.0), z()], [z(), c(-1.0, 0.0)]],
    ]
}

fn depolarize_dense(
    rho: &Array2<Complex64>,
    sites: &[usize],
    eps: f64,
    n: usize,
) -> Array2<Complex64> {
    let paulis = paulis();
    let mut out = rho.mapv(|v| v * (1.0 - eps));
    match sites {
        [site] => {
            for pauli in paulis.iter().skip(1) {
                let full = embed(pauli, *site, 1, n);
                out = out + conjugate(&full, rho).mapv(|v| v * (eps / 3.0));
            }
        }
        [left, _] => {
            for p in 0..4 {
                for q in 0..4 {
                    if p == 0 && q == 0 {
                        continue;
                    }
                    let pq = kron(&paulis[p], &paulis[q]);
                    let full = embed(&pq, *left, 2, n);
                    out = out + conjugate(&full, rho).mapv(|v| v * (eps / 15.0));
                }
            }
        }
        _ => unreachable!("supports are one or two sites"),
    }
    out
}
