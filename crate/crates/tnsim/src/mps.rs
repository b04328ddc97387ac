//! Pure-state engine: matrix product states with fidelity-targeted
//! truncation.
//!
//! The state is kept normalized and in mixed-canonical form at all times.
//! Two-qubit gates are the only operation that can grow a bond; each
//! application truncates the new bond against a target drawn from the
//! fidelity ledger and records what it achieved.

use crate::budget::{FidelityLedger, TruncationRecord};
use crate::chain::{
    check_hermitian, check_unitary, decide_cut, minimal_rank, validate_spectrum, SimError,
    TensorChain, TruncationRule,
};
use crate::tensor::{contract, split_svd, DenseTensor};
use ndarray::Array2;
use num_complex::Complex64;

/// Largest qubit count [`MpsState::to_dense`] will materialize.
pub const DENSIFY_MAX_QUBITS: usize = 20;

/// Minimal rank whose retained squared Schmidt weight meets `target_f`
/// under the pure-state rule, with the overlap fidelity actually achieved:
/// `f(k) = sum_{i<k} lambda_i^2 / sum_i lambda_i^2`, the squared overlap of
/// the renormalized rank-`k` state with the original.
///
/// `lambda` must be descending and non-negative. A target of exactly 1 keeps
/// every value above the machine-zero threshold and reports 1.0.
pub fn truncation_rank_pure(lambda: &[f64], target_f: f64) -> Result<(usize, f64), SimError> {
    validate_spectrum(lambda)?;
    if !(target_f > 0.0 && target_f <= 1.0) {
        return Err(SimError::TargetOutOfRange(target_f));
    }
    Ok(minimal_rank(lambda, target_f, TruncationRule::PureOverlap))
}

/// Matrix product state over qubits on a line.
#[derive(Clone, Debug)]
pub struct MpsState {
    chain: TensorChain,
}

impl MpsState {
    /// The all-zeros computational basis state.
    pub fn zero_state(n_qubits: usize) -> Result<Self, SimError> {
        let local = [Complex64::new(1.0, 0.0), Complex64::default()];
        Ok(Self {
            chain: TensorChain::product(n_qubits, 2, &local)?,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.chain.len()
    }

    pub fn center(&self) -> usize {
        self.chain.center()
    }

    /// Extent of each of the `n_qubits - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    /// Norm of the state; maintained at 1 by every public operation.
    pub fn norm(&self) -> f64 {
        self.chain.center_norm()
    }

    /// Sweep the canonical center to `site`.
    pub fn canonicalize(&mut self, site: usize) -> Result<(), SimError> {
        self.check_site(site)?;
        self.chain.move_center_to(site)?;
        Ok(())
    }

    /// Schmidt coefficients across `bond` (between sites `bond` and
    /// `bond + 1`). The center must sit on one side of the bond.
    pub fn schmidt_values(&self, bond: usize) -> Result<Vec<f64>, SimError> {
        if bond + 1 >= self.n_qubits() {
            return Err(SimError::BondOutOfRange {
                bond,
                n_sites: self.n_qubits(),
            });
        }
        let center = self.chain.center();
        if center != bond && center != bond + 1 {
            return Err(SimError::CenterMisplaced {
                center,
                left: bond,
                right: bond + 1,
            });
        }
        Ok(self.chain.schmidt_at(bond)?)
    }

    /// Apply a single-qubit unitary. Never changes any bond and works with
    /// the center anywhere.
    pub fn apply_1q(&mut self, gate: &Array2<Complex64>, site: usize) -> Result<(), SimError> {
        self.check_site(site)?;
        let g = as_square_tensor(gate, 2)?;
        check_unitary(&g)?;
        self.chain.apply_onsite(site, &g)?;
        Ok(())
    }

    /// Apply a two-qubit unitary to sites (left_site, left_site + 1),
    /// truncating the refreshed bond against the ledger's next target.
    /// The center must already sit on one of the two sites; it ends on
    /// `left_site + 1`.
    pub fn apply_2q(
        &mut self,
        gate: &Array2<Complex64>,
        left_site: usize,
        ledger: &mut FidelityLedger,
        chi_cap: Option<usize>,
    ) -> Result<TruncationRecord, SimError> {
        self.check_site(left_site)?;
        self.check_site(left_site + 1)?;
        let center = self.chain.center();
        if center != left_site && center != left_site + 1 {
            return Err(SimError::CenterMisplaced {
                center,
                left: left_site,
                right: left_site + 1,
            });
        }
        let g = as_square_tensor(gate, 4)?;
        check_unitary(&g)?;
        let target_f = ledger.next_target()?;

        let theta = self.chain.two_site_theta(left_site)?;
        let g4 = g.reshaped(&[2, 2, 2, 2])?;
        // (out_i, out_j, l, r) -> (l, out_i, out_j, r)
        let theta = contract(&g4, &theta, &[(2, 1), (3, 2)])?.permute(&[2, 0, 1, 3])?;
        let svd = split_svd(&theta, &[0, 1])?;
        let cut = decide_cut(&svd.s, target_f, TruncationRule::PureOverlap, chi_cap);
        self.chain.install_split(left_site, &svd, cut.chi_after);
        let norm = self.chain.center_norm();
        self.chain
            .scale_center(Complex64::new(1.0 / norm, 0.0));
        ledger.record(cut.achieved_f)?;
        Ok(TruncationRecord {
            gate_index: ledger.completed() - 1,
            bond_site: left_site,
            chi_before: cut.chi_before,
            chi_after: cut.chi_after,
            target_f,
            achieved_f: cut.achieved_f,
            discarded_weight: cut.discarded_frac,
            capped: cut.capped,
        })
    }

    /// Amplitude of one computational basis state; `bits[k]` is the value
    /// of qubit `k`.
    pub fn amplitude(&self, bits: &[u8]) -> Result<Complex64, SimError> {
        if bits.len() != self.n_qubits() {
            return Err(SimError::SizeMismatch {
                n_a: self.n_qubits(),
                n_b: bits.len(),
            });
        }
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for (site, &b) in self.chain_sites().zip(bits.iter()) {
            debug_assert!(b <= 1);
            let (l, d, r) = (site.shape()[0], site.shape()[1], site.shape()[2]);
            let data = site.data();
            let mut next = vec![Complex64::default(); r];
            for li in 0..l {
                let row = &data[(li * d + b as usize) * r..(li * d + b as usize) * r + r];
                for ri in 0..r {
                    next[ri] += v[li] * row[ri];
                }
            }
            v = next;
        }
        Ok(v[0])
    }

    /// Expectation of a two-site Hermitian observable on sites
    /// (left_site, left_site + 1). The center must sit on one of them.
    pub fn expectation_local(
        &self,
        obs: &Array2<Complex64>,
        left_site: usize,
    ) -> Result<f64, SimError> {
        self.check_site(left_site)?;
        self.check_site(left_site + 1)?;
        let center = self.chain.center();
        if center != left_site && center != left_site + 1 {
            return Err(SimError::CenterMisplaced {
                center,
                left: left_site,
                right: left_site + 1,
            });
        }
        let o = as_square_tensor(obs, 4)?;
        check_hermitian(&o)?;
        let theta = self.chain.two_site_theta(left_site)?; // (l, i, j, r)
        let o4 = o.reshaped(&[2, 2, 2, 2])?;
        let t = contract(&o4, &theta, &[(2, 1), (3, 2)])?; // (oi, oj, l, r)
        let val = contract(&t, &theta.conj(), &[(0, 1), (1, 2), (2, 0), (3, 3)])?;
        Ok(val.as_scalar().re)
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity_pure(&self, other: &MpsState) -> Result<f64, SimError> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Inner product `<self|other>` with `self` conjugated.
    pub fn overlap(&self, other: &MpsState) -> Result<Complex64, SimError> {
        if self.n_qubits() != other.n_qubits() {
            return Err(SimError::SizeMismatch {
                n_a: self.n_qubits(),
                n_b: other.n_qubits(),
            });
        }
        Ok(self.chain.overlap(&other.chain)?)
    }

    /// Full statevector, qubit 0 the most significant index bit.
    pub fn to_dense(&self) -> Result<Vec<Complex64>, SimError> {
        if self.n_qubits() > DENSIFY_MAX_QUBITS {
            return Err(SimError::TooLargeToDensify {
                n_sites: self.n_qubits(),
                limit: DENSIFY_MAX_QUBITS,
            });
        }
        Ok(self.chain.to_dense()?)
    }

    /// Worst deviation from the canonical-form isometry conditions.
    pub fn canonical_residual(&self) -> Result<f64, SimError> {
        Ok(self.chain.canonical_residual()?)
    }

    fn check_site(&self, site: usize) -> Result<(), SimError> {
        if site >= self.n_qubits() {
            return Err(SimError::SiteOutOfRange {
                site,
                n_sites: self.n_qubits(),
            });
        }
        Ok(())
    }

    fn chain_sites(&self) -> impl Iterator<Item = &DenseTensor> {
        (0..self.chain.len()).map(|i| self.chain.site(i))
    }
}

fn as_square_tensor(m: &Array2<Complex64>, dim: usize) -> Result<DenseTensor, SimError> {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    if rows != dim || cols != dim {
        return Err(SimError::BadMatrixShape {
            rows: dim,
            cols: dim,
            got_rows: rows,
            got_cols: cols,
        });
    }
    Ok(DenseTensor::from_array(m.view()))
}
