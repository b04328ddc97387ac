//! Mixed-state engine: density operators as matrix product operators with
//! fidelity-targeted truncation.
//!
//! Each site tensor carries a fused physical index `p = sigma * 2 + sigma'`
//! over the row (`sigma`) and column (`sigma'`) indices of the local density
//! operator, so the chain machinery treats the operator as a vector with
//! physical extent 4. Unitary gates act as the superoperator `U (.) U^H`,
//! which is unitary in the Hilbert-Schmidt sense and therefore preserves the
//! canonical form; depolarizing channels are not, so they are routed through
//! the canonical center. The trace is restored to 1 after every truncation.

use crate::budget::{FidelityLedger, TruncationRecord};
use crate::chain::{
    check_hermitian, decide_cut, minimal_rank, validate_spectrum, SimError, TensorChain,
    TruncationRule,
};
use crate::circuit::unitarity_deviation;
use crate::tensor::{contract, split_svd, DenseTensor};
use ndarray::{Array2, Axis, Ix2};
use num_complex::Complex64;

/// Largest qubit count [`MpoState::to_dense_matrix`] will materialize.
pub const DENSIFY_MAX_QUBITS: usize = 10;

/// Depolarizing strength after every gate, by gate arity. An `eps` of 0
/// disables the channel; the maximum strengths replace the state on the
/// gate's support with the maximally mixed one.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel {
    pub eps1: f64,
    pub eps2: f64,
}

/// Full depolarization thresholds: `eps = 1 - 1/4^k` for `k` sites maps
/// every input to the maximally mixed state.
pub const DEPOLARIZING_MAX_1Q: f64 = 0.75;
pub const DEPOLARIZING_MAX_2Q: f64 = 0.9375;

impl NoiseModel {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self, SimError> {
        if !(0.0..=DEPOLARIZING_MAX_1Q).contains(&eps1) {
            return Err(SimError::NoiseOutOfRange {
                eps: eps1,
                max: DEPOLARIZING_MAX_1Q,
                sites: 1,
            });
        }
        if !(0.0..=DEPOLARIZING_MAX_2Q).contains(&eps2) {
            return Err(SimError::NoiseOutOfRange {
                eps: eps2,
                max: DEPOLARIZING_MAX_2Q,
                sites: 2,
            });
        }
        Ok(Self { eps1, eps2 })
    }

    pub fn noiseless() -> Self {
        Self { eps1: 0.0, eps2: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.eps1 == 0.0 && self.eps2 == 0.0
    }
}

/// Minimal kept rank meeting `target_f` under the mixed-state rule, with
/// the fidelity actually achieved:
/// `f(k) = sqrt(sum_{i<k} lambda_i^2 / sum_i lambda_i^2)`, the normalized
/// operator-overlap fidelity between the original operator and its rank-`k`
/// truncation.
pub fn truncation_rank_mixed(lambda: &[f64], target_f: f64) -> Result<(usize, f64), SimError> {
    validate_spectrum(lambda)?;
    if !(target_f > 0.0 && target_f <= 1.0) {
        return Err(SimError::TargetOutOfRange(target_f));
    }
    Ok(minimal_rank(lambda, target_f, TruncationRule::MixedFidelity))
}

/// Density operator as a matrix product operator over qubits on a line.
#[derive(Clone, Debug)]
pub struct MpoState {
    chain: TensorChain,
}

impl MpoState {
    /// The projector onto the all-zeros state, `|0..0><0..0|`.
    pub fn zero_state(n_qubits: usize) -> Result<Self, SimError> {
        let mut local = [Complex64::default(); 4];
        local[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            chain: TensorChain::product(n_qubits, 4, &local)?,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.chain.len()
    }

    pub fn center(&self) -> usize {
        self.chain.center()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    pub fn canonicalize(&mut self, site: usize) -> Result<(), SimError> {
        self.check_site(site)?;
        self.chain.move_center_to(site)?;
        Ok(())
    }

    /// Trace of the operator; maintained at 1 by every public operation.
    pub fn trace(&self) -> f64 {
        self.trace_complex().re
    }

    fn trace_complex(&self) -> Complex64 {
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for i in 0..self.chain.len() {
            let site = self.chain.site(i);
            let (l, r) = (site.shape()[0], site.shape()[2]);
            let data = site.data();
            let mut next = vec![Complex64::default(); r];
            for li in 0..l {
                for p in [0usize, 3] {
                    let row = &data[(li * 4 + p) * r..(li * 4 + p) * r + r];
                    for ri in 0..r {
                        next[ri] += v[li] * row[ri];
                    }
                }
            }
            v = next;
        }
        v[0]
    }

    /// `Tr(rho^2)` of the trace-normalized operator.
    pub fn purity(&self) -> f64 {
        trace_product(self, self).re
    }

    /// Apply a unitary gate to one site or two adjacent sites as the
    /// superoperator `U (.) U^H`. Two-site applications truncate the
    /// refreshed bond against the ledger's next target and return the
    /// record; one-site applications change no bond and return `None`.
    pub fn apply_unitary(
        &mut self,
        gate: &Array2<Complex64>,
        sites: &[usize],
        ledger: &mut FidelityLedger,
        chi_cap: Option<usize>,
    ) -> Result<Option<TruncationRecord>, SimError> {
        match sites {
            [site] => {
                self.check_site(*site)?;
                check_gate_shape(gate, 2)?;
                let dev = unitarity_deviation(gate);
                if dev > crate::circuit::UNITARITY_TOL {
                    return Err(SimError::NotUnitary(dev));
                }
                let superop = unitary_superop_1q(gate);
                // Hilbert-Schmidt unitary: canonical flanks survive.
                self.chain.apply_onsite(*site, &superop)?;
                Ok(None)
            }
            [left, right] if *right == *left + 1 => {
                self.check_site(*right)?;
                check_gate_shape(gate, 4)?;
                let dev = unitarity_deviation(gate);
                if dev > crate::circuit::UNITARITY_TOL {
                    return Err(SimError::NotUnitary(dev));
                }
                let superop = unitary_superop_2q(gate);
                let record = self.apply_two_site_superop(&superop, *left, ledger, chi_cap)?;
                Ok(Some(record))
            }
            other => Err(SimError::BadSupport(other.to_vec())),
        }
    }

    /// Apply a depolarizing channel of strength `eps` to one site or two
    /// adjacent sites. A one-site channel changes no bond and returns
    /// `None`; a two-site channel truncates against the ledger like a gate.
    /// `eps = 0` leaves the state untouched.
    pub fn apply_depolarizing(
        &mut self,
        sites: &[usize],
        eps: f64,
        ledger: &mut FidelityLedger,
        chi_cap: Option<usize>,
    ) -> Result<Option<TruncationRecord>, SimError> {
        match sites {
            [site] => {
                self.check_site(*site)?;
                if !(0.0..=DEPOLARIZING_MAX_1Q).contains(&eps) {
                    return Err(SimError::NoiseOutOfRange {
                        eps,
                        max: DEPOLARIZING_MAX_1Q,
                        sites: 1,
                    });
                }
                if eps == 0.0 {
                    return Ok(None);
                }
                // Not a Hilbert-Schmidt isometry: act at the center.
                self.chain.move_center_to(*site)?;
                let superop = depolarizing_superop_1q(eps);
                self.chain.apply_onsite(*site, &superop)?;
                Ok(None)
            }
            [left, right] if *right == *left + 1 => {
                self.check_site(*right)?;
                if !(0.0..=DEPOLARIZING_MAX_2Q).contains(&eps) {
                    return Err(SimError::NoiseOutOfRange {
                        eps,
                        max: DEPOLARIZING_MAX_2Q,
                        sites: 2,
                    });
                }
                if eps == 0.0 {
                    return Ok(None);
                }
                let superop = depolarizing_superop_2q(eps);
                let record = self.apply_two_site_superop(&superop, *left, ledger, chi_cap)?;
                Ok(Some(record))
            }
            other => Err(SimError::BadSupport(other.to_vec())),
        }
    }

    /// Contract a two-site superoperator, given as a (4, 4, 4, 4) tensor
    /// over (p_out_left, p_out_right, p_in_left, p_in_right), into sites
    /// (left, left+1); truncate, restore the trace, and record.
    fn apply_two_site_superop(
        &mut self,
        superop: &DenseTensor,
        left: usize,
        ledger: &mut FidelityLedger,
        chi_cap: Option<usize>,
    ) -> Result<TruncationRecord, SimError> {
        let target_f = ledger.next_target()?;
        self.chain.move_center_to(left)?;
        let theta = self.chain.two_site_theta(left)?;
        let theta = contract(superop, &theta, &[(2, 1), (3, 2)])?.permute(&[2, 0, 1, 3])?;
        let svd = split_svd(&theta, &[0, 1])?;
        let cut = decide_cut(&svd.s, target_f, TruncationRule::MixedFidelity, chi_cap);
        self.chain.install_split(left, &svd, cut.chi_after);
        let trace = self.trace_complex();
        self.chain.scale_center(Complex64::new(1.0, 0.0) / trace);
        ledger.record(cut.achieved_f)?;
        Ok(TruncationRecord {
            gate_index: ledger.completed() - 1,
            bond_site: left,
            chi_before: cut.chi_before,
            chi_after: cut.chi_after,
            target_f,
            achieved_f: cut.achieved_f,
            discarded_weight: cut.discarded_frac,
            capped: cut.capped,
        })
    }

    /// Expectation `Tr(obs * rho) / Tr(rho)` of a Hermitian observable on
    /// one site or two adjacent sites.
    pub fn expectation(&self, obs: &Array2<Complex64>, sites: &[usize]) -> Result<f64, SimError> {
        let (left, arity) = match sites {
            [site] => (*site, 1usize),
            [left, right] if *right == *left + 1 => (*left, 2usize),
            other => return Err(SimError::BadSupport(other.to_vec())),
        };
        self.check_site(left + arity - 1)?;
        check_gate_shape(obs, 1 << arity)?;
        check_hermitian(&DenseTensor::from_array(obs.view()))?;

        let mut v = Array2::<Complex64>::ones((1, 1))
            .into_shape_with_order(1)
            .expect("1-element reshape");
        let mut i = 0usize;
        while i < self.chain.len() {
            if i == left && arity == 2 {
                // v <- sum over (a_i, b_i, a_j, b_j) of
                //   obs[(a_i a_j), (b_i b_j)] * v . A_{p(b_i, a_i)} . B_{p(b_j, a_j)}
                let a_site = self.site_mats(i);
                let b_site = self.site_mats(i + 1);
                let dim_out = b_site[0].shape()[1];
                let mut partial = vec![ndarray::Array1::<Complex64>::zeros(0); 4];
                for (ai, bi) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
                    partial[ai * 2 + bi] = v.dot(&a_site[bi * 2 + ai]);
                }
                let mut out = ndarray::Array1::<Complex64>::zeros(dim_out);
                for (aj, bj) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
                    let mut weighted = ndarray::Array1::<Complex64>::zeros(partial[0].len());
                    for (ai, bi) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
                        let w = obs[[ai * 2 + aj, bi * 2 + bj]];
                        if w.norm_sqr() > 0.0 {
                            weighted.scaled_add(w, &partial[ai * 2 + bi]);
                        }
                    }
                    out += &weighted.dot(&b_site[bj * 2 + aj]);
                }
                v = out;
                i += 2;
            } else if i == left {
                let mats = self.site_mats(i);
                let dim_out = mats[0].shape()[1];
                let mut out = ndarray::Array1::<Complex64>::zeros(dim_out);
                for (a, b) in (0..2).flat_map(|a| (0..2).map(move |b| (a, b))) {
                    let w = obs[[a, b]];
                    if w.norm_sqr() > 0.0 {
                        out.scaled_add(w, &v.dot(&mats[b * 2 + a]));
                    }
                }
                v = out;
                i += 1;
            } else {
                let mats = self.site_mats(i);
                let traced = &mats[0] + &mats[3];
                v = v.dot(&traced);
                i += 1;
            }
        }
        Ok((v[0] / self.trace_complex()).re)
    }

    /// Normalized operator-overlap fidelity
    /// `|Tr(a b)| / sqrt(Tr(a a) Tr(b b))`; insensitive to the scale of
    /// either operator and 1 exactly when they are proportional.
    pub fn fidelity_wang(&self, other: &MpoState) -> Result<f64, SimError> {
        if self.n_qubits() != other.n_qubits() {
            return Err(SimError::SizeMismatch {
                n_a: self.n_qubits(),
                n_b: other.n_qubits(),
            });
        }
        let cross = trace_product(self, other).norm();
        let aa = trace_product(self, self).re;
        let bb = trace_product(other, other).re;
        Ok(cross / (aa * bb).sqrt())
    }

    /// Full `2^n x 2^n` density matrix, qubit 0 the most significant bit of
    /// both indices.
    pub fn to_dense_matrix(&self) -> Result<Array2<Complex64>, SimError> {
        let n = self.n_qubits();
        if n > DENSIFY_MAX_QUBITS {
            return Err(SimError::TooLargeToDensify {
                n_sites: n,
                limit: DENSIFY_MAX_QUBITS,
            });
        }
        let fused = self.chain.to_dense()?;
        let dim = 1usize << n;
        let mut out = Array2::<Complex64>::default((dim, dim));
        for row in 0..dim {
            for col in 0..dim {
                let mut fused_idx = 0usize;
                for k in 0..n {
                    let sigma = (row >> (n - 1 - k)) & 1;
                    let sigma_p = (col >> (n - 1 - k)) & 1;
                    fused_idx = fused_idx * 4 + (sigma * 2 + sigma_p);
                }
                out[[row, col]] = fused[fused_idx];
            }
        }
        Ok(out)
    }

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

    /// The four (left bond x right bond) matrices of one site, indexed by
    /// the fused physical value.
    fn site_mats(&self, i: usize) -> [Array2<Complex64>; 4] {
        let view = self.chain.site(i).view();
        std::array::from_fn(|p| {
            view.index_axis(Axis(1), p)
                .into_dimensionality::<Ix2>()
                .expect("site tensors are rank 3")
                .to_owned()
        })
    }
}

/// `Tr(a b)` via a transfer contraction; no conjugation, the column index
/// of each local factor of `a` pairs with the row index of `b`.
fn trace_product(a: &MpoState, b: &MpoState) -> Complex64 {
    debug_assert_eq!(a.n_qubits(), b.n_qubits());
    let swap = [0usize, 2, 1, 3];
    let mut env = Array2::<Complex64>::ones((1, 1));
    for i in 0..a.chain.len() {
        let a_mats = a.site_mats(i);
        let b_mats = b.site_mats(i);
        let (ra, rb) = (a_mats[0].shape()[1], b_mats[0].shape()[1]);
        let mut next = Array2::<Complex64>::zeros((ra, rb));
        for p in 0..4 {
            next += &a_mats[p].t().dot(&env.dot(&b_mats[swap[p]]));
        }
        env = next;
    }
    env[[0, 0]]
}

fn check_gate_shape(m: &Array2<Complex64>, dim: usize) -> Result<(), SimError> {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    if rows != dim || cols != dim {
        return Err(SimError::BadMatrixShape {
            rows: dim,
            cols: dim,
            got_rows: rows,
            got_cols: cols,
        });
    }
    Ok(())
}

/// One-site superoperator `U (.) U^H` over the fused index:
/// `S[p(a,b), q(c,d)] = U[a,c] * conj(U[b,d])`.
fn unitary_superop_1q(u: &Array2<Complex64>) -> DenseTensor {
    let mut data = vec![Complex64::default(); 16];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    data[(a * 2 + b) * 4 + (c * 2 + d)] = u[[a, c]] * u[[b, d]].conj();
                }
            }
        }
    }
    DenseTensor::from_shape_vec(&[4, 4], data).expect("16 entries")
}

/// Two-site superoperator of a 4x4 unitary as a (4, 4, 4, 4) tensor over
/// (p_out_left, p_out_right, p_in_left, p_in_right) fused indices.
fn unitary_superop_2q(u: &Array2<Complex64>) -> DenseTensor {
    weighted_superop_2q(&[(1.0, u.clone())])
}

/// Superoperator of the mixture `sum_k w_k U_k (.) U_k^H` in the same
/// layout as [`unitary_superop_2q`].
fn weighted_superop_2q(terms: &[(f64, Array2<Complex64>)]) -> DenseTensor {
    let mut data = vec![Complex64::default(); 256];
    for (w, u) in terms {
        for ai in 0..2usize {
            for aj in 0..2usize {
                for bi in 0..2usize {
                    for bj in 0..2usize {
                        for ci in 0..2usize {
                            for cj in 0..2usize {
                                for di in 0..2usize {
                                    for dj in 0..2usize {
                                        // p_out_left = (ai, bi), p_out_right = (aj, bj)
                                        // p_in_left = (ci, di), p_in_right = (cj, dj)
                                        let idx = ((ai * 2 + bi) * 4 + (aj * 2 + bj)) * 16
                                            + (ci * 2 + di) * 4
                                            + (cj * 2 + dj);
                                        data[idx] += *w
                                            * u[[ai * 2 + aj, ci * 2 + cj]]
                                            * u[[bi * 2 + bj, di * 2 + dj]].conj();
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    DenseTensor::from_shape_vec(&[4, 4, 4, 4], data).expect("256 entries")
}

fn pauli_matrices() -> [Array2<Complex64>; 4] {
    let z = Complex64::default;
    let c = Complex64::new;
    [
        ndarray::array![[c(1.0, 0.0), z()], [z(), c(1.0, 0.0)]],
        ndarray::array![[z(), c(1.0, 0.0)], [c(1.0, 0.0), z()]],
        ndarray::array![[z(), c(0.0, -1.0)], [c(0.0, 1.0), z()]],
        ndarray::array![[c(1.0, 0.0), z()], [z(), c(-1.0, 0.0)]],
    ]
}

/// One-site depolarizing channel
/// `rho -> (1 - eps) rho + (eps / 3) sum_{P in {X,Y,Z}} P rho P^H`
/// as a 4x4 superoperator over the fused index.
fn depolarizing_superop_1q(eps: f64) -> DenseTensor {
    let paulis = pauli_matrices();
    let mut data = vec![Complex64::default(); 16];
    for (weight, p) in [(1.0 - eps, 0usize), (eps / 3.0, 1), (eps / 3.0, 2), (eps / 3.0, 3)] {
        let u = &paulis[p];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        data[(a * 2 + b) * 4 + (c * 2 + d)] +=
                            weight * u[[a, c]] * u[[b, d]].conj();
                    }
                }
            }
        }
    }
    DenseTensor::from_shape_vec(&[4, 4], data).expect("16 entries")
}

/// Two-site depolarizing channel
/// `rho -> (1 - eps) rho + (eps / 15) sum_{(P,Q) != (I,I)} (P x Q) rho (P x Q)^H`
/// as a (4, 4, 4, 4) superoperator tensor.
fn depolarizing_superop_2q(eps: f64) -> DenseTensor {
    let paulis = pauli_matrices();
    let mut terms = Vec::with_capacity(16);
    for (pi, p) in paulis.iter().enumerate() {
        for (qi, q) in paulis.iter().enumerate() {
            let weight = if pi == 0 && qi == 0 {
                1.0 - eps
            } else {
                eps / 15.0
            };
            terms.push((weight, kron2(p, q)));
        }
    }
    weighted_superop_2q(&terms)
}

/// Kronecker product of two 2x2 matrices, first factor most significant.
fn kron2(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::<Complex64>::default((4, 4));
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[[i * 2 + k, j * 2 + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}
