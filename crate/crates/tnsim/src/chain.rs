//! Shared canonical-chain machinery behind the pure-state and
//! density-operator engines.
//!
//! A chain is a list of rank-3 site tensors with axes (left bond, physical,
//! right bond) in mixed-canonical form: every site strictly left of `center`
//! is left-normalized, every site strictly right of it right-normalized, and
//! the boundary bonds have extent 1. The physical extent is 2 for pure
//! states and 4 (fused row/column index) for density operators.

use crate::budget::LedgerError;
use crate::tensor::{
    contract, split_qr, split_svd, DenseTensor, QrSide, SvdResult, TensorError, MACHINE_ZERO_REL,
};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state must have at least one site")]
    EmptyChain,
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("bond {bond} out of range for {n_sites} sites")]
    BondOutOfRange { bond: usize, n_sites: usize },
    #[error("operation on sites {left},{right} needs the canonical center adjacent, found it at {center}")]
    CenterMisplaced {
        center: usize,
        left: usize,
        right: usize,
    },
    #[error("expected a {rows}x{cols} matrix, got {got_rows}x{got_cols}")]
    BadMatrixShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operation must act on one site or two adjacent ascending sites, got {0:?}")]
    BadSupport(Vec<usize>),
    #[error("singular values must be a non-empty, finite, non-negative, descending sequence")]
    BadSpectrum,
    #[error("truncation target must lie in (0, 1], got {0}")]
    TargetOutOfRange(f64),
    #[error("noise strength {eps} outside [0, {max}] for a {sites}-site channel")]
    NoiseOutOfRange { eps: f64, max: f64, sites: usize },
    #[error("{n_sites} sites is too large to densify (limit {limit})")]
    TooLargeToDensify { n_sites: usize, limit: usize },
    #[error("states have mismatched shapes: {n_a} vs {n_b} sites")]
    SizeMismatch { n_a: usize, n_b: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// How discarded squared singular-value weight translates into fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TruncationRule {
    /// Squared overlap of the renormalized truncated pure state with the
    /// original: `1 - discarded/total`.
    PureOverlap,
    /// Normalized operator-overlap fidelity of the truncated density
    /// operator with the original: `sqrt(1 - discarded/total)`.
    MixedFidelity,
}

impl TruncationRule {
    fn fidelity(self, discarded_frac: f64) -> f64 {
        match self {
            TruncationRule::PureOverlap => 1.0 - discarded_frac,
            TruncationRule::MixedFidelity => (1.0 - discarded_frac).sqrt(),
        }
    }
}

pub(crate) fn validate_spectrum(s: &[f64]) -> Result<(), SimError> {
    if s.is_empty() {
        return Err(SimError::BadSpectrum);
    }
    let mut prev = f64::INFINITY;
    for &v in s {
        if !v.is_finite() || v < 0.0 || v > prev * (1.0 + 1e-12) {
            return Err(SimError::BadSpectrum);
        }
        prev = v;
    }
    Ok(())
}

/// Minimal kept rank meeting `target` under `rule`, plus the fidelity at
/// that rank. A target of 1.0 keeps everything above the machine-zero
/// threshold and reports the residual discard as exact.
pub(crate) fn minimal_rank(s: &[f64], target: f64, rule: TruncationRule) -> (usize, f64) {
    let total: f64 = s.iter().map(|v| v * v).sum();
    if total <= 0.0 {
        return (1, 1.0);
    }
    if target >= 1.0 {
        let s0 = s[0];
        let k = s
            .iter()
            .take_while(|&&v| v >= MACHINE_ZERO_REL * s0)
            .count()
            .max(1);
        let tail: f64 = s[k..].iter().map(|v| v * v).sum();
        return (k, rule.fidelity(tail / total));
    }
    // Largest squared weight the target allows us to discard.
    let budget = match rule {
        TruncationRule::PureOverlap => (1.0 - target) * total,
        TruncationRule::MixedFidelity => (1.0 - target * target) * total,
    };
    // Grow the discarded tail from the smallest values up.
    let mut tail = 0.0;
    let mut k = s.len();
    while k > 1 {
        let grown = tail + s[k - 1] * s[k - 1];
        if grown > budget {
            break;
        }
        tail = grown;
        k -= 1;
    }
    (k, rule.fidelity(tail / total))
}

/// Outcome of choosing a cut position for one truncation event.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CutDecision {
    pub chi_before: usize,
    pub chi_after: usize,
    pub achieved_f: f64,
    pub discarded_frac: f64,
    /// True when `chi_cap` forced the kept rank below what the target
    /// required.
    pub capped: bool,
}

/// Choose how many singular values to keep: the minimal rank meeting
/// `target`, widened so a near-degenerate multiplet is never split at the
/// boundary, then limited by `chi_cap`.
pub(crate) fn decide_cut(
    s: &[f64],
    target: f64,
    rule: TruncationRule,
    chi_cap: Option<usize>,
) -> CutDecision {
    let (k_rule, _) = minimal_rank(s, target, rule);
    let mut k = k_rule;
    while k < s.len() && s[k] >= s[k - 1] * (1.0 - 1e-12) {
        k += 1;
    }
    let mut capped = false;
    if let Some(cap) = chi_cap {
        let cap = cap.max(1);
        if cap < k {
            k = cap;
            capped = cap < k_rule;
        }
    }
    let total: f64 = s.iter().map(|v| v * v).sum();
    let (achieved_f, discarded_frac) = if total <= 0.0 {
        (1.0, 0.0)
    } else {
        let tail: f64 = s[k..].iter().map(|v| v * v).sum();
        let frac = tail / total;
        (rule.fidelity(frac), frac)
    };
    CutDecision {
        chi_before: s.len(),
        chi_after: k,
        achieved_f,
        discarded_frac,
        capped,
    }
}

/// Mixed-canonical chain of rank-3 site tensors.
#[derive(Clone, Debug)]
pub(crate) struct TensorChain {
    sites: Vec<DenseTensor>,
    phys_dim: usize,
    center: usize,
}

impl TensorChain {
    /// Uncorrelated chain with the same local vector on every site.
    /// All bonds have extent 1, so any center position is canonical.
    pub fn product(n_sites: usize, phys_dim: usize, local: &[Complex64]) -> Result<Self, SimError> {
        if n_sites == 0 {
            return Err(SimError::EmptyChain);
        }
        debug_assert_eq!(local.len(), phys_dim);
        let site = DenseTensor::from_shape_vec(&[1, phys_dim, 1], local.to_vec())?;
        Ok(Self {
            sites: vec![site; n_sites],
            phys_dim,
            center: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    /// Extent of each internal bond, left to right (`len() - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1]
            .iter()
            .map(|s| s.shape()[2])
            .collect()
    }

    /// Sweep the canonical center to `target` with QR splits.
    pub fn move_center_to(&mut self, target: usize) -> Result<(), TensorError> {
        debug_assert!(target < self.len());
        while self.center < target {
            let i = self.center;
            let (q, r) = split_qr(&self.sites[i], &[0, 1], QrSide::Left)?;
            self.sites[i] = q;
            self.sites[i + 1] = contract(&r, &self.sites[i + 1], &[(1, 0)])?;
            self.center = i + 1;
        }
        while self.center > target {
            let i = self.center;
            let (l, q) = split_qr(&self.sites[i], &[0], QrSide::Right)?;
            self.sites[i] = q;
            self.sites[i - 1] = contract(&self.sites[i - 1], &l, &[(2, 0)])?;
            self.center = i - 1;
        }
        Ok(())
    }

    /// Frobenius norm of the center tensor; equals the norm of the whole
    /// chain in canonical form.
    pub fn center_norm(&self) -> f64 {
        self.sites[self.center].frobenius_norm()
    }

    pub fn scale_center(&mut self, factor: Complex64) {
        self.sites[self.center].scale_mut(factor);
    }

    /// Contract a (d_out, d_in) matrix into the physical axis of one site.
    /// Canonical flanks survive only if the matrix is an isometry in the
    /// relevant sense; callers enforce that or route through the center.
    pub fn apply_onsite(&mut self, site: usize, m: &DenseTensor) -> Result<(), TensorError> {
        let t = contract(m, &self.sites[site], &[(1, 1)])?; // (d_out, l, r)
        self.sites[site] = t.permute(&[1, 0, 2])?;
        Ok(())
    }

    /// Two-site tensor (l, d, d, r) of sites (left, left+1).
    pub fn two_site_theta(&self, left: usize) -> Result<DenseTensor, TensorError> {
        contract(&self.sites[left], &self.sites[left + 1], &[(2, 0)])
    }

    /// Install the rank-`k` truncation of a two-site SVD back into sites
    /// (left, left+1). The singular values are absorbed into the right
    /// factor, which becomes the new center; no renormalization is applied.
    pub fn install_split(&mut self, left: usize, svd: &SvdResult, k: usize) {
        let t = svd.truncate(k);
        let kk = t.s.len();
        let mut vh = t.vh.into_array();
        {
            let flat = vh.len() / kk;
            let mut mat = vh
                .view_mut()
                .into_shape_with_order((kk, flat))
                .expect("row-major reshape");
            for (i, mut row) in mat.outer_iter_mut().enumerate() {
                row.mapv_inplace(|v| v * t.s[i]);
            }
        }
        self.sites[left] = t.u;
        self.sites[left + 1] = DenseTensor::from_array(vh);
        self.center = left + 1;
    }

    /// Singular values across `bond`; requires the center on one side of it.
    pub fn schmidt_at(&self, bond: usize) -> Result<Vec<f64>, TensorError> {
        debug_assert!(self.center == bond || self.center == bond + 1);
        let svd = if self.center == bond {
            split_svd(&self.sites[self.center], &[0, 1])?
        } else {
            split_svd(&self.sites[self.center], &[0])?
        };
        Ok(svd.s)
    }

    /// Inner product `<self|other>` with `self` conjugated entrywise.
    pub fn overlap(&self, other: &TensorChain) -> Result<Complex64, TensorError> {
        debug_assert_eq!(self.len(), other.len());
        debug_assert_eq!(self.phys_dim, other.phys_dim);
        let one = Complex64::new(1.0, 0.0);
        let mut env = DenseTensor::from_shape_vec(&[1, 1], vec![one])?;
        for (a, b) in self.sites.iter().zip(other.sites.iter()) {
            let t = contract(&env, b, &[(1, 0)])?; // (la, d, rb)
            env = contract(&a.conj(), &t, &[(0, 0), (1, 1)])?; // (ra, rb)
        }
        Ok(env.as_scalar())
    }

    /// Full contraction into a `phys_dim^n` vector, site 0 slowest index.
    pub fn to_dense(&self) -> Result<Vec<Complex64>, TensorError> {
        let d = self.phys_dim;
        let r0 = self.sites[0].shape()[2];
        let mut acc = self.sites[0].clone().reshaped(&[d, r0])?;
        for site in &self.sites[1..] {
            let t = contract(&acc, site, &[(1, 0)])?; // (D, d, r)
            let shape = [t.shape()[0] * d, t.shape()[2]];
            acc = t.reshaped(&shape)?;
        }
        let len = acc.shape()[0];
        Ok(acc.reshaped(&[len])?.data().to_vec())
    }

    /// Worst deviation from the canonical-form isometry conditions:
    /// `Q^H Q = I` left of the center and `Q Q^H = I` right of it.
    pub fn canonical_residual(&self) -> Result<f64, TensorError> {
        let mut worst: f64 = 0.0;
        for (i, site) in self.sites.iter().enumerate() {
            let gram = if i < self.center {
                contract(&site.conj(), site, &[(0, 0), (1, 1)])?
            } else if i > self.center {
                contract(site, &site.conj(), &[(1, 1), (2, 2)])?
            } else {
                continue;
            };
            let dim = gram.shape()[0];
            for a in 0..dim {
                for b in 0..dim {
                    let expect = if a == b {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::default()
                    };
                    worst = worst.max((gram.get(&[a, b]) - expect).norm());
                }
            }
        }
        Ok(worst)
    }
}

pub(crate) fn check_unitary(m: &DenseTensor) -> Result<(), SimError> {
    let gram = contract(&m.conj(), m, &[(0, 0)])?;
    let dim = gram.shape()[0];
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            };
            dev = dev.max((gram.get(&[i, j]) - expect).norm());
        }
    }
    if dev > crate::circuit::UNITARITY_TOL {
        return Err(SimError::NotUnitary(dev));
    }
    Ok(())
}

pub(crate) fn check_hermitian(m: &DenseTensor) -> Result<(), SimError> {
    let dim = m.shape()[0];
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            dev = dev.max((m.get(&[i, j]) - m.get(&[j, i]).conj()).norm());
        }
    }
    if dev > crate::circuit::UNITARITY_TOL {
        return Err(SimError::NotHermitian(dev));
    }
    Ok(())
}
