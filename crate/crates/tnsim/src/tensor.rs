//! Dense complex tensors and the contraction / factorization primitives the
//! chain engines are built from.
//!
//! Tensors are stored row-major over their declared shape order, so reshapes
//! of contiguous data are metadata-only. All arithmetic is `Complex64`;
//! contractions route through a permute-reshape-matmul pipeline.

use ndarray::{ArrayD, ArrayViewD, IxDyn};
use ndarray_linalg::{JobSvd, SVDDC, QR};
use num_complex::Complex64;
use thiserror::Error;

/// Relative threshold below which a singular value counts as zero:
/// `s_i < MACHINE_ZERO_REL * s_0` is treated as exact rank deficiency.
pub const MACHINE_ZERO_REL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} implies {expected} elements, got {actual}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("zero extent at axis {axis}")]
    ZeroExtent { axis: usize },
    #[error("non-finite entry at linear index {index}")]
    NonFinite { index: usize },
    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("axis {axis} listed more than once")]
    DuplicateAxis { axis: usize },
    #[error(
        "extent mismatch: axis {axis_a} of lhs has extent {extent_a}, \
         axis {axis_b} of rhs has extent {extent_b}"
    )]
    ExtentMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },
    #[error("split axes must form a nonempty proper subset of the {rank} axes")]
    InvalidSplit { rank: usize },
    #[error("permutation must list each of the {rank} axes exactly once")]
    BadPermutation { rank: usize },
    #[error("{op} did not converge on tensor of shape {shape:?}")]
    Factorization { op: &'static str, shape: Vec<usize> },
}

/// Dense complex tensor with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    arr: ArrayD<Complex64>,
}

impl DenseTensor {
    /// Build a tensor from a shape and row-major data, validating extents,
    /// length, and finiteness.
    pub fn from_shape_vec(shape: &[usize], data: Vec<Complex64>) -> Result<Self, TensorError> {
        for (axis, &e) in shape.iter().enumerate() {
            if e == 0 {
                return Err(TensorError::ZeroExtent { axis });
            }
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::ShapeDataMismatch {
                shape: shape.to_vec(),
                expected,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TensorError::NonFinite { index });
        }
        let arr = ArrayD::from_shape_vec(IxDyn(shape), data).expect("length checked above");
        Ok(Self { arr })
    }

    /// Wrap an ndarray of any dimensionality, copying to standard layout if
    /// necessary.
    pub fn from_array<S, D>(arr: ndarray::ArrayBase<S, D>) -> Self
    where
        S: ndarray::Data<Elem = Complex64>,
        D: ndarray::Dimension,
    {
        let dyn_arr = arr.view().into_dyn().as_standard_layout().to_owned();
        Self { arr: dyn_arr }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            arr: ArrayD::zeros(IxDyn(shape)),
        }
    }

    /// Rank-0 tensor holding a single value.
    pub fn scalar(value: Complex64) -> Self {
        Self {
            arr: ArrayD::from_elem(IxDyn(&[]), value),
        }
    }

    pub fn shape(&self) -> &[usize] {
        self.arr.shape()
    }

    pub fn ndim(&self) -> usize {
        self.arr.ndim()
    }

    pub fn len(&self) -> usize {
        self.arr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arr.is_empty()
    }

    /// Row-major data slice. Storage is always contiguous.
    pub fn data(&self) -> &[Complex64] {
        self.arr.as_slice().expect("DenseTensor storage is contiguous")
    }

    pub fn view(&self) -> ArrayViewD<'_, Complex64> {
        self.arr.view()
    }

    pub fn into_array(self) -> ArrayD<Complex64> {
        self.arr
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.arr[IxDyn(index)]
    }

    /// The single value of a rank-0 or single-element tensor.
    pub fn as_scalar(&self) -> Complex64 {
        debug_assert_eq!(self.len(), 1);
        self.data()[0]
    }

    /// Metadata-only reshape; the total element count must be preserved.
    pub fn reshaped(self, shape: &[usize]) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != self.len() {
            return Err(TensorError::ShapeDataMismatch {
                shape: shape.to_vec(),
                expected,
                actual: self.len(),
            });
        }
        let arr = self
            .arr
            .into_shape_with_order(IxDyn(shape))
            .expect("contiguous row-major reshape");
        Ok(Self { arr })
    }

    pub fn conj(&self) -> Self {
        Self {
            arr: self.arr.mapv(|v| v.conj()),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            arr: self.arr.mapv(|v| v * factor),
        }
    }

    pub fn scale_mut(&mut self, factor: Complex64) {
        self.arr.mapv_inplace(|v| v * factor);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn validate_axes(&self, axes: &[usize]) -> Result<(), TensorError> {
        let rank = self.ndim();
        for (i, &a) in axes.iter().enumerate() {
            if a >= rank {
                return Err(TensorError::AxisOutOfRange { axis: a, rank });
            }
            if axes[..i].contains(&a) {
                return Err(TensorError::DuplicateAxis { axis: a });
            }
        }
        Ok(())
    }

    /// Copy with axes permuted into `order` (standard layout output).
    fn permuted(&self, order: &[usize]) -> ArrayD<Complex64> {
        self.arr
            .view()
            .permuted_axes(IxDyn(order))
            .as_standard_layout()
            .to_owned()
    }

    /// Reorder axes so that output axis `i` is input axis `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self, TensorError> {
        if order.len() != self.ndim() {
            return Err(TensorError::BadPermutation { rank: self.ndim() });
        }
        self.validate_axes(order)?;
        Ok(Self {
            arr: self.permuted(order),
        })
    }
}

/// Pairwise tensor contraction: sum over the paired axes of `a` and `b`.
///
/// The result's axes are the unpaired axes of `a` (in order) followed by the
/// unpaired axes of `b`. Contracting all axes yields a rank-0 tensor.
pub fn contract(
    a: &DenseTensor,
    b: &DenseTensor,
    axis_pairs: &[(usize, usize)],
) -> Result<DenseTensor, TensorError> {
    let a_axes: Vec<usize> = axis_pairs.iter().map(|p| p.0).collect();
    let b_axes: Vec<usize> = axis_pairs.iter().map(|p| p.1).collect();
    a.validate_axes(&a_axes)?;
    b.validate_axes(&b_axes)?;
    for &(ax_a, ax_b) in axis_pairs {
        let ea = a.shape()[ax_a];
        let eb = b.shape()[ax_b];
        if ea != eb {
            return Err(TensorError::ExtentMismatch {
                axis_a: ax_a,
                extent_a: ea,
                axis_b: ax_b,
                extent_b: eb,
            });
        }
    }

    let a_free: Vec<usize> = (0..a.ndim()).filter(|ax| !a_axes.contains(ax)).collect();
    let b_free: Vec<usize> = (0..b.ndim()).filter(|ax| !b_axes.contains(ax)).collect();

    let m: usize = a_free.iter().map(|&ax| a.shape()[ax]).product();
    let k: usize = a_axes.iter().map(|&ax| a.shape()[ax]).product();
    let n: usize = b_free.iter().map(|&ax| b.shape()[ax]).product();

    let mut a_order = a_free.clone();
    a_order.extend_from_slice(&a_axes);
    let mut b_order = b_axes.clone();
    b_order.extend_from_slice(&b_free);

    let a_mat = a
        .permuted(&a_order)
        .into_shape_with_order((m, k))
        .expect("row-major reshape");
    let b_mat = b
        .permuted(&b_order)
        .into_shape_with_order((k, n))
        .expect("row-major reshape");

    let prod = a_mat.dot(&b_mat);

    let mut out_shape: Vec<usize> = a_free.iter().map(|&ax| a.shape()[ax]).collect();
    out_shape.extend(b_free.iter().map(|&ax| b.shape()[ax]));
    let arr = prod
        .into_dyn()
        .into_shape_with_order(IxDyn(&out_shape))
        .expect("row-major reshape");
    Ok(DenseTensor { arr })
}

/// Result of splitting a tensor across a bipartition of its axes.
///
/// `u` carries the left axes plus a new trailing bond axis, `vh` a leading
/// bond axis plus the right axes. Singular values are non-negative and
/// descending; `u` has orthonormal columns and `vh` orthonormal rows over
/// the fused bipartition.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseTensor,
    pub s: Vec<f64>,
    pub vh: DenseTensor,
}

impl SvdResult {
    /// Count of singular values above the machine-zero threshold.
    pub fn rank(&self) -> usize {
        match self.s.first() {
            None => 0,
            Some(&s0) if s0 <= 0.0 => 0,
            Some(&s0) => self.s.iter().take_while(|&&v| v >= MACHINE_ZERO_REL * s0).count(),
        }
    }

    /// Keep only the leading `k` singular triplets.
    pub fn truncate(&self, k: usize) -> SvdResult {
        let k = k.min(self.s.len()).max(1);
        let u_shape = self.u.shape().to_vec();
        let vh_shape = self.vh.shape().to_vec();
        let u = self
            .u
            .view()
            .into_shape_with_order(IxDyn(&[self.u.len() / u_shape[u_shape.len() - 1], u_shape[u_shape.len() - 1]]))
            .expect("reshape")
            .slice(ndarray::s![.., ..k])
            .to_owned();
        let mut u_new_shape = u_shape.clone();
        *u_new_shape.last_mut().unwrap() = k;
        let vh = self
            .vh
            .view()
            .into_shape_with_order(IxDyn(&[vh_shape[0], self.vh.len() / vh_shape[0]]))
            .expect("reshape")
            .slice(ndarray::s![..k, ..])
            .to_owned();
        let mut vh_new_shape = vh_shape.clone();
        vh_new_shape[0] = k;
        SvdResult {
            u: DenseTensor::from_array(u)
                .reshaped(&u_new_shape)
                .expect("shape product preserved"),
            s: self.s[..k].to_vec(),
            vh: DenseTensor::from_array(vh)
                .reshaped(&vh_new_shape)
                .expect("shape product preserved"),
        }
    }
}

fn split_shapes(t: &DenseTensor, left_axes: &[usize]) -> Result<(Vec<usize>, Vec<usize>), TensorError> {
    t.validate_axes(left_axes)?;
    if left_axes.is_empty() || left_axes.len() >= t.ndim() {
        return Err(TensorError::InvalidSplit { rank: t.ndim() });
    }
    let mut left: Vec<usize> = left_axes.to_vec();
    left.sort_unstable();
    let right: Vec<usize> = (0..t.ndim()).filter(|ax| !left.contains(ax)).collect();
    Ok((left, right))
}

/// Singular value decomposition across the bipartition (`left_axes` | rest).
///
/// Axes within each side keep ascending order. The contraction
/// `u · diag(s) · vh` over the bond axis reproduces the input.
pub fn split_svd(t: &DenseTensor, left_axes: &[usize]) -> Result<SvdResult, TensorError> {
    let (left, right) = split_shapes(t, left_axes)?;
    let left_extents: Vec<usize> = left.iter().map(|&ax| t.shape()[ax]).collect();
    let right_extents: Vec<usize> = right.iter().map(|&ax| t.shape()[ax]).collect();
    let m: usize = left_extents.iter().product();
    let n: usize = right_extents.iter().product();

    let mut order = left.clone();
    order.extend_from_slice(&right);
    let mat = t
        .permuted(&order)
        .into_shape_with_order((m, n))
        .expect("row-major reshape");

    let (u_opt, s, vh_opt) = mat.svddc(JobSvd::Some).map_err(|_| TensorError::Factorization {
        op: "svd",
        shape: t.shape().to_vec(),
    })?;
    let u = u_opt.expect("JobSvd::Some returns U");
    let vh = vh_opt.expect("JobSvd::Some returns V^H");
    let k = s.len();

    let mut u_shape = left_extents;
    u_shape.push(k);
    let mut vh_shape = vec![k];
    vh_shape.extend(right_extents);

    Ok(SvdResult {
        u: DenseTensor::from_array(u).reshaped(&u_shape)?,
        s: s.to_vec(),
        vh: DenseTensor::from_array(vh).reshaped(&vh_shape)?,
    })
}

/// Which factor of a [`split_qr`] carries the orthonormality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrSide {
    /// First factor has orthonormal columns (Q†Q = I).
    Left,
    /// Second factor has orthonormal rows (F F† = I).
    Right,
}

/// QR-style split across the bipartition (`left_axes` | rest).
///
/// `side == Left` returns (Q, R) with Q left-normalized; `side == Right`
/// returns (L, Q) with Q right-normalized. The bond axis is trailing on the
/// first factor and leading on the second.
pub fn split_qr(
    t: &DenseTensor,
    left_axes: &[usize],
    side: QrSide,
) -> Result<(DenseTensor, DenseTensor), TensorError> {
    let (left, right) = split_shapes(t, left_axes)?;
    let left_extents: Vec<usize> = left.iter().map(|&ax| t.shape()[ax]).collect();
    let right_extents: Vec<usize> = right.iter().map(|&ax| t.shape()[ax]).collect();
    let m: usize = left_extents.iter().product();
    let n: usize = right_extents.iter().product();

    let mut order = left.clone();
    order.extend_from_slice(&right);
    let mat = t
        .permuted(&order)
        .into_shape_with_order((m, n))
        .expect("row-major reshape");

    let factorization_err = || TensorError::Factorization {
        op: "qr",
        shape: t.shape().to_vec(),
    };

    let (first, second, k) = match side {
        QrSide::Left => {
            let (q, r) = mat.qr().map_err(|_| factorization_err())?;
            let k = q.shape()[1];
            (q, r, k)
        }
        QrSide::Right => {
            // LQ via QR of the adjoint: M = (Q̂ R̂)† = R̂† Q̂†.
            let adj = mat.t().mapv(|v| v.conj());
            let (q_hat, r_hat) = adj.qr().map_err(|_| factorization_err())?;
            let l = r_hat.t().mapv(|v| v.conj());
            let q = q_hat.t().mapv(|v| v.conj());
            let k = l.shape()[1];
            (l, q, k)
        }
    };

    let mut first_shape = left_extents;
    first_shape.push(k);
    let mut second_shape = vec![k];
    second_shape.extend(right_extents);

    Ok((
        DenseTensor::from_array(first).reshaped(&first_shape)?,
        DenseTensor::from_array(second).reshaped(&second_shape)?,
    ))
}

/// Reassemble `u · diag(s) · vh` over the bond axis.
pub fn recompose_svd(r: &SvdResult) -> Result<DenseTensor, TensorError> {
    let k = r.s.len();
    let bond_axis_u = r.u.ndim() - 1;
    let mut scaled = r.vh.clone().into_array();
    // Scale the leading bond axis of vh by the singular values.
    let flat_len = scaled.len() / k;
    {
        let mut mat = scaled
            .view_mut()
            .into_shape_with_order((k, flat_len))
            .expect("row-major reshape");
        for (i, mut row) in mat.outer_iter_mut().enumerate() {
            row.mapv_inplace(|v| v * r.s[i]);
        }
    }
    let vh_scaled = DenseTensor { arr: scaled };
    contract(&r.u, &vh_scaled, &[(bond_axis_u, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
        let len: usize = shape.iter().product();
        let data: Vec<Complex64> = (0..len)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        DenseTensor::from_shape_vec(shape, data).unwrap()
    }

    /// Independent oracle: naive triple-loop matrix product.
    fn naive_matmul(a: &DenseTensor, b: &DenseTensor) -> Vec<Complex64> {
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let n = b.shape()[1];
        let mut out = vec![Complex64::default(); m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = Complex64::default();
                for l in 0..k {
                    acc += a.data()[i * k + l] * b.data()[l * n + j];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    #[test]
    fn contract_identity_on_vector() {
        let eye = DenseTensor::from_shape_vec(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let v = DenseTensor::from_shape_vec(&[2], vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let out = contract(&eye, &v, &[(1, 0)]).unwrap();
        assert_eq!(out.shape(), &[2]);
        assert!((out.data()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(out.data()[1].norm() < 1e-15);
    }

    #[test]
    fn contract_pauli_x_flips() {
        let x = DenseTensor::from_shape_vec(
            &[2, 2],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let v = DenseTensor::from_shape_vec(&[2], vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let out = contract(&x, &v, &[(1, 0)]).unwrap();
        assert!(out.data()[0].norm() < 1e-15);
        assert!((out.data()[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn contract_matches_naive_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_tensor(&[3, 4], &mut rng);
        let b = random_tensor(&[4, 5], &mut rng);
        let fast = contract(&a, &b, &[(1, 0)]).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.data().iter().zip(slow.iter()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn contract_extent_mismatch_reports_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_tensor(&[3, 4], &mut rng);
        let b = random_tensor(&[5, 2], &mut rng);
        let err = contract(&a, &b, &[(1, 0)]).unwrap_err();
        match err {
            TensorError::ExtentMismatch {
                axis_a, extent_a, axis_b, extent_b,
            } => {
                assert_eq!((axis_a, extent_a, axis_b, extent_b), (1, 4, 0, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn contract_full_reduction_gives_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_tensor(&[2, 3], &mut rng);
        let out = contract(&a, &a.conj(), &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(out.ndim(), 0);
        let expect: f64 = a.data().iter().map(|v| v.norm_sqr()).sum();
        assert!((out.as_scalar().re - expect).abs() < 1e-12);
        assert!(out.as_scalar().im.abs() < 1e-12);
    }

    #[test]
    fn contract_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tensor(&[4, 3, 2], &mut rng);
        let b = random_tensor(&[3, 5], &mut rng);
        let alpha = c(0.7, -1.3);
        let lhs = contract(&a.scaled(alpha), &b, &[(1, 0)]).unwrap();
        let rhs = contract(&a, &b, &[(1, 0)]).unwrap().scaled(alpha);
        for (x, y) in lhs.data().iter().zip(rhs.data().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn svd_of_diagonal_matrix() {
        let t = DenseTensor::from_shape_vec(
            &[2, 2],
            vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
        )
        .unwrap();
        let r = split_svd(&t, &[0]).unwrap();
        assert!((r.s[0] - 4.0).abs() < 1e-12);
        assert!((r.s[1] - 3.0).abs() < 1e-12);
        assert_eq!(r.rank(), 2);
    }

    #[test]
    fn svd_of_identity() {
        let t = DenseTensor::from_shape_vec(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let r = split_svd(&t, &[0]).unwrap();
        assert!((r.s[0] - 1.0).abs() < 1e-12);
        assert!((r.s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tensor(&[4, 6], &mut rng);
        let r = split_svd(&t, &[0]).unwrap();
        let back = recompose_svd(&r).unwrap();
        let num: f64 = back
            .data()
            .iter()
            .zip(t.data())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = t.frobenius_norm();
        assert!(num / den < 1e-12, "relative error {}", num / den);
    }

    #[test]
    fn svd_multiaxis_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_tensor(&[3, 2, 2, 4], &mut rng);
        let r = split_svd(&t, &[0, 1]).unwrap();
        assert_eq!(r.u.shape()[..2], [3, 2]);
        assert_eq!(&r.vh.shape()[1..], &[2, 4]);
        let back = recompose_svd(&r).unwrap();
        let diff: f64 = back
            .data()
            .iter()
            .zip(t.data())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff / t.frobenius_norm() < 1e-10);
    }

    #[test]
    fn qr_identity_up_to_phase() {
        let t = DenseTensor::from_shape_vec(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let (q, r) = split_qr(&t, &[0], QrSide::Left).unwrap();
        // Q and R are each diagonal with unit-modulus entries.
        for i in 0..2 {
            for j in 0..2 {
                let qv = q.get(&[i, j]).norm();
                let rv = r.get(&[i, j]).norm();
                if i == j {
                    assert!((qv - 1.0).abs() < 1e-12);
                    assert!((rv - 1.0).abs() < 1e-12);
                } else {
                    assert!(qv < 1e-12);
                    assert!(rv < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qr_left_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_tensor(&[6, 3], &mut rng);
        let (q, r) = split_qr(&t, &[0], QrSide::Left).unwrap();
        let gram = contract(&q.conj(), &q, &[(0, 0)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(&[i, j]) - c(expect, 0.0)).norm() < 1e-12);
            }
        }
        // Product reproduces the input.
        let back = contract(&q, &r, &[(1, 0)]).unwrap();
        for (x, y) in back.data().iter().zip(t.data()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn qr_right_orthonormal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_tensor(&[3, 6], &mut rng);
        let (l, q) = split_qr(&t, &[0], QrSide::Right).unwrap();
        let gram = contract(&q, &q.conj(), &[(1, 1)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(&[i, j]) - c(expect, 0.0)).norm() < 1e-12);
            }
        }
        let back = contract(&l, &q, &[(1, 0)]).unwrap();
        for (x, y) in back.data().iter().zip(t.data()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn split_rejects_improper_axis_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = random_tensor(&[2, 3], &mut rng);
        assert!(matches!(
            split_svd(&t, &[]),
            Err(TensorError::InvalidSplit { .. })
        ));
        assert!(matches!(
            split_svd(&t, &[0, 1]),
            Err(TensorError::InvalidSplit { .. })
        ));
        assert!(matches!(
            split_svd(&t, &[5]),
            Err(TensorError::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn from_shape_vec_rejects_bad_input() {
        assert!(matches!(
            DenseTensor::from_shape_vec(&[2, 2], vec![c(1.0, 0.0); 3]),
            Err(TensorError::ShapeDataMismatch { .. })
        ));
        assert!(matches!(
            DenseTensor::from_shape_vec(&[2, 0], vec![]),
            Err(TensorError::ZeroExtent { axis: 1 })
        ));
        assert!(matches!(
            DenseTensor::from_shape_vec(&[1], vec![c(f64::NAN, 0.0)]),
            Err(TensorError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn normalized_state_singular_values_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut t = random_tensor(&[8, 16], &mut rng);
        let norm = t.frobenius_norm();
        t.scale_mut(c(1.0 / norm, 0.0));
        let r = split_svd(&t, &[0]).unwrap();
        let total: f64 = r.s.iter().map(|v| v * v).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn permute_maps_output_axis_to_input_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = random_tensor(&[2, 3, 4], &mut rng);
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(p.get(&[k, i, j]), t.get(&[i, j, k]));
                }
            }
        }
        assert!(matches!(
            t.permute(&[0, 1]),
            Err(TensorError::BadPermutation { rank: 3 })
        ));
    }

    #[test]
    fn contract_against_explicit_loop_oracle() {
        // a[(i,j,k)] b[(k,l,j)] summed over j,k -> out[(i,l)].
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = random_tensor(&[3, 4, 5], &mut rng);
        let b = random_tensor(&[5, 2, 4], &mut rng);
        let fast = contract(&a, &b, &[(1, 2), (2, 0)]).unwrap();
        assert_eq!(fast.shape(), &[3, 2]);
        for i in 0..3 {
            for l in 0..2 {
                let mut acc = Complex64::default();
                for j in 0..4 {
                    for k in 0..5 {
                        acc += a.get(&[i, j, k]) * b.get(&[k, l, j]);
                    }
                }
                assert!((fast.get(&[i, l]) - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_truncate_keeps_leading_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let t = random_tensor(&[4, 2, 6], &mut rng);
        let r = split_svd(&t, &[0, 1]).unwrap();
        let tr = r.truncate(3);
        assert_eq!(tr.s.len(), 3);
        assert_eq!(tr.u.shape(), &[4, 2, 3]);
        assert_eq!(tr.vh.shape()[0], 3);
        assert_eq!(tr.s, r.s[..3].to_vec());
    }
}
