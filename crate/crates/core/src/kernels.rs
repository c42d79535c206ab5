//! Dense kernels behind every module evaluation.
//!
//! All reductions run in a fixed, documented order (ascending inner index),
//! so repeated runs — and runs split across partitions — are bitwise
//! identical. None of the kernels parallelize internally; parallelism lives
//! at the partition level in the engine.

use alloc::vec;

use crate::matrix::Matrix;

/// Error raised by kernels on contract violations.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("{op}: shape mismatch, left is {}x{}, right is {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{op}: {cols} columns not divisible into {groups} groups")]
    GroupMismatch {
        op: &'static str,
        cols: usize,
        groups: usize,
    },
    #[error("segment_reduce: segment ids not nondecreasing at row {row}")]
    SegmentsUnsorted { row: usize },
    #[error("segment_reduce: row {row} has segment {segment} >= {num_segments}")]
    SegmentOutOfRange {
        row: usize,
        segment: usize,
        num_segments: usize,
    },
}

/// `|x|` without relying on std float methods.
#[inline]
pub fn abs_f32(x: f32) -> f32 {
    f32::from_bits(x.to_bits() & 0x7fff_ffff)
}

/// Natural exponential. Routed through libm so the same code runs with and
/// without std and produces one answer everywhere.
#[inline]
pub fn exp_f32(x: f32) -> f32 {
    libm::expf(x)
}

#[inline]
pub fn sqrt_f32(x: f32) -> f32 {
    libm::sqrtf(x)
}

/// Standard matrix product, accumulating each output entry in ascending
/// inner-index order.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, KernelError> {
    if a.cols() != b.rows() {
        return Err(KernelError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = Matrix::zeros(a.rows(), b.cols());
    matmul_into(out.data_mut(), a, b);
    Ok(out)
}

/// `out = a*b` into a preallocated buffer.
pub fn matmul_into(out: &mut [f32], a: &Matrix, b: &Matrix) {
    debug_assert_eq!(a.cols(), b.rows());
    matmul_slices(out, a.data(), a.rows(), a.cols(), b.data(), b.cols());
}

/// Slice-level matmul core: `a` is n-by-k, `b` is k-by-m, both row-major.
/// The i-k-j loop order keeps `b` row-contiguous while still accumulating
/// each `out[i][j]` in ascending k.
pub fn matmul_slices(out: &mut [f32], a: &[f32], n: usize, k: usize, b: &[f32], m: usize) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(out.len(), n * m);
    out.fill(0.0);
    for i in 0..n {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * m..(i + 1) * m];
        for (t, &a_it) in a_row.iter().enumerate() {
            let b_row = &b[t * m..(t + 1) * m];
            for j in 0..m {
                out_row[j] += a_it * b_row[j];
            }
        }
    }
}

/// `x >= 0 ? x : slope * x`, elementwise.
pub fn leaky_relu(x: &Matrix, slope: f32) -> Matrix {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    out
}

/// Elementwise natural exponential.
pub fn exp(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = exp_f32(*v);
    }
    out
}

fn elementwise_binary(
    op: &'static str,
    a: &Matrix,
    b: &Matrix,
    f: impl Fn(f32, f32) -> f32,
) -> Result<Matrix, KernelError> {
    if a.shape() != b.shape() {
        return Err(KernelError::ShapeMismatch {
            op,
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = a.clone();
    for (o, &bv) in out.data_mut().iter_mut().zip(b.data()) {
        *o = f(*o, bv);
    }
    Ok(out)
}

/// Elementwise sum of two same-shaped matrices.
pub fn elem_add(a: &Matrix, b: &Matrix) -> Result<Matrix, KernelError> {
    elementwise_binary("elem_add", a, b, |x, y| x + y)
}

/// Elementwise product of two same-shaped matrices.
pub fn elem_mul(a: &Matrix, b: &Matrix) -> Result<Matrix, KernelError> {
    elementwise_binary("elem_mul", a, b, |x, y| x * y)
}

/// Sum over the last dimension, blocked into `groups` contiguous column
/// groups: output column g is the ascending-index sum of input columns
/// `[g*w, (g+1)*w)` where `w = cols / groups`. `groups == 1` is the plain
/// full-row sum; multi-head layouts use one group per head.
pub fn reduce_sum_groups(x: &Matrix, groups: usize) -> Result<Matrix, KernelError> {
    if groups == 0 || x.cols() % groups != 0 {
        return Err(KernelError::GroupMismatch {
            op: "reduce_sum_groups",
            cols: x.cols(),
            groups,
        });
    }
    let mut out = Matrix::zeros(x.rows(), groups);
    reduce_sum_groups_into(out.data_mut(), x, groups);
    Ok(out)
}

pub fn reduce_sum_groups_into(out: &mut [f32], x: &Matrix, groups: usize) {
    reduce_sum_groups_slices(out, x.data(), x.rows(), x.cols(), groups);
}

/// Slice-level core of [`reduce_sum_groups`].
pub fn reduce_sum_groups_slices(
    out: &mut [f32],
    x: &[f32],
    rows: usize,
    cols: usize,
    groups: usize,
) {
    let width = if groups == 0 { 0 } else { cols / groups };
    debug_assert_eq!(out.len(), rows * groups);
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let out_row = &mut out[r * groups..(r + 1) * groups];
        for g in 0..groups {
            let mut acc = 0.0f32;
            for &v in &row[g * width..(g + 1) * width] {
                acc += v;
            }
            out_row[g] = acc;
        }
    }
}

/// Scale each row of `x` by the per-row factors in `s`.
///
/// `s` must have as many rows as `x`; its column count must divide `x`'s.
/// With one column this is plain row scaling; with `h` columns each factor
/// scales one contiguous block of `cols/h` columns (per-head weighting).
pub fn scale_rows(x: &Matrix, s: &Matrix) -> Result<Matrix, KernelError> {
    check_scale_shapes(x.shape(), s.shape())?;
    let mut out = x.clone();
    scale_rows_into(out.data_mut(), x, s);
    Ok(out)
}

pub(crate) fn check_scale_shapes(
    x: (usize, usize),
    s: (usize, usize),
) -> Result<(), KernelError> {
    if x.0 != s.0 || s.1 == 0 || x.1 % s.1 != 0 {
        return Err(KernelError::ShapeMismatch {
            op: "scale_rows",
            lhs: x,
            rhs: s,
        });
    }
    Ok(())
}

pub fn scale_rows_into(out: &mut [f32], x: &Matrix, s: &Matrix) {
    scale_rows_slices(out, x.data(), s.data(), x.rows(), x.cols(), s.cols());
}

/// Slice-level core of [`scale_rows`]: `sgroups` factor columns per row,
/// each scaling one contiguous block of `cols / sgroups` value columns.
pub fn scale_rows_slices(
    out: &mut [f32],
    x: &[f32],
    factors: &[f32],
    rows: usize,
    cols: usize,
    sgroups: usize,
) {
    let width = if sgroups == 0 { 0 } else { cols / sgroups };
    debug_assert_eq!(out.len(), rows * cols);
    debug_assert_eq!(factors.len(), rows * sgroups);
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let frow = &factors[r * sgroups..(r + 1) * sgroups];
        let out_row = &mut out[r * cols..(r + 1) * cols];
        for g in 0..sgroups {
            let f = frow[g];
            for c in g * width..(g + 1) * width {
                out_row[c] = row[c] * f;
            }
        }
    }
}

/// Reduction kind for [`segment_reduce`] and message-passing aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    Max,
}

/// Per-segment reduction of `values` rows.
///
/// `segment_of_row[r]` assigns row `r` to a segment; the vector must be
/// nondecreasing and every id must be below `num_segments`. Rows within a
/// segment fold in ascending row order. Empty segments produce zero rows for
/// every reduction kind (max included — the documented convention keeps
/// sentinel values out of user-visible output).
pub fn segment_reduce(
    values: &Matrix,
    segment_of_row: &[usize],
    num_segments: usize,
    op: Reduction,
) -> Result<Matrix, KernelError> {
    if segment_of_row.len() != values.rows() {
        return Err(KernelError::ShapeMismatch {
            op: "segment_reduce",
            lhs: values.shape(),
            rhs: (segment_of_row.len(), 1),
        });
    }
    for (row, win) in segment_of_row.windows(2).enumerate() {
        if win[0] > win[1] {
            return Err(KernelError::SegmentsUnsorted { row: row + 1 });
        }
    }
    if let Some((row, &segment)) = segment_of_row
        .iter()
        .enumerate()
        .find(|(_, &s)| s >= num_segments)
    {
        return Err(KernelError::SegmentOutOfRange {
            row,
            segment,
            num_segments,
        });
    }

    let cols = values.cols();
    let mut out = Matrix::zeros(num_segments, cols);
    let mut counts = vec![0usize; num_segments];
    for (r, &seg) in segment_of_row.iter().enumerate() {
        let first = counts[seg] == 0;
        counts[seg] += 1;
        let row = values.row(r);
        let out_row = out.row_mut(seg);
        match op {
            Reduction::Sum | Reduction::Mean => {
                for c in 0..cols {
                    out_row[c] += row[c];
                }
            }
            Reduction::Max => {
                if first {
                    out_row.copy_from_slice(row);
                } else {
                    for c in 0..cols {
                        if row[c] > out_row[c] {
                            out_row[c] = row[c];
                        }
                    }
                }
            }
        }
    }
    if op == Reduction::Mean {
        for seg in 0..num_segments {
            if counts[seg] > 0 {
                let inv = 1.0 / counts[seg] as f32;
                for v in out.row_mut(seg) {
                    *v *= inv;
                }
            }
        }
    }
    Ok(out)
}

/// Numerically stable softmax over contiguous row groups, independently per
/// column.
///
/// `offsets` delimits the groups CSC-style: group `g` spans rows
/// `[offsets[g], offsets[g+1])`. Each group's entries are shifted by the
/// group max before exponentiation. Empty groups are vacuous.
pub fn segment_softmax(logits: &Matrix, offsets: &[usize]) -> Matrix {
    let cols = logits.cols();
    let mut out = logits.clone();
    for g in 0..offsets.len().saturating_sub(1) {
        let (lo, hi) = (offsets[g], offsets[g + 1]);
        if lo == hi {
            continue;
        }
        for c in 0..cols {
            let mut max = logits.get(lo, c);
            for r in lo + 1..hi {
                let v = logits.get(r, c);
                if v > max {
                    max = v;
                }
            }
            let mut sum = 0.0f32;
            for r in lo..hi {
                let e = exp_f32(logits.get(r, c) - max);
                out.set(r, c, e);
                sum += e;
            }
            let inv = 1.0 / sum;
            for r in lo..hi {
                out.set(r, c, out.get(r, c) * inv);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent triple-loop reference for matmul (i, j, t order, scalar
    /// accumulation) — deliberately a different loop nest from the kernel.
    fn matmul_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0f32;
                for t in 0..a.cols() {
                    acc += a.get(i, t) * b.get(t, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let out = matmul(&a, &Matrix::identity(2)).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn matmul_empty_batch() {
        let a = Matrix::zeros(0, 3);
        let b = Matrix::zeros(3, 2);
        let out = matmul(&a, &b).unwrap();
        assert_eq!(out.shape(), (0, 2));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = matmul(&a, &b).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn matmul_matches_triple_loop_oracle_exactly() {
        let mut rng = crate::rng::Lcg64::new(11);
        for _ in 0..50 {
            let (n, k, m) = (rng.below(6) + 1, rng.below(6) + 1, rng.below(6) + 1);
            let a = random_matrix(&mut rng, n, k);
            let b = random_matrix(&mut rng, k, m);
            let fast = matmul(&a, &b).unwrap();
            let slow = matmul_oracle(&a, &b);
            assert_eq!(fast, slow, "accumulation order must match ascending-t");
        }
    }

    #[test]
    fn matmul_repeated_runs_bitwise_identical() {
        let mut rng = crate::rng::Lcg64::new(3);
        let a = random_matrix(&mut rng, 7, 5);
        let b = random_matrix(&mut rng, 5, 4);
        let first = matmul(&a, &b).unwrap();
        for _ in 0..5 {
            assert_eq!(matmul(&a, &b).unwrap(), first);
        }
    }

    #[test]
    fn leaky_relu_cases() {
        let x = Matrix::row_vector(&[-1.0, 0.0, 2.0]);
        assert_eq!(
            leaky_relu(&x, 0.2),
            Matrix::row_vector(&[-0.2, 0.0, 2.0])
        );
        assert_eq!(leaky_relu(&x, 1.0), x);
        assert_eq!(
            leaky_relu(&Matrix::row_vector(&[-5.0]), 0.0),
            Matrix::row_vector(&[0.0])
        );
    }

    #[test]
    fn segment_reduce_sum_mean_and_empty() {
        let values = Matrix::from_rows(&[&[1.0], &[2.0], &[3.0]]);
        let segs = [0usize, 0, 1];
        let sum = segment_reduce(&values, &segs, 2, Reduction::Sum).unwrap();
        assert_eq!(sum, Matrix::from_rows(&[&[3.0], &[3.0]]));
        let mean = segment_reduce(&values, &segs, 2, Reduction::Mean).unwrap();
        assert_eq!(mean, Matrix::from_rows(&[&[1.5], &[3.0]]));
        let with_empty = segment_reduce(&values, &segs, 3, Reduction::Sum).unwrap();
        assert_eq!(with_empty, Matrix::from_rows(&[&[3.0], &[3.0], &[0.0]]));
    }

    #[test]
    fn segment_reduce_max_keeps_negative_values() {
        let values = Matrix::from_rows(&[&[-5.0], &[-2.0]]);
        let out = segment_reduce(&values, &[0, 0], 2, Reduction::Max).unwrap();
        assert_eq!(out, Matrix::from_rows(&[&[-2.0], &[0.0]]));
    }

    #[test]
    fn segment_reduce_rejects_unsorted() {
        let values = Matrix::from_rows(&[&[1.0], &[2.0]]);
        let err = segment_reduce(&values, &[1, 0], 2, Reduction::Sum).unwrap_err();
        assert_eq!(err, KernelError::SegmentsUnsorted { row: 1 });
    }

    #[test]
    fn segment_reduce_rejects_out_of_range() {
        let values = Matrix::from_rows(&[&[1.0]]);
        let err = segment_reduce(&values, &[3], 2, Reduction::Sum).unwrap_err();
        assert!(matches!(err, KernelError::SegmentOutOfRange { segment: 3, .. }));
    }

    #[test]
    fn single_segment_sum_equals_ones_matmul() {
        let mut rng = crate::rng::Lcg64::new(17);
        for _ in 0..20 {
            let m = rng.below(8) + 1;
            let f = rng.below(5) + 1;
            let values = random_matrix(&mut rng, m, f);
            let segs = vec![0usize; m];
            let reduced = segment_reduce(&values, &segs, 1, Reduction::Sum).unwrap();
            let ones = Matrix::from_vec(1, m, vec![1.0; m]).unwrap();
            let via_matmul = matmul(&ones, &values).unwrap();
            assert!(reduced.max_abs_diff(&via_matmul) <= 1e-6);
        }
    }

    #[test]
    fn reduce_sum_groups_blocks() {
        let x = Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0]]);
        let whole = reduce_sum_groups(&x, 1).unwrap();
        assert_eq!(whole, Matrix::from_rows(&[&[10.0]]));
        let halves = reduce_sum_groups(&x, 2).unwrap();
        assert_eq!(halves, Matrix::from_rows(&[&[3.0, 7.0]]));
        assert!(reduce_sum_groups(&x, 3).is_err());
    }

    #[test]
    fn scale_rows_plain_and_blocked() {
        let x = Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]);
        let s1 = Matrix::column_vector(&[2.0, 0.5]);
        assert_eq!(
            scale_rows(&x, &s1).unwrap(),
            Matrix::from_rows(&[&[2.0, 4.0, 6.0, 8.0], &[2.5, 3.0, 3.5, 4.0]])
        );
        let s2 = Matrix::from_rows(&[&[1.0, 10.0], &[0.0, 1.0]]);
        assert_eq!(
            scale_rows(&x, &s2).unwrap(),
            Matrix::from_rows(&[&[1.0, 2.0, 30.0, 40.0], &[0.0, 0.0, 7.0, 8.0]])
        );
        let bad = Matrix::from_rows(&[&[1.0, 2.0, 3.0]]);
        assert!(scale_rows(&x, &bad).is_err());
    }

    #[test]
    fn segment_softmax_cases() {
        // Two in-edges with equal logits split evenly.
        let even = segment_softmax(&Matrix::column_vector(&[1.5, 1.5]), &[0, 2]);
        assert!(even.max_abs_diff(&Matrix::column_vector(&[0.5, 0.5])) <= 1e-6);
        // A single in-edge gets weight 1.
        let single = segment_softmax(&Matrix::column_vector(&[-3.0]), &[0, 1]);
        assert!(abs_f32(single.get(0, 0) - 1.0) <= 1e-6);
        // Logits {2, 1}: weights {e/(e+1), 1/(e+1)}.
        let two = segment_softmax(&Matrix::column_vector(&[2.0, 1.0]), &[0, 2]);
        let e = core::f32::consts::E;
        assert!(abs_f32(two.get(0, 0) - e / (e + 1.0)) <= 1e-6);
        assert!(abs_f32(two.get(1, 0) - 1.0 / (e + 1.0)) <= 1e-6);
        // Shift invariance: adding a constant per group changes nothing.
        let shifted = segment_softmax(&Matrix::column_vector(&[102.0, 101.0]), &[0, 2]);
        assert!(shifted.max_abs_diff(&two) <= 1e-6);
    }

    fn random_matrix(rng: &mut crate::rng::Lcg64, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.symmetric_f32(2.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }
}
