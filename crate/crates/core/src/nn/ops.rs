//! Forward and backward kernels for the fixed layer vocabulary.
//!
//! Convolutions use "same" padding: the output side is `ceil(input / stride)`
//! and `(kernel - 1) / 2` zero rows/columns are conceptually added on the
//! top/left edge, with any remainder on the bottom/right.

use super::tensor::{Scalar, Tensor};
use super::NnError;

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub k_h: usize,
    pub k_w: usize,
    pub out_c: usize,
    pub stride: (usize, usize),
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    fn patch_len(&self) -> usize {
        self.k_h * self.k_w * self.in_c
    }

    fn rows(&self) -> usize {
        self.batch * self.out_h * self.out_w
    }
}

pub fn same_output_side(input: usize, stride: usize) -> usize {
    input.div_ceil(stride)
}

fn conv_geometry<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: (usize, usize),
) -> Result<ConvGeometry, NnError> {
    let (batch, in_h, in_w, in_c) = input.dims4("conv2d")?;
    let [k_h, k_w, w_in, out_c] = *weights.shape() else {
        return Err(NnError::shape(
            "conv2d",
            format!(
                "weights must be (kh, kw, c_in, c_out), got {:?}",
                weights.shape()
            ),
        ));
    };
    if w_in != in_c {
        return Err(NnError::shape(
            "conv2d",
            format!("input channels {in_c} do not match weight c_in {w_in}"),
        ));
    }
    if bias.shape() != [out_c] {
        return Err(NnError::shape(
            "conv2d",
            format!("bias shape {:?} does not match c_out {out_c}", bias.shape()),
        ));
    }
    if k_h == 0 || k_w == 0 || stride.0 == 0 || stride.1 == 0 {
        return Err(NnError::invalid("kernel size and stride must be positive"));
    }
    Ok(ConvGeometry {
        batch,
        in_h,
        in_w,
        in_c,
        k_h,
        k_w,
        out_c,
        stride,
        out_h: same_output_side(in_h, stride.0),
        out_w: same_output_side(in_w, stride.1),
    })
}

/// Input offset of the top-left kernel tap for output coordinate `o`.
fn tap_origin(o: usize, stride: usize, kernel: usize) -> isize {
    (o * stride) as isize - ((kernel - 1) / 2) as isize
}

fn im2col<T: Scalar>(input: &[T], g: &ConvGeometry) -> Vec<T> {
    let patch = g.patch_len();
    let mut cols = vec![T::zero(); g.rows() * patch];
    let mut row = 0;
    for n in 0..g.batch {
        let image = &input[n * g.in_h * g.in_w * g.in_c..];
        for oy in 0..g.out_h {
            let y0 = tap_origin(oy, g.stride.0, g.k_h);
            for ox in 0..g.out_w {
                let x0 = tap_origin(ox, g.stride.1, g.k_w);
                let dst = &mut cols[row * patch..(row + 1) * patch];
                for ky in 0..g.k_h {
                    let y = y0 + ky as isize;
                    if y < 0 || y >= g.in_h as isize {
                        continue;
                    }
                    for kx in 0..g.k_w {
                        let x = x0 + kx as isize;
                        if x < 0 || x >= g.in_w as isize {
                            continue;
                        }
                        let src = (y as usize * g.in_w + x as usize) * g.in_c;
                        let off = (ky * g.k_w + kx) * g.in_c;
                        dst[off..off + g.in_c].copy_from_slice(&image[src..src + g.in_c]);
                    }
                }
                row += 1;
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(cols: &[T], g: &ConvGeometry) -> Vec<T> {
    let patch = g.patch_len();
    let mut out = vec![T::zero(); g.batch * g.in_h * g.in_w * g.in_c];
    let mut row = 0;
    for n in 0..g.batch {
        let base = n * g.in_h * g.in_w * g.in_c;
        for oy in 0..g.out_h {
            let y0 = tap_origin(oy, g.stride.0, g.k_h);
            for ox in 0..g.out_w {
                let x0 = tap_origin(ox, g.stride.1, g.k_w);
                let src = &cols[row * patch..(row + 1) * patch];
                for ky in 0..g.k_h {
                    let y = y0 + ky as isize;
                    if y < 0 || y >= g.in_h as isize {
                        continue;
                    }
                    for kx in 0..g.k_w {
                        let x = x0 + kx as isize;
                        if x < 0 || x >= g.in_w as isize {
                            continue;
                        }
                        let dst = base + (y as usize * g.in_w + x as usize) * g.in_c;
                        let off = (ky * g.k_w + kx) * g.in_c;
                        for c in 0..g.in_c {
                            out[dst + c] = out[dst + c] + src[off + c];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    out
}

/// State retained by [`conv2d_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    geometry: ConvGeometry,
    cols: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: (usize, usize),
) -> Result<Tensor<T>, NnError> {
    conv2d_forward(input, weights, bias, stride).map(|(out, _)| out)
}

pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: (usize, usize),
) -> Result<(Tensor<T>, ConvCache<T>), NnError> {
    let g = conv_geometry(input, weights, bias, stride)?;
    let cols = im2col(input.data(), &g);
    let rows = g.rows();
    let mut out = Vec::with_capacity(rows * g.out_c);
    for _ in 0..rows {
        out.extend_from_slice(bias.data());
    }
    T::gemm(
        rows,
        g.patch_len(),
        g.out_c,
        &cols,
        false,
        weights.data(),
        false,
        T::one(),
        &mut out,
    );
    let out = Tensor::new(vec![g.batch, g.out_h, g.out_w, g.out_c], out)?;
    Ok((out, ConvCache { geometry: g, cols }))
}

pub fn conv2d_backward<T: Scalar>(
    cache: &ConvCache<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, NnError> {
    let g = &cache.geometry;
    if grad_out.shape() != [g.batch, g.out_h, g.out_w, g.out_c] {
        return Err(NnError::shape(
            "conv2d backward",
            format!(
                "upstream gradient {:?} does not match output ({}, {}, {}, {})",
                grad_out.shape(),
                g.batch,
                g.out_h,
                g.out_w,
                g.out_c
            ),
        ));
    }
    let rows = g.rows();
    let patch = g.patch_len();
    let mut grad_w = vec![T::zero(); patch * g.out_c];
    T::gemm(
        patch,
        rows,
        g.out_c,
        &cache.cols,
        true,
        grad_out.data(),
        false,
        T::zero(),
        &mut grad_w,
    );
    let mut grad_b = vec![T::zero(); g.out_c];
    for row in grad_out.data().chunks_exact(g.out_c) {
        for (acc, &v) in grad_b.iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }
    let mut grad_cols = vec![T::zero(); rows * patch];
    T::gemm(
        rows,
        g.out_c,
        patch,
        grad_out.data(),
        false,
        weights.data(),
        true,
        T::zero(),
        &mut grad_cols,
    );
    let grad_in = col2im(&grad_cols, g);
    Ok(ConvGrads {
        input: Tensor::new(vec![g.batch, g.in_h, g.in_w, g.in_c], grad_in)?,
        weights: Tensor::new(weights.shape().to_vec(), grad_w)?,
        bias: Tensor::new(vec![g.out_c], grad_b)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

pub struct BatchNormParams<'a, T> {
    pub gamma: &'a Tensor<T>,
    pub beta: &'a Tensor<T>,
    pub running_mean: &'a Tensor<T>,
    pub running_var: &'a Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    mode: Mode,
    features: usize,
    xhat: Vec<T>,
    inv_std: Vec<T>,
    /// Batch mean and unbiased variance, present in train mode.
    pub batch_stats: Option<(Vec<T>, Vec<T>)>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

/// Normalizes each feature (the last axis) over every other axis.
pub fn batch_norm<T: Scalar>(
    input: &Tensor<T>,
    params: &BatchNormParams<'_, T>,
    mode: Mode,
) -> Result<(Tensor<T>, BatchNormCache<T>), NnError> {
    let features = *input
        .shape()
        .last()
        .ok_or_else(|| NnError::shape("batch_norm", "input has rank 0".into()))?;
    for (name, t) in [
        ("gamma", params.gamma),
        ("beta", params.beta),
        ("running_mean", params.running_mean),
        ("running_var", params.running_var),
    ] {
        if t.shape() != [features] {
            return Err(NnError::shape(
                "batch_norm",
                format!("{name} shape {:?} does not match {features} features", t.shape()),
            ));
        }
    }
    if mode == Mode::Train && input.shape()[0] < 2 {
        return Err(NnError::BatchTooSmall {
            batch: input.shape()[0],
        });
    }
    let eps = T::from_f64_lossy(BN_EPSILON);
    let count = input.len() / features.max(1);
    let x = input.data();

    let (mean, var, batch_stats) = match mode {
        Mode::Train => {
            let m = T::from_usize(count).unwrap();
            let mut mean = vec![T::zero(); features];
            for row in x.chunks_exact(features) {
                for (acc, &v) in mean.iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }
            mean.iter_mut().for_each(|v| *v = *v / m);
            let mut var = vec![T::zero(); features];
            for row in x.chunks_exact(features) {
                for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                    let d = v - mu;
                    *acc = *acc + d * d;
                }
            }
            var.iter_mut().for_each(|v| *v = *v / m);
            let unbiased = T::from_usize(count).unwrap() / T::from_usize(count - 1).unwrap();
            let running_var = var.iter().map(|&v| v * unbiased).collect();
            (mean.clone(), var, Some((mean, running_var)))
        }
        Mode::Infer => (
            params.running_mean.data().to_vec(),
            params.running_var.data().to_vec(),
            None,
        ),
    };
    let inv_std: Vec<T> = var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
    let mut xhat = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    let gamma = params.gamma.data();
    let beta = params.beta.data();
    for row in x.chunks_exact(features) {
        for j in 0..features {
            let h = (row[j] - mean[j]) * inv_std[j];
            xhat.push(h);
            out.push(gamma[j] * h + beta[j]);
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), out)?,
        BatchNormCache {
            mode,
            features,
            xhat,
            inv_std,
            batch_stats,
        },
    ))
}

pub fn batch_norm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    gamma: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<BatchNormGrads<T>, NnError> {
    let f = cache.features;
    if grad_out.len() != cache.xhat.len() {
        return Err(NnError::shape(
            "batch_norm backward",
            format!(
                "upstream gradient has {} values, forward produced {}",
                grad_out.len(),
                cache.xhat.len()
            ),
        ));
    }
    let dy = grad_out.data();
    let mut dgamma = vec![T::zero(); f];
    let mut dbeta = vec![T::zero(); f];
    for (row_dy, row_h) in dy.chunks_exact(f).zip(cache.xhat.chunks_exact(f)) {
        for j in 0..f {
            dgamma[j] = dgamma[j] + row_dy[j] * row_h[j];
            dbeta[j] = dbeta[j] + row_dy[j];
        }
    }
    let g = gamma.data();
    let mut dx = Vec::with_capacity(dy.len());
    match cache.mode {
        Mode::Train => {
            let m = T::from_usize(dy.len() / f).unwrap();
            for (row_dy, row_h) in dy.chunks_exact(f).zip(cache.xhat.chunks_exact(f)) {
                for j in 0..f {
                    // dx = g * inv_std / m * (m * dy - sum(dy) - xhat * sum(dy * xhat))
                    let v = g[j] * cache.inv_std[j] / m
                        * (m * row_dy[j] - dbeta[j] - row_h[j] * dgamma[j]);
                    dx.push(v);
                }
            }
        }
        Mode::Infer => {
            for row_dy in dy.chunks_exact(f) {
                for j in 0..f {
                    dx.push(row_dy[j] * g[j] * cache.inv_std[j]);
                }
            }
        }
    }
    Ok(BatchNormGrads {
        input: Tensor::new(grad_out.shape().to_vec(), dx)?,
        gamma: Tensor::new(vec![f], dgamma)?,
        beta: Tensor::new(vec![f], dbeta)?,
    })
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.max(T::zero()))
}

/// Passes the upstream gradient only where the forward input was positive.
pub fn relu_backward<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if input.shape() != grad_out.shape() {
        return Err(NnError::shape(
            "relu backward",
            format!("{:?} vs {:?}", input.shape(), grad_out.shape()),
        ));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

fn dense_dims<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
) -> Result<(usize, usize, usize), NnError> {
    let (n, f) = input.dims2("dense")?;
    let [wf, units] = *weights.shape() else {
        return Err(NnError::shape(
            "dense",
            format!("weights must be (in, out), got {:?}", weights.shape()),
        ));
    };
    if wf != f {
        return Err(NnError::shape(
            "dense",
            format!("input has {f} features but weights expect {wf}"),
        ));
    }
    Ok((n, f, units))
}

/// `x . W + b`
pub fn dense<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (n, f, units) = dense_dims(input, weights)?;
    if bias.shape() != [units] {
        return Err(NnError::shape(
            "dense",
            format!("bias shape {:?} does not match {units} units", bias.shape()),
        ));
    }
    let mut out = Vec::with_capacity(n * units);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    T::gemm(
        n,
        f,
        units,
        input.data(),
        false,
        weights.data(),
        false,
        T::one(),
        &mut out,
    );
    Tensor::new(vec![n, units], out)
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>, NnError> {
    let (n, f, units) = dense_dims(input, weights)?;
    if grad_out.shape() != [n, units] {
        return Err(NnError::shape(
            "dense backward",
            format!("upstream gradient {:?}, expected [{n}, {units}]", grad_out.shape()),
        ));
    }
    let mut dw = vec![T::zero(); f * units];
    T::gemm(
        f,
        n,
        units,
        input.data(),
        true,
        grad_out.data(),
        false,
        T::zero(),
        &mut dw,
    );
    let mut db = vec![T::zero(); units];
    for row in grad_out.data().chunks_exact(units) {
        for (acc, &v) in db.iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }
    let mut dx = vec![T::zero(); n * f];
    T::gemm(
        n,
        units,
        f,
        grad_out.data(),
        false,
        weights.data(),
        true,
        T::zero(),
        &mut dx,
    );
    Ok(DenseGrads {
        input: Tensor::new(vec![n, f], dx)?,
        weights: Tensor::new(vec![f, units], dw)?,
        bias: Tensor::new(vec![units], db)?,
    })
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (_, c) = logits.dims2("softmax")?;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        let mut sum = T::zero();
        for &v in row {
            let e = (v - max).exp();
            sum = sum + e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|v| *v = *v / sum);
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Mean negative log-likelihood and its gradient `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    let (n, c) = logits.dims2("softmax_cross_entropy")?;
    if labels.len() != n {
        return Err(NnError::shape(
            "softmax_cross_entropy",
            format!("{} labels for a batch of {n}", labels.len()),
        ));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(NnError::LabelOutOfRange { label, classes: c });
    }
    let batch = T::from_usize(n).unwrap();
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &label) in logits.data().chunks_exact(c).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let log_sum = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        loss = loss - (row[label] - max - log_sum);
        for (j, &v) in row.iter().enumerate() {
            let p = (v - max - log_sum).exp();
            let target = if j == label { T::one() } else { T::zero() };
            grad.push((p - target) / batch);
        }
    }
    Ok((loss / batch, Tensor::new(logits.shape().to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn conv_single_pixel_sees_only_center_tap() {
        let out = conv2d(
            &t(&[1, 1, 1, 1], &[1.0]),
            &Tensor::filled(vec![3, 3, 1, 1], 1.0),
            &t(&[1], &[0.0]),
            (1, 1),
        )
        .unwrap();
        assert_eq!(out.shape(), &[1, 1, 1, 1]);
        assert_eq!(out.data(), &[1.0]);
    }

    #[test]
    fn conv_stride_two_delta_kernel() {
        let input = t(&[1, 4, 4, 1], &(1..=16).map(f64::from).collect::<Vec<_>>());
        let mut k = Tensor::zeros(vec![3, 3, 1, 1]);
        k.data_mut()[4] = 1.0;
        let out = conv2d(&input, &k, &t(&[1], &[0.0]), (2, 2)).unwrap();
        assert_eq!(out.shape(), &[1, 2, 2, 1]);
        assert_eq!(out.data(), &[1.0, 3.0, 9.0, 11.0]);
    }

    #[test]
    fn conv_reports_channel_mismatch() {
        let err = conv2d(
            &Tensor::<f64>::zeros(vec![1, 4, 4, 2]),
            &Tensor::zeros(vec![3, 3, 3, 8]),
            &Tensor::zeros(vec![8]),
            (1, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("channels"), "{err}");
    }

    #[test]
    fn conv_rejects_rank_three_input() {
        let err = conv2d(
            &Tensor::<f64>::zeros(vec![4, 4, 1]),
            &Tensor::zeros(vec![3, 3, 1, 1]),
            &Tensor::zeros(vec![1]),
            (1, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("rank-4"));
    }

    #[test]
    fn conv_output_side_is_ceil() {
        for (side, stride, expect) in [(64, 1, 64), (64, 2, 32), (7, 2, 4), (5, 3, 2)] {
            let out = conv2d(
                &Tensor::<f32>::zeros(vec![1, side, side, 1]),
                &Tensor::zeros(vec![3, 3, 1, 2]),
                &Tensor::zeros(vec![2]),
                (stride, stride),
            )
            .unwrap();
            assert_eq!(out.shape(), &[1, expect, expect, 2]);
        }
    }

    #[test]
    fn batch_norm_constant_batch_is_zero() {
        let x = Tensor::filled(vec![4, 3], 7.0);
        let ones = Tensor::filled(vec![3], 1.0);
        let zeros = Tensor::zeros(vec![3]);
        let params = BatchNormParams {
            gamma: &ones,
            beta: &zeros,
            running_mean: &zeros,
            running_var: &ones,
        };
        let (y, _) = batch_norm(&x, &params, Mode::Train).unwrap();
        assert!(y.data().iter().all(|v: &f64| v.abs() < 1e-12));
    }

    #[test]
    fn batch_norm_two_values_map_to_unit() {
        let x = t(&[2, 2], &[0.0, 0.0, 2.0, 2.0]);
        let ones = Tensor::filled(vec![2], 1.0);
        let zeros = Tensor::zeros(vec![2]);
        let params = BatchNormParams {
            gamma: &ones,
            beta: &zeros,
            running_mean: &zeros,
            running_var: &ones,
        };
        let (y, cache) = batch_norm(&x, &params, Mode::Train).unwrap();
        // 1 / sqrt(1 + 1e-5)
        let expect = 0.999_995_000_037_5;
        for (v, e) in y.data().iter().zip([-expect, -expect, expect, expect]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-12);
        }
        let (mean, var) = cache.batch_stats.unwrap();
        assert_eq!(mean, vec![1.0, 1.0]);
        assert_eq!(var, vec![2.0, 2.0]);
    }

    #[test]
    fn batch_norm_infer_with_unit_stats_is_identity() {
        let x = t(&[1, 3], &[-2.0, 0.5, 3.0]);
        let ones = Tensor::filled(vec![3], 1.0);
        let zeros = Tensor::zeros(vec![3]);
        let params = BatchNormParams {
            gamma: &ones,
            beta: &zeros,
            running_mean: &zeros,
            running_var: &ones,
        };
        let (y, _) = batch_norm(&x, &params, Mode::Infer).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-4);
        }
    }

    #[test]
    fn batch_norm_train_rejects_single_item() {
        let x = Tensor::<f32>::zeros(vec![1, 3]);
        let ones = Tensor::filled(vec![3], 1.0);
        let zeros = Tensor::zeros(vec![3]);
        let params = BatchNormParams {
            gamma: &ones,
            beta: &zeros,
            running_mean: &zeros,
            running_var: &ones,
        };
        assert!(matches!(
            batch_norm(&x, &params, Mode::Train),
            Err(NnError::BatchTooSmall { batch: 1 })
        ));
        assert!(batch_norm(&x, &params, Mode::Infer).is_ok());
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&t(&[3], &[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        assert!(relu(&t(&[3], &[-1.0, -5.0, -0.1]))
            .data()
            .iter()
            .all(|&v| v == 0.0));
        let g = relu_backward(&t(&[2], &[-1.0, 2.0]), &t(&[2], &[5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 5.0]);
    }

    #[test]
    fn dense_arithmetic() {
        let y = dense(
            &t(&[1, 2], &[1.0, 2.0]),
            &t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]),
            &t(&[2], &[3.0, 4.0]),
        )
        .unwrap();
        assert_eq!(y.data(), &[4.0, 6.0]);
        let x = t(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.25, -1.0]);
        let eye = Tensor::from_fn(vec![3, 3], |i| if i % 4 == 0 { 1.0 } else { 0.0 });
        assert_eq!(dense(&x, &eye, &Tensor::zeros(vec![3])).unwrap(), x);
    }

    #[test]
    fn dense_inner_dimension_mismatch() {
        let err = dense(
            &Tensor::<f32>::zeros(vec![1, 3]),
            &Tensor::zeros(vec![2, 2]),
            &Tensor::zeros(vec![2]),
        )
        .unwrap_err();
        assert!(matches!(err, NnError::ShapeMismatch { .. }));
    }

    #[test]
    fn cross_entropy_cases() {
        let (loss, _) = softmax_cross_entropy(&Tensor::<f64>::zeros(vec![1, 5]), &[2]).unwrap();
        assert_abs_diff_eq!(loss, 5f64.ln(), epsilon = 1e-12);

        let (loss, _) = softmax_cross_entropy(&t(&[1, 3], &[1000.0, 0.0, 0.0]), &[0]).unwrap();
        assert!(loss < 1e-12);

        let logits = t(&[1, 2], &[0.0, 3f64.ln()]);
        let p = softmax(&logits).unwrap();
        assert_abs_diff_eq!(p.data()[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.data()[1], 0.75, epsilon = 1e-12);
        let (loss, grad) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert_abs_diff_eq!(loss, 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(grad.data()[0], -0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(grad.data()[1], 0.75, epsilon = 1e-12);
    }

    #[test]
    fn cross_entropy_label_out_of_range() {
        let err = softmax_cross_entropy(&Tensor::<f32>::zeros(vec![1, 2]), &[2]).unwrap_err();
        assert!(matches!(err, NnError::LabelOutOfRange { label: 2, classes: 2 }));
    }
}
