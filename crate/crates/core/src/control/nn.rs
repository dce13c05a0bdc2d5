//! Two-hidden-layer tanh perceptron with a linear head and analytic
//! reverse-mode gradients. Parameters live in one flat vector so optimizers,
//! clipping, target averaging and checkpoints can treat them uniformly.

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: [usize; 4],
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    input: Array2<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
}

fn layer_len(sizes: &[usize; 4], k: usize) -> usize {
    sizes[k] * sizes[k + 1] + sizes[k + 1]
}

impl Mlp {
    /// Uniform fan-in initialization; the output layer is further scaled by
    /// `out_scale`.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        hidden: (usize, usize),
        output: usize,
        out_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input, hidden, output);
        for k in 0..3 {
            let (fan_in, fan_out) = (net.sizes[k], net.sizes[k + 1]);
            let bound = (1.0 / fan_in as f64).sqrt() * if k == 2 { out_scale } else { 1.0 };
            let off = net.offset(k);
            for v in &mut net.params[off..off + fan_in * fan_out] {
                *v = rng.random_range(-bound..=bound);
            }
        }
        net
    }

    pub fn zeros(input: usize, hidden: (usize, usize), output: usize) -> Self {
        let sizes = [input, hidden.0, hidden.1, output];
        let n = (0..3).map(|k| layer_len(&sizes, k)).sum();
        Self {
            sizes,
            params: vec![0.0; n],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.sizes[1], self.sizes[2])
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[3]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn offset(&self, k: usize) -> usize {
        (0..k).map(|j| layer_len(&self.sizes, j)).sum()
    }

    fn weight(&self, k: usize) -> ArrayView2<'_, f64> {
        let off = self.offset(k);
        let (i, o) = (self.sizes[k], self.sizes[k + 1]);
        ArrayView2::from_shape((i, o), &self.params[off..off + i * o]).expect("layer shape")
    }

    fn bias(&self, k: usize) -> ArrayView1<'_, f64> {
        let off = self.offset(k) + self.sizes[k] * self.sizes[k + 1];
        ArrayView1::from(&self.params[off..off + self.sizes[k + 1]])
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: self.sizes[0],
                found: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// Batched forward pass (rows are samples), keeping activations.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.check_input(&x)?;
        let h1 = (x.dot(&self.weight(0)) + self.bias(0)).mapv_into(fast_tanh);
        let h2 = (h1.dot(&self.weight(1)) + self.bias(1)).mapv_into(fast_tanh);
        let out = h2.dot(&self.weight(2)) + self.bias(2);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output"));
        }
        Ok((
            out,
            MlpCache {
                input: x.to_owned(),
                h1,
                h2,
            },
        ))
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Forward pass for a single input row.
    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row shape");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Gradient of a loss with respect to the parameters (flat, same layout
    /// as [`Mlp::params`]) and to the inputs, given `d_out = dL/d output`.
    pub fn backward(&self, cache: &MlpCache, d_out: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        if d_out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("output gradient"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let d3 = d_out;
        self.write_layer_grad(&mut grad, 2, cache.h2.view(), d3);
        let dz2 = d3.dot(&self.weight(2).t()) * cache.h2.mapv(|a| 1.0 - a * a);
        self.write_layer_grad(&mut grad, 1, cache.h1.view(), dz2.view());
        let dz1 = dz2.dot(&self.weight(1).t()) * cache.h1.mapv(|a| 1.0 - a * a);
        self.write_layer_grad(&mut grad, 0, cache.input.view(), dz1.view());
        let dx = dz1.dot(&self.weight(0).t());
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter gradient"));
        }
        Ok((grad, dx))
    }

    fn write_layer_grad(&self, grad: &mut [f64], k: usize, input: ArrayView2<f64>, dz: ArrayView2<f64>) {
        let off = self.offset(k);
        let (i, o) = (self.sizes[k], self.sizes[k + 1]);
        let (w, b) = grad[off..off + i * o + o].split_at_mut(i * o);
        let mut gw = ArrayViewMut2::from_shape((i, o), w).expect("layer shape");
        gw.assign(&input.t().dot(&dz));
        ArrayViewMut1::from(b).assign(&dz.sum_axis(Axis(0)));
    }

    /// `self ← τ·source + (1−τ)·self`.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
}

/// Row-major batch from a list of equal-length rows.
pub fn stack_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for r in rows {
        if r.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: r.len(),
            });
        }
        flat.extend_from_slice(r);
    }
    Ok(Array2::from_shape_vec((rows.len(), cols), flat).expect("row-major shape"))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales all gradient vectors together so their joint L2 norm is at most
/// `max_norm`; returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

/// `exp(x)` for `x` in `[-40, 0]`: range reduction by `ln 2` and a degree-13
/// Taylor polynomial. Branch-free so batch maps vectorize.
#[inline(always)]
fn exp_nonpositive(x: f64) -> f64 {
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let x = x.max(-40.0);
    let k = (x * std::f64::consts::LOG2_E).round();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 6_227_020_800.0;
    for d in [479_001_600.0, 39_916_800.0, 3_628_800.0, 362_880.0, 40_320.0, 5_040.0, 720.0, 120.0, 24.0, 6.0, 2.0, 1.0, 1.0] {
        p = p * r + 1.0 / d;
    }
    let scale = f64::from_bits(((k as i64 + 1023) as u64) << 52);
    p * scale
}

/// `tanh` through one polynomial `exp`; absolute error stays at rounding level.
#[inline(always)]
pub fn fast_tanh(x: f64) -> f64 {
    let t = exp_nonpositive(-2.0 * x.abs());
    ((1.0 - t) / (1.0 + t)).copysign(x)
}

#[cfg(test)]
mod tests {

    #[test]
    fn fast_tanh_matches_libm() {
        for i in -4000..=4000 {
            let x = i as f64 * 0.01;
            assert!((fast_tanh(x) - x.tanh()).abs() < 1e-15, "{x}");
        }
        assert_eq!(fast_tanh(0.0), 0.0);
        assert_eq!(fast_tanh(50.0), 1.0);
        for i in 0..=4000 {
            let x = -(i as f64) * 0.01;
            assert!((exp_nonpositive(x) / x.exp() - 1.0).abs() < 1e-15, "{x}");
        }
        assert_eq!(fast_tanh(-50.0), -1.0);
    }
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(net: &Mlp, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
        (net.predict(x.view()).unwrap() * w).sum()
    }

    #[test]
    fn zero_network() {
        let net = Mlp::zeros(3, (4, 5), 2);
        let x = Array2::zeros((1, 3));
        let (out, cache) = net.forward(x.view()).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
        let (g, _) = net.backward(&cache, array![[1.0, 2.0]].view()).unwrap();
        // Only the output bias receives gradient.
        let nonzero: Vec<usize> = g.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        assert_eq!(nonzero, vec![g.len() - 2, g.len() - 1]);
        assert_eq!(&g[g.len() - 2..], &[1.0, 2.0]);
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(3, (4, 4), 2, 1.0, &mut rng);
        let (_, cache) = net.forward(array![[0.3, -0.2, 0.9]].view()).unwrap();
        let (g, dx) = net.backward(&cache, Array2::zeros((1, 2)).view()).unwrap();
        assert!(g.iter().chain(dx.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(5, (7, 6), 3, 1.0, &mut rng);
        let x = Array2::from_shape_fn((4, 5), |_| rng.random_range(-1.0..1.0));
        let w = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let (_, cache) = net.forward(x.view()).unwrap();
        let (g, dx) = net.backward(&cache, w.view()).unwrap();
        let h = 1e-6;
        for i in 0..net.n_params() {
            let mut p = net.clone();
            p.params_mut()[i] += h;
            let mut m = net.clone();
            m.params_mut()[i] -= h;
            let fd = (loss(&p, &x, &w) - loss(&m, &x, &w)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", g[i]);
        }
        for r in 0..4 {
            for c in 0..5 {
                let mut xp = x.clone();
                xp[[r, c]] += h;
                let mut xm = x.clone();
                xm[[r, c]] -= h;
                let fd = (loss(&net, &xp, &w) - loss(&net, &xm, &w)) / (2.0 * h);
                assert!((fd - dx[[r, c]]).abs() <= 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let net = Mlp::zeros(2, (2, 2), 1);
        assert!(net.predict(array![[1.0, 2.0, 3.0]].view()).is_err());
        assert!(matches!(net.predict(array![[f64::NAN, 0.0]].view()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn clipping_scales_jointly() {
        let mut a = vec![3.0];
        let mut b = vec![4.0];
        let n = clip_global_norm(&mut [&mut a, &mut b], 1.0);
        assert_eq!(n, 5.0);
        assert!((a[0] - 0.6).abs() < 1e-12 && (b[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn soft_update_identity_at_tau_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = Mlp::new(2, (3, 3), 1, 1.0, &mut rng);
        let mut dst = Mlp::zeros(2, (3, 3), 1);
        dst.soft_update_from(&src, 1.0);
        assert_eq!(dst, src);
    }
}
