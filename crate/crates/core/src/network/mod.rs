//! The sub-band enhancement network: two bidirectional LSTM layers and a
//! per-frame affine output with ReLU.
//!
//! For a band of width `w` and hidden size `h` the shape chain is
//! `w -> 2h -> 2h -> w`; the output is elementwise nonnegative. Forward and
//! backward are exact and deterministic: the same parameters and input
//! always produce bit-identical results.

mod adam;
mod checkpoint;
mod lstm;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{BandSelector, Checkpoint, ModelKind};
pub use lstm::{DirectionCache, DirectionParams};

use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// One bidirectional layer: independent forward and backward directions
/// whose hidden states are concatenated per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams<T> {
    pub fwd: DirectionParams<T>,
    pub bwd: DirectionParams<T>,
}

impl<T: Scalar> LstmLayerParams<T> {
    fn zeros(input_size: usize, hidden: usize) -> Self {
        LstmLayerParams {
            fwd: DirectionParams::zeros(input_size, hidden),
            bwd: DirectionParams::zeros(input_size, hidden),
        }
    }

    /// Runs both directions and concatenates per frame: columns `[0, h)`
    /// are the forward direction, `[h, 2h)` the backward one.
    fn forward(&self, input: &Mat<T>) -> (Mat<T>, DirectionCache<T>, DirectionCache<T>) {
        let h = self.fwd.hidden();
        let (of, cf) = self.fwd.forward(input, false);
        let (ob, cb) = self.bwd.forward(input, true);
        let out = Mat::from_fn(input.rows(), 2 * h, |t, c| {
            if c < h {
                of[(t, c)]
            } else {
                ob[(t, c - h)]
            }
        });
        (out, cf, cb)
    }

    fn backward(
        &self,
        input: &Mat<T>,
        cache_f: &DirectionCache<T>,
        cache_b: &DirectionCache<T>,
        d_out: &Mat<T>,
    ) -> (LstmLayerParams<T>, Mat<T>) {
        let h = self.fwd.hidden();
        let d_f = Mat::from_fn(d_out.rows(), h, |t, c| d_out[(t, c)]);
        let d_b = Mat::from_fn(d_out.rows(), h, |t, c| d_out[(t, h + c)]);
        let (gf, dx_f) = self.fwd.backward(input, cache_f, &d_f, false);
        let (gb, dx_b) = self.bwd.backward(input, cache_b, &d_b, true);
        let mut dx = dx_f;
        for (a, b) in dx.data_mut().iter_mut().zip(dx_b.data()) {
            *a += *b;
        }
        (LstmLayerParams { fwd: gf, bwd: gb }, dx)
    }
}

/// Every trainable array of one enhancer network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub layer1: LstmLayerParams<T>,
    pub layer2: LstmLayerParams<T>,
    /// w × 2h
    pub out_weight: Mat<T>,
    /// w
    pub out_bias: Vec<T>,
    band_width: usize,
    hidden: usize,
}

/// Activations cached by [`ModelParams::forward_cached`] for reuse in the
/// backward pass.
pub struct ForwardCache<T> {
    l1f: DirectionCache<T>,
    l1b: DirectionCache<T>,
    l2f: DirectionCache<T>,
    l2b: DirectionCache<T>,
    y1: Mat<T>,
    y2: Mat<T>,
    pre_out: Mat<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(band_width: usize, hidden: usize) -> Self {
        ModelParams {
            layer1: LstmLayerParams::zeros(band_width, hidden),
            layer2: LstmLayerParams::zeros(2 * hidden, hidden),
            out_weight: Mat::zeros(band_width, 2 * hidden),
            out_bias: vec![T::zero(); band_width],
            band_width,
            hidden,
        }
    }

    /// Fresh parameters drawn uniformly from `[-1/sqrt(h), 1/sqrt(h)]`,
    /// filled in declared array order so a seeded generator reproduces the
    /// exact same model.
    pub fn init(band_width: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = ModelParams::zeros(band_width, hidden);
        let s = 1.0 / (hidden as f64).sqrt();
        for arr in p.flat_mut() {
            for v in arr {
                *v = T::of(rng.random_range(-s..=s));
            }
        }
        p
    }

    #[inline]
    pub fn band_width(&self) -> usize {
        self.band_width
    }

    #[inline]
    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Total number of trainable values; equals
    /// [`param_count`]`(band_width, hidden)`.
    pub fn count(&self) -> usize {
        self.flat().iter().map(|a| a.len()).sum()
    }

    /// The trainable arrays in declared order, as flat slices.
    pub fn flat(&self) -> Vec<&[T]> {
        vec![
            self.layer1.fwd.w_input.data(),
            self.layer1.fwd.w_recur.data(),
            &self.layer1.fwd.b_input,
            &self.layer1.fwd.b_recur,
            self.layer1.bwd.w_input.data(),
            self.layer1.bwd.w_recur.data(),
            &self.layer1.bwd.b_input,
            &self.layer1.bwd.b_recur,
            self.layer2.fwd.w_input.data(),
            self.layer2.fwd.w_recur.data(),
            &self.layer2.fwd.b_input,
            &self.layer2.fwd.b_recur,
            self.layer2.bwd.w_input.data(),
            self.layer2.bwd.w_recur.data(),
            &self.layer2.bwd.b_input,
            &self.layer2.bwd.b_recur,
            self.out_weight.data(),
            &self.out_bias,
        ]
    }

    /// Mutable view of the same arrays, same order as [`flat`](Self::flat).
    pub fn flat_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.layer1.fwd.w_input.data_mut(),
            self.layer1.fwd.w_recur.data_mut(),
            &mut self.layer1.fwd.b_input,
            &mut self.layer1.fwd.b_recur,
            self.layer1.bwd.w_input.data_mut(),
            self.layer1.bwd.w_recur.data_mut(),
            &mut self.layer1.bwd.b_input,
            &mut self.layer1.bwd.b_recur,
            self.layer2.fwd.w_input.data_mut(),
            self.layer2.fwd.w_recur.data_mut(),
            &mut self.layer2.fwd.b_input,
            &mut self.layer2.fwd.b_recur,
            self.layer2.bwd.w_input.data_mut(),
            self.layer2.bwd.w_recur.data_mut(),
            &mut self.layer2.bwd.b_input,
            &mut self.layer2.bwd.b_recur,
            self.out_weight.data_mut(),
            &mut self.out_bias,
        ]
    }

    /// Array names and shapes in declared order; this is the checkpoint
    /// manifest.
    pub fn manifest(band_width: usize, hidden: usize) -> Vec<(String, Vec<usize>)> {
        let mut m = Vec::with_capacity(18);
        for (layer, d) in [("layer1", band_width), ("layer2", 2 * hidden)] {
            for dir in ["fwd", "bwd"] {
                m.push((format!("{layer}.{dir}.w_input"), vec![4 * hidden, d]));
                m.push((format!("{layer}.{dir}.w_recur"), vec![4 * hidden, hidden]));
                m.push((format!("{layer}.{dir}.b_input"), vec![4 * hidden]));
                m.push((format!("{layer}.{dir}.b_recur"), vec![4 * hidden]));
            }
        }
        m.push(("output.weight".into(), vec![band_width, 2 * hidden]));
        m.push(("output.bias".into(), vec![band_width]));
        m
    }

    /// Casts every array to another scalar type (f64 -> f32 rounds to
    /// nearest; f32 -> f64 is exact).
    pub fn convert<U: Scalar>(&self) -> ModelParams<U> {
        let mut out = ModelParams::<U>::zeros(self.band_width, self.hidden);
        for (dst, src) in out.flat_mut().into_iter().zip(self.flat()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = U::of(s.to_f64_lossy());
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.flat()
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &Mat<T>) -> Result<()> {
        if x.cols() != self.band_width {
            return Err(Error::shape(format!(
                "input width {} does not match model band width {}",
                x.cols(),
                self.band_width
            )));
        }
        Ok(())
    }

    /// Enhancer forward pass: T×w in, T×w out, elementwise nonnegative.
    pub fn forward(&self, x: &Mat<T>) -> Result<Mat<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    /// Forward pass that also returns the activations needed by
    /// [`backward_from_cache`](Self::backward_from_cache).
    pub fn forward_cached(&self, x: &Mat<T>) -> Result<(Mat<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let (y1, l1f, l1b) = self.layer1.forward(x);
        let (y2, l2f, l2b) = self.layer2.forward(&y1);

        let frames = x.rows();
        let w = self.band_width;
        let two_h = 2 * self.hidden;
        let mut pre_out = Mat::zeros(frames, w);
        let mut out = Mat::zeros(frames, w);
        for t in 0..frames {
            let y = y2.row(t);
            for j in 0..w {
                let mut acc = self.out_bias[j];
                let row = self.out_weight.row(j);
                for k in 0..two_h {
                    acc += row[k] * y[k];
                }
                pre_out[(t, j)] = acc;
                out[(t, j)] = if acc > T::zero() { acc } else { T::zero() };
            }
        }
        Ok((
            out,
            ForwardCache {
                l1f,
                l1b,
                l2f,
                l2b,
                y1,
                y2,
                pre_out,
            },
        ))
    }

    /// Parameter gradients for `sum(upstream ⊙ forward(x))`, computed by
    /// exact reverse-mode BPTT. The ReLU derivative at exactly zero is
    /// taken as zero.
    pub fn backward(&self, x: &Mat<T>, upstream: &Mat<T>) -> Result<ModelParams<T>> {
        let (_, cache) = self.forward_cached(x)?;
        self.backward_from_cache(x, &cache, upstream)
    }

    pub fn backward_from_cache(
        &self,
        x: &Mat<T>,
        cache: &ForwardCache<T>,
        upstream: &Mat<T>,
    ) -> Result<ModelParams<T>> {
        self.check_input(x)?;
        if upstream.rows() != x.rows() || upstream.cols() != self.band_width {
            return Err(Error::shape(format!(
                "upstream gradient is {}x{}, expected {}x{}",
                upstream.rows(),
                upstream.cols(),
                x.rows(),
                self.band_width
            )));
        }

        let frames = x.rows();
        let w = self.band_width;
        let two_h = 2 * self.hidden;
        let mut grads = ModelParams::zeros(self.band_width, self.hidden);

        // Output layer: ReLU mask, then the affine map.
        let mut d_y2 = Mat::zeros(frames, two_h);
        for t in 0..frames {
            let y = cache.y2.row(t);
            for j in 0..w {
                let d = if cache.pre_out[(t, j)] > T::zero() {
                    upstream[(t, j)]
                } else {
                    T::zero()
                };
                if d != T::zero() {
                    grads.out_bias[j] += d;
                    let gw = grads.out_weight.row_mut(j);
                    for k in 0..two_h {
                        gw[k] += d * y[k];
                    }
                    let wrow = self.out_weight.row(j);
                    let dy = d_y2.row_mut(t);
                    for k in 0..two_h {
                        dy[k] += d * wrow[k];
                    }
                }
            }
        }

        let (g2, d_y1) = self
            .layer2
            .backward(&cache.y1, &cache.l2f, &cache.l2b, &d_y2);
        let (g1, _d_x) = self.layer1.backward(x, &cache.l1f, &cache.l1b, &d_y1);
        grads.layer1 = g1;
        grads.layer2 = g2;
        Ok(grads)
    }
}

/// Trainable-parameter count of the two-layer bidirectional enhancer:
/// `2·4·(h·(w+h)+2h) + 2·4·(h·(2h+h)+2h) + (2h·w + w)`.
pub fn param_count(band_width: usize, hidden: usize) -> usize {
    let w = band_width;
    let h = hidden;
    let layer1 = 2 * 4 * (h * (w + h) + 2 * h);
    let layer2 = 2 * 4 * (h * (2 * h + h) + 2 * h);
    let output = 2 * h * w + w;
    layer1 + layer2 + output
}
