//! Single-direction LSTM cell: forward recursion and exact BPTT.
//!
//! Gate order everywhere is (input, forget, cell-candidate, output), so a
//! pre-activation vector of length 4h splits as `[i | f | g | o]`. Each
//! direction carries two bias vectors (input-side and recurrent-side);
//! both add into the same pre-activation. Initial hidden and cell states
//! are zero.

// The gate-block kernels index into flat `[i | f | g | o]` buffers.
#![allow(clippy::needless_range_loop)]

use crate::mat::Mat;
use crate::scalar::Scalar;

/// Weights of one LSTM direction with input size `d` and hidden size `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionParams<T> {
    /// 4h × d
    pub w_input: Mat<T>,
    /// 4h × h
    pub w_recur: Mat<T>,
    /// 4h
    pub b_input: Vec<T>,
    /// 4h
    pub b_recur: Vec<T>,
}

impl<T: Scalar> DirectionParams<T> {
    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        DirectionParams {
            w_input: Mat::zeros(4 * hidden, input_size),
            w_recur: Mat::zeros(4 * hidden, hidden),
            b_input: vec![T::zero(); 4 * hidden],
            b_recur: vec![T::zero(); 4 * hidden],
        }
    }

    #[inline]
    pub fn hidden(&self) -> usize {
        self.w_recur.cols()
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.w_input.cols()
    }

    /// `4 * (h * (d + h) + 2h)` trainable values.
    pub fn count(&self) -> usize {
        self.w_input.rows() * self.w_input.cols()
            + self.w_recur.rows() * self.w_recur.cols()
            + self.b_input.len()
            + self.b_recur.len()
    }

    /// Runs the cell over the frames of `input` (T × d). With
    /// `reversed`, frames are consumed last to first. Hidden states are
    /// returned indexed by the original frame position either way.
    pub fn forward(&self, input: &Mat<T>, reversed: bool) -> (Mat<T>, DirectionCache<T>) {
        let frames = input.rows();
        let h = self.hidden();
        let d = self.input_size();
        debug_assert_eq!(input.cols(), d);

        let mut cache = DirectionCache::with_capacity(frames, h);
        let mut out = Mat::zeros(frames, h);

        let mut h_prev = vec![T::zero(); h];
        let mut c_prev = vec![T::zero(); h];

        for step in 0..frames {
            let frame = if reversed { frames - 1 - step } else { step };
            let x = input.row(frame);

            // pre = W_in x + b_in + W_rec h_prev + b_rec
            let mut pre = vec![T::zero(); 4 * h];
            for (j, p) in pre.iter_mut().enumerate() {
                let mut acc = self.b_input[j] + self.b_recur[j];
                let wi = self.w_input.row(j);
                for k in 0..d {
                    acc += wi[k] * x[k];
                }
                let wr = self.w_recur.row(j);
                for k in 0..h {
                    acc += wr[k] * h_prev[k];
                }
                *p = acc;
            }

            let mut gi = vec![T::zero(); h];
            let mut gf = vec![T::zero(); h];
            let mut gg = vec![T::zero(); h];
            let mut go = vec![T::zero(); h];
            let mut c = vec![T::zero(); h];
            let mut tanh_c = vec![T::zero(); h];
            let mut h_new = vec![T::zero(); h];
            for u in 0..h {
                gi[u] = sigmoid(pre[u]);
                gf[u] = sigmoid(pre[h + u]);
                gg[u] = pre[2 * h + u].tanh();
                go[u] = sigmoid(pre[3 * h + u]);
                c[u] = gf[u] * c_prev[u] + gi[u] * gg[u];
                tanh_c[u] = c[u].tanh();
                h_new[u] = go[u] * tanh_c[u];
            }

            out.row_mut(frame).copy_from_slice(&h_new);
            cache.push(gi, gf, gg, go, c, tanh_c, h_new.clone());
            h_prev = h_new;
            c_prev = cache.c[step].clone();
        }

        (out, cache)
    }

    /// BPTT through one direction. `d_hidden` holds ∂loss/∂(hidden output)
    /// per original frame; returns parameter gradients and ∂loss/∂input,
    /// also per original frame.
    pub fn backward(
        &self,
        input: &Mat<T>,
        cache: &DirectionCache<T>,
        d_hidden: &Mat<T>,
        reversed: bool,
    ) -> (DirectionParams<T>, Mat<T>) {
        let frames = input.rows();
        let h = self.hidden();
        let d = self.input_size();

        let mut grads = DirectionParams::zeros(d, h);
        let mut d_input = Mat::zeros(frames, d);
        let zeros = vec![T::zero(); h];

        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];

        for step in (0..frames).rev() {
            let frame = if reversed { frames - 1 - step } else { step };
            let x = input.row(frame);
            let h_prev = if step > 0 { &cache.h[step - 1] } else { &zeros };
            let c_prev = if step > 0 { &cache.c[step - 1] } else { &zeros };

            let gi = &cache.i[step];
            let gf = &cache.f[step];
            let gg = &cache.g[step];
            let go = &cache.o[step];
            let tanh_c = &cache.tanh_c[step];
            let up = d_hidden.row(frame);

            // Pre-activation gradients, gate order [i | f | g | o].
            let mut da = vec![T::zero(); 4 * h];
            for u in 0..h {
                let dh = up[u] + dh_next[u];
                let dc = dh * go[u] * (T::one() - tanh_c[u] * tanh_c[u]) + dc_next[u];
                da[u] = dc * gg[u] * gi[u] * (T::one() - gi[u]);
                da[h + u] = dc * c_prev[u] * gf[u] * (T::one() - gf[u]);
                da[2 * h + u] = dc * gi[u] * (T::one() - gg[u] * gg[u]);
                da[3 * h + u] = dh * tanh_c[u] * go[u] * (T::one() - go[u]);
                dc_next[u] = dc * gf[u];
            }

            for j in 0..4 * h {
                let g = da[j];
                grads.b_input[j] += g;
                grads.b_recur[j] += g;
                let wi = grads.w_input.row_mut(j);
                for k in 0..d {
                    wi[k] += g * x[k];
                }
                let wr = grads.w_recur.row_mut(j);
                for k in 0..h {
                    wr[k] += g * h_prev[k];
                }
            }

            // dh_next = W_rec^T da ; d_input = W_in^T da
            for k in 0..h {
                let mut acc = T::zero();
                for j in 0..4 * h {
                    acc += self.w_recur[(j, k)] * da[j];
                }
                dh_next[k] = acc;
            }
            let dx = d_input.row_mut(frame);
            for k in 0..d {
                let mut acc = T::zero();
                for j in 0..4 * h {
                    acc += self.w_input[(j, k)] * da[j];
                }
                dx[k] = acc;
            }
        }

        (grads, d_input)
    }
}

/// Per-step activations recorded during the forward pass, indexed by
/// processing step (not original frame).
#[derive(Clone, Debug)]
pub struct DirectionCache<T> {
    pub i: Vec<Vec<T>>,
    pub f: Vec<Vec<T>>,
    pub g: Vec<Vec<T>>,
    pub o: Vec<Vec<T>>,
    pub c: Vec<Vec<T>>,
    pub tanh_c: Vec<Vec<T>>,
    pub h: Vec<Vec<T>>,
}

impl<T> DirectionCache<T> {
    fn with_capacity(frames: usize, _hidden: usize) -> Self {
        DirectionCache {
            i: Vec::with_capacity(frames),
            f: Vec::with_capacity(frames),
            g: Vec::with_capacity(frames),
            o: Vec::with_capacity(frames),
            c: Vec::with_capacity(frames),
            tanh_c: Vec::with_capacity(frames),
            h: Vec::with_capacity(frames),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        i: Vec<T>,
        f: Vec<T>,
        g: Vec<T>,
        o: Vec<T>,
        c: Vec<T>,
        tanh_c: Vec<T>,
        h: Vec<T>,
    ) {
        self.i.push(i);
        self.f.push(f);
        self.g.push(g);
        self.o.push(o);
        self.c.push(c);
        self.tanh_c.push(tanh_c);
        self.h.push(h);
    }
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}
