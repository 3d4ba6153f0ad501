//! 1-D convolutional regressor.
//!
//! Activations of a batch are kept channel-major, `[channel][sample][position]`,
//! so every convolution is one matrix product between the kernel matrix and
//! an im2col expansion of the whole batch. Dense layers work on
//! `[feature][sample]` matrices.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Floating-point type the network can run in.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Default + Send + Sync + std::fmt::Debug + 'static {
    /// `C = alpha A B + beta C` for row-major operands with arbitrary strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }
}

fn check_span(len: usize, rows: usize, cols: usize, rs: isize, cs: isize) {
    if rows > 0 && cols > 0 {
        let last = (rows as isize - 1) * rs + (cols as isize - 1) * cs;
        assert!(rs >= 0 && cs >= 0 && (last as usize) < len, "gemm operand out of bounds");
    }
}

macro_rules! impl_scalar {
    ($t:ty, $f:path) => {
        impl Scalar for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                check_span(a.len(), m, k, rsa, csa);
                check_span(b.len(), k, n, rsb, csb);
                check_span(c.len(), m, n, rsc, csc);
                // SAFETY: the three spans were bounds-checked above.
                unsafe {
                    $f(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    )
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

/// Layer shapes. The last dense size is the output width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_channels: usize,
    pub input_len: usize,
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<usize>,
    /// Applied after the convolution stack and after the first dense layer.
    pub dropout: f64,
}

pub const OUTPUTS: usize = 4;

impl Architecture {
    /// Eight convolutions 5→16→16→32→32→64→64→128→128 (kernel 7) with the
    /// given strides, then dense 256→64→4.
    pub fn funnel(input_len: usize, strides: [usize; 8]) -> Self {
        let widths = [16, 16, 32, 32, 64, 64, 128, 128];
        Self {
            input_channels: crate::features::CHANNELS,
            input_len,
            conv: widths
                .iter()
                .zip(strides)
                .map(|(&w, s)| ConvSpec {
                    out_channels: w,
                    kernel: 7,
                    stride: s,
                    padding: 3,
                })
                .collect(),
            dense: vec![256, 64, OUTPUTS],
            dropout: 0.3,
        }
    }

    /// Stride 2 in every convolution.
    pub fn desk(input_len: usize) -> Self {
        Self::funnel(input_len, [2; 8])
    }

    /// Stride 2 in the even-numbered convolutions only.
    pub fn even_stride(input_len: usize) -> Self {
        Self::funnel(input_len, [1, 2, 1, 2, 1, 2, 1, 2])
    }

    /// `(channels, length)` after each convolution.
    pub fn conv_shapes(&self) -> Result<Vec<(usize, usize)>> {
        let mut l = self.input_len;
        let mut out = Vec::with_capacity(self.conv.len());
        for (i, s) in self.conv.iter().enumerate() {
            if s.kernel == 0 || s.stride == 0 || s.out_channels == 0 || l + 2 * s.padding < s.kernel {
                return invalid(format!("convolution {i} does not fit its input"));
            }
            l = (l + 2 * s.padding - s.kernel) / s.stride + 1;
            out.push((s.out_channels, l));
        }
        Ok(out)
    }

    pub fn flat_len(&self) -> Result<usize> {
        Ok(match self.conv_shapes()?.last() {
            Some(&(c, l)) => c * l,
            None => self.input_channels * self.input_len,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.input_len == 0 {
            return invalid("empty input shape");
        }
        if self.dense.is_empty() || self.dense.contains(&0) {
            return invalid("need at least one nonempty dense layer");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return invalid("dropout must lie in [0, 1)");
        }
        self.flat_len().map(|_| ())
    }

    /// Parameter blocks as `(weight_len, bias_len)` in storage order.
    pub fn blocks(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let mut c = self.input_channels;
        for s in &self.conv {
            out.push((s.out_channels * c * s.kernel, s.out_channels));
            c = s.out_channels;
        }
        let mut n = self.flat_len()?;
        for &d in &self.dense {
            out.push((d * n, d));
            n = d;
        }
        Ok(out)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.blocks()?.iter().map(|(w, b)| w + b).sum())
    }

    pub fn outputs(&self) -> usize {
        *self.dense.last().expect("validated")
    }
}

/// Network parameters plus the per-feature input standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Scalar> {
    pub arch: Architecture,
    /// All weights and biases, layer by layer, weights before biases.
    pub params: Vec<T>,
    pub input_mean: Vec<T>,
    pub input_scale: Vec<T>,
}

/// Intermediate values kept for the backward pass.
pub struct Cache<T> {
    batch: usize,
    input: Vec<T>,
    /// Post-activation output of every convolution, channel-major.
    conv_out: Vec<Vec<T>>,
    /// Dense inputs `[features][batch]`, after any dropout.
    dense_in: Vec<Vec<T>>,
    dropout_masks: Vec<Option<Vec<T>>>,
    pub output: Vec<T>,
}

fn offsets(blocks: &[(usize, usize)]) -> Vec<usize> {
    let mut o = Vec::with_capacity(blocks.len());
    let mut acc = 0;
    for &(w, b) in blocks {
        o.push(acc);
        acc += w + b;
    }
    o
}

impl<T: Scalar> Network<T> {
    /// Fan-in scaled uniform weights, zero biases, identity standardization.
    pub fn init(arch: Architecture, rng: &mut impl Rng) -> Result<Self> {
        arch.validate()?;
        let blocks = arch.blocks()?;
        let n_conv = arch.conv.len();
        let mut params = Vec::with_capacity(arch.param_count()?);
        let mut fan_in = arch.input_channels;
        for (i, &(w, b)) in blocks.iter().enumerate() {
            let fan = if i < n_conv {
                let f = fan_in * arch.conv[i].kernel;
                fan_in = arch.conv[i].out_channels;
                f
            } else {
                w / b
            };
            // He-uniform for ReLU layers, plain 1/sqrt(fan) for the output
            let limit = if i + 1 == blocks.len() {
                (1.0 / fan as f64).sqrt()
            } else {
                (6.0 / fan as f64).sqrt()
            };
            params.extend((0..w).map(|_| T::of(rng.gen_range(-limit..limit))));
            params.extend((0..b).map(|_| T::zero()));
        }
        let d = arch.input_channels * arch.input_len;
        Ok(Self {
            arch,
            params,
            input_mean: vec![T::zero(); d],
            input_scale: vec![T::one(); d],
        })
    }

    pub fn input_size(&self) -> usize {
        self.arch.input_channels * self.arch.input_len
    }

    /// Sets the standardization from sample-major training inputs: each
    /// feature is centred on its mean and divided by its standard deviation,
    /// floored at 1% of its channel's deviation.
    pub fn fit_standardization(&mut self, samples: &[f32], count: usize) -> Result<()> {
        let d = self.input_size();
        if count == 0 || samples.len() != count * d {
            return invalid("standardization needs a nonempty sample-major batch");
        }
        let mut mean = vec![0.0f64; d];
        for s in samples.chunks_exact(d) {
            for (m, &v) in mean.iter_mut().zip(s) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let mut var = vec![0.0f64; d];
        for s in samples.chunks_exact(d) {
            for ((acc, &v), m) in var.iter_mut().zip(s).zip(&mean) {
                *acc += (v as f64 - m).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= count as f64);
        let l = self.arch.input_len;
        let mut scale = vec![0.0; d];
        for c in 0..self.arch.input_channels {
            let ch = &var[c * l..(c + 1) * l];
            let floor = 0.01 * (ch.iter().sum::<f64>() / l as f64).sqrt();
            for j in 0..l {
                let sd = ch[j].sqrt().max(floor);
                scale[c * l + j] = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            }
        }
        self.input_mean = mean.into_iter().map(T::of).collect();
        self.input_scale = scale.into_iter().map(T::of).collect();
        Ok(())
    }

    /// Forward pass over `batch` sample-major inputs. Dropout is drawn from
    /// `rng` when given and skipped otherwise.
    pub fn forward(&self, input: &[T], batch: usize, mut rng: Option<&mut dyn rand::RngCore>) -> Result<Cache<T>> {
        let d = self.input_size();
        if batch == 0 || input.len() != batch * d {
            return invalid(format!(
                "expected {batch} inputs of {d} values, got {} values",
                input.len()
            ));
        }
        let blocks = self.arch.blocks()?;
        let offs = offsets(&blocks);
        let (c0, l0) = (self.arch.input_channels, self.arch.input_len);

        // standardize and transpose to [channel][sample][position]
        let mut x = vec![T::zero(); batch * d];
        for b in 0..batch {
            for c in 0..c0 {
                for j in 0..l0 {
                    let f = c * l0 + j;
                    x[(c * batch + b) * l0 + j] = (input[b * d + f] - self.input_mean[f]) * self.input_scale[f];
                }
            }
        }
        let mut conv_out = Vec::with_capacity(self.arch.conv.len());
        let (mut cin, mut lin) = (c0, l0);
        let mut cur = x.clone();
        for (i, s) in self.arch.conv.iter().enumerate() {
            let lout = (lin + 2 * s.padding - s.kernel) / s.stride + 1;
            let col = im2col(&cur, cin, batch, lin, s, lout);
            let (w_len, _) = blocks[i];
            let w = &self.params[offs[i]..offs[i] + w_len];
            let bias = &self.params[offs[i] + w_len..offs[i] + w_len + s.out_channels];
            let cols = batch * lout;
            let mut y = vec![T::zero(); s.out_channels * cols];
            for (o, row) in y.chunks_exact_mut(cols).enumerate() {
                row.iter_mut().for_each(|v| *v = bias[o]);
            }
            let kdim = cin * s.kernel;
            T::gemm(s.out_channels, kdim, cols, T::one(), w, kdim as isize, 1, &col, cols as isize, 1, T::one(), &mut y, cols as isize, 1);
            y.iter_mut().for_each(|v| *v = v.max(T::zero()));
            conv_out.push(y.clone());
            cur = y;
            cin = s.out_channels;
            lin = lout;
        }

        // flatten to [feature][sample]
        let flat = cin * lin;
        let mut h = vec![T::zero(); flat * batch];
        for c in 0..cin {
            for b in 0..batch {
                for j in 0..lin {
                    h[(c * lin + j) * batch + b] = cur[(c * batch + b) * lin + j];
                }
            }
        }

        let n_conv = self.arch.conv.len();
        let n_dense = self.arch.dense.len();
        let mut dense_in = Vec::with_capacity(n_dense);
        let mut masks = Vec::with_capacity(n_dense);
        let mut n_in = flat;
        for (k, &n_out) in self.arch.dense.iter().enumerate() {
            // dropout on the input of the first and second dense layers
            let mask = match (&mut rng, k < 2 && self.arch.dropout > 0.0) {
                (Some(r), true) => {
                    let keep = 1.0 - self.arch.dropout;
                    let m: Vec<T> = (0..h.len())
                        .map(|_| if r.gen::<f64>() < keep { T::of(1.0 / keep) } else { T::zero() })
                        .collect();
                    h.iter_mut().zip(&m).for_each(|(v, &g)| *v = *v * g);
                    Some(m)
                }
                _ => None,
            };
            masks.push(mask);
            let li = n_conv + k;
            let w = &self.params[offs[li]..offs[li] + n_out * n_in];
            let bias = &self.params[offs[li] + n_out * n_in..offs[li] + n_out * n_in + n_out];
            let mut y = vec![T::zero(); n_out * batch];
            for (o, row) in y.chunks_exact_mut(batch).enumerate() {
                row.iter_mut().for_each(|v| *v = bias[o]);
            }
            T::gemm(n_out, n_in, batch, T::one(), w, n_in as isize, 1, &h, batch as isize, 1, T::one(), &mut y, batch as isize, 1);
            if k + 1 < n_dense {
                y.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            dense_in.push(std::mem::replace(&mut h, y));
            n_in = n_out;
        }
        Ok(Cache {
            batch,
            input: x,
            conv_out,
            dense_in,
            dropout_masks: masks,
            output: transpose(&h, n_in, batch),
        })
    }

    /// Raw outputs, sample-major, with dropout disabled.
    pub fn predict(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.forward(input, batch, None)?.output)
    }

    /// Gradient of the loss with respect to every parameter, given the
    /// gradient `d_out` (sample-major) with respect to the outputs.
    pub fn backward(&self, cache: &Cache<T>, d_out: &[T]) -> Result<Vec<T>> {
        let batch = cache.batch;
        let n_outputs = self.arch.outputs();
        if d_out.len() != batch * n_outputs {
            return invalid("output gradient has the wrong shape");
        }
        let blocks = self.arch.blocks()?;
        let offs = offsets(&blocks);
        let mut grad = vec![T::zero(); self.params.len()];
        let n_conv = self.arch.conv.len();
        let n_dense = self.arch.dense.len();
        let shapes = self.arch.conv_shapes()?;

        let mut g = transpose(d_out, batch, n_outputs);
        for k in (0..n_dense).rev() {
            let n_out = self.arch.dense[k];
            let h = &cache.dense_in[k];
            let n_in = h.len() / batch;
            let li = n_conv + k;
            let (w_off, b_off) = (offs[li], offs[li] + n_out * n_in);
            {
                let (gw, rest) = grad[w_off..].split_at_mut(n_out * n_in);
                T::gemm(n_out, batch, n_in, T::one(), &g, batch as isize, 1, h, 1, batch as isize, T::zero(), gw, n_in as isize, 1);
                for (o, row) in g.chunks_exact(batch).enumerate() {
                    rest[o] = row.iter().fold(T::zero(), |a, &v| a + v);
                }
            }
            debug_assert_eq!(b_off, w_off + n_out * n_in);
            let w = &self.params[w_off..w_off + n_out * n_in];
            let mut gh = vec![T::zero(); n_in * batch];
            T::gemm(n_in, n_out, batch, T::one(), w, 1, n_in as isize, &g, batch as isize, 1, T::zero(), &mut gh, batch as isize, 1);
            if let Some(m) = &cache.dropout_masks[k] {
                gh.iter_mut().zip(m).for_each(|(v, &s)| *v = *v * s);
            }
            // ReLU of the previous dense layer (or of the last convolution)
            gh.iter_mut().zip(h).for_each(|(v, &a)| {
                if a <= T::zero() {
                    *v = T::zero();
                }
            });
            g = gh;
        }

        // unflatten to [channel][sample][position]
        let (cin_out, mut l_out) = shapes.last().copied().unwrap_or((self.arch.input_channels, self.arch.input_len));
        let mut gy = vec![T::zero(); cin_out * batch * l_out];
        for c in 0..cin_out {
            for b in 0..batch {
                for j in 0..l_out {
                    gy[(c * batch + b) * l_out + j] = g[(c * l_out + j) * batch + b];
                }
            }
        }

        for i in (0..n_conv).rev() {
            let s = &self.arch.conv[i];
            let (cin, lin) = if i == 0 {
                (self.arch.input_channels, self.arch.input_len)
            } else {
                shapes[i - 1]
            };
            let x = if i == 0 { &cache.input } else { &cache.conv_out[i - 1] };
            let y = &cache.conv_out[i];
            // ReLU
            gy.iter_mut().zip(y).for_each(|(v, &a)| {
                if a <= T::zero() {
                    *v = T::zero();
                }
            });
            let cols = batch * l_out;
            let kdim = cin * s.kernel;
            let col = im2col(x, cin, batch, lin, s, l_out);
            let (w_len, _) = blocks[i];
            {
                let (gw, rest) = grad[offs[i]..].split_at_mut(w_len);
                T::gemm(s.out_channels, cols, kdim, T::one(), &gy, cols as isize, 1, &col, 1, cols as isize, T::zero(), gw, kdim as isize, 1);
                for (o, row) in gy.chunks_exact(cols).enumerate() {
                    rest[o] = row.iter().fold(T::zero(), |a, &v| a + v);
                }
            }
            if i == 0 {
                break;
            }
            let w = &self.params[offs[i]..offs[i] + w_len];
            let mut gcol = vec![T::zero(); kdim * cols];
            T::gemm(kdim, s.out_channels, cols, T::one(), w, 1, kdim as isize, &gy, cols as isize, 1, T::zero(), &mut gcol, cols as isize, 1);
            gy = col2im(&gcol, cin, batch, lin, s, l_out);
            l_out = lin;
        }
        Ok(grad)
    }
}

fn transpose<T: Copy + Default>(x: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::default(); x.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

/// `[cin·k][batch·lout]` patch matrix of a channel-major activation.
fn im2col<T: Scalar>(x: &[T], cin: usize, batch: usize, lin: usize, s: &ConvSpec, lout: usize) -> Vec<T> {
    let cols = batch * lout;
    let mut col = vec![T::zero(); cin * s.kernel * cols];
    for c in 0..cin {
        for j in 0..s.kernel {
            let row = &mut col[(c * s.kernel + j) * cols..(c * s.kernel + j + 1) * cols];
            for b in 0..batch {
                let src = &x[(c * batch + b) * lin..(c * batch + b + 1) * lin];
                let dst = &mut row[b * lout..(b + 1) * lout];
                for (o, d) in dst.iter_mut().enumerate() {
                    let t = (o * s.stride + j) as isize - s.padding as isize;
                    if t >= 0 && (t as usize) < lin {
                        *d = src[t as usize];
                    }
                }
            }
        }
    }
    col
}

fn col2im<T: Scalar>(col: &[T], cin: usize, batch: usize, lin: usize, s: &ConvSpec, lout: usize) -> Vec<T> {
    let cols = batch * lout;
    let mut x = vec![T::zero(); cin * batch * lin];
    for c in 0..cin {
        for j in 0..s.kernel {
            let row = &col[(c * s.kernel + j) * cols..(c * s.kernel + j + 1) * cols];
            for b in 0..batch {
                let dst = &mut x[(c * batch + b) * lin..(c * batch + b + 1) * lin];
                for (o, &v) in row[b * lout..(b + 1) * lout].iter().enumerate() {
                    let t = (o * s.stride + j) as isize - s.padding as isize;
                    if t >= 0 && (t as usize) < lin {
                        dst[t as usize] = dst[t as usize] + v;
                    }
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Architecture {
        Architecture {
            input_channels: 2,
            input_len: 9,
            conv: vec![
                ConvSpec {
                    out_channels: 3,
                    kernel: 3,
                    stride: 2,
                    padding: 1,
                },
                ConvSpec {
                    out_channels: 2,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
            ],
            dense: vec![4],
            dropout: 0.0,
        }
    }

    fn loss(net: &Network<f64>, x: &[f64], t: &[f64], b: usize) -> f64 {
        let y = net.predict(x, b).unwrap();
        y.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / t.len() as f64
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut net = Network::<f64>::init(toy(), &mut rng).unwrap();
        net.params.iter_mut().for_each(|p| *p += rng.gen_range(-0.1..0.1));
        let b = 3;
        let x: Vec<f64> = (0..b * 18).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..b * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cache = net.forward(&x, b, None).unwrap();
        let d: Vec<f64> = cache.output.iter().zip(&t).map(|(o, v)| 2.0 * (o - v) / t.len() as f64).collect();
        let g = net.backward(&cache, &d).unwrap();
        for i in 0..net.params.len() {
            let p = net.params[i];
            net.params[i] = p + 1e-5;
            let up = loss(&net, &x, &t, b);
            net.params[i] = p - 1e-5;
            let dn = loss(&net, &x, &t, b);
            net.params[i] = p;
            let fd = (up - dn) / 2e-5;
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-7);
            assert!(rel < 1e-4, "param {i}: analytic {} numeric {fd}", g[i]);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::<f32>::init(toy(), &mut rng).unwrap();
        assert!(net.predict(&[0.0; 17], 1).is_err());
        assert!(net.predict(&[], 0).is_err());
    }
}
