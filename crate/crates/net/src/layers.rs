//! Convolution and dense layers over channel-major activations.
//!
//! Convolution activations are `[channels][batch * N * N]`; dense activations
//! are `[batch][features]`. Forward passes overwrite their outputs, backward
//! passes accumulate into the parameter gradients.

use rand::Rng;

use crate::real::{gemm, Op, Real};

fn uniform_init<T: Real>(len: usize, fan_in: usize, rng: &mut impl Rng) -> Vec<T> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..len)
        .map(|_| T::from_f64(rng.random_range(-bound..bound)))
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) struct Conv<T> {
    pub cin: usize,
    pub cout: usize,
    /// 1 or 3; 3×3 kernels use stride 1 and zero padding 1.
    pub kernel: usize,
    pub w: Vec<T>,
    pub b: Option<Vec<T>>,
    pub gw: Vec<T>,
    pub gb: Option<Vec<T>>,
}

impl<T: Real> Conv<T> {
    pub fn new(cin: usize, cout: usize, kernel: usize, bias: bool, rng: &mut impl Rng) -> Self {
        assert!(kernel == 1 || kernel == 3);
        let k = cin * kernel * kernel;
        Self {
            cin,
            cout,
            kernel,
            w: uniform_init(cout * k, k, rng),
            b: bias.then(|| vec![T::zero(); cout]),
            gw: vec![T::zero(); cout * k],
            gb: bias.then(|| vec![T::zero(); cout]),
        }
    }

    fn patch_len(&self) -> usize {
        self.cin * self.kernel * self.kernel
    }

    /// `out = relu?(W * input + b)` for `bp = batch * n * n` columns.
    pub fn forward(&self, input: &[T], bp: usize, n: usize, out: &mut Vec<T>, col: &mut Vec<T>) {
        out.clear();
        out.resize(self.cout * bp, T::zero());
        let k = self.patch_len();
        let patches: &[T] = if self.kernel == 3 {
            col.resize(k * bp, T::zero());
            im2col(input, self.cin, bp, n, col);
            col
        } else {
            input
        };
        gemm(self.cout, k, bp, &self.w, Op::N, patches, Op::N, T::zero(), out);
        if let Some(b) = &self.b {
            for (row, &bias) in out.chunks_exact_mut(bp).zip(b) {
                row.iter_mut().for_each(|v| *v += bias);
            }
        }
    }

    /// Accumulates parameter gradients for the pre-activation gradient `dout`
    /// and, if requested, writes the gradient w.r.t. `input` into `din`.
    /// `patches` is the column buffer the forward pass built from `input`
    /// (for 1×1 kernels, `input` itself).
    pub fn backward(
        &mut self,
        patches: &[T],
        dout: &[T],
        bp: usize,
        n: usize,
        din: Option<&mut Vec<T>>,
    ) {
        let k = self.patch_len();
        gemm(self.cout, bp, k, dout, Op::N, patches, Op::T, T::one(), &mut self.gw);
        if let Some(gb) = &mut self.gb {
            for (g, row) in gb.iter_mut().zip(dout.chunks_exact(bp)) {
                *g += row.iter().copied().sum::<T>();
            }
        }
        let Some(din) = din else { return };
        din.clear();
        din.resize(self.cin * bp, T::zero());
        if self.kernel == 3 {
            let mut dcol = vec![T::zero(); k * bp];
            gemm(k, self.cout, bp, &self.w, Op::T, dout, Op::N, T::zero(), &mut dcol);
            col2im(&dcol, self.cin, bp, n, din);
        } else {
            gemm(k, self.cout, bp, &self.w, Op::T, dout, Op::N, T::zero(), din);
        }
    }
}

/// Row `(ci, ky, kx)` of `col` holds channel `ci` shifted by `(ky-1, kx-1)`
/// with zero fill at the borders.
fn im2col<T: Real>(input: &[T], cin: usize, bp: usize, n: usize, col: &mut [T]) {
    let p = n * n;
    for ci in 0..cin {
        let src = &input[ci * bp..(ci + 1) * bp];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[(ci * 9 + ky * 3 + kx) * bp..][..bp];
                for (s, d) in src.chunks_exact(p).zip(row.chunks_exact_mut(p)) {
                    for y in 0..n {
                        let drow = &mut d[y * n..(y + 1) * n];
                        let Some(yy) = (y + ky).checked_sub(1).filter(|&yy| yy < n) else {
                            drow.fill(T::zero());
                            continue;
                        };
                        let srow = &s[yy * n..(yy + 1) * n];
                        match kx {
                            0 => {
                                drow[0] = T::zero();
                                drow[1..].copy_from_slice(&srow[..n - 1]);
                            }
                            1 => drow.copy_from_slice(srow),
                            _ => {
                                drow[..n - 1].copy_from_slice(&srow[1..]);
                                drow[n - 1] = T::zero();
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the input.
fn col2im<T: Real>(dcol: &[T], cin: usize, bp: usize, n: usize, din: &mut [T]) {
    let p = n * n;
    for ci in 0..cin {
        let dst = &mut din[ci * bp..(ci + 1) * bp];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &dcol[(ci * 9 + ky * 3 + kx) * bp..][..bp];
                for (s, d) in row.chunks_exact(p).zip(dst.chunks_exact_mut(p)) {
                    for y in 0..n {
                        let Some(yy) = (y + ky).checked_sub(1).filter(|&yy| yy < n) else {
                            continue;
                        };
                        let srow = &s[y * n..(y + 1) * n];
                        let drow = &mut d[yy * n..(yy + 1) * n];
                        match kx {
                            0 => drow[..n - 1]
                                .iter_mut()
                                .zip(&srow[1..])
                                .for_each(|(a, &b)| *a += b),
                            1 => drow.iter_mut().zip(srow).for_each(|(a, &b)| *a += b),
                            _ => drow[1..]
                                .iter_mut()
                                .zip(&srow[..n - 1])
                                .for_each(|(a, &b)| *a += b),
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Dense<T> {
    pub fin: usize,
    pub fout: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn new(fin: usize, fout: usize, rng: &mut impl Rng) -> Self {
        Self {
            fin,
            fout,
            w: uniform_init(fout * fin, fin, rng),
            b: vec![T::zero(); fout],
            gw: vec![T::zero(); fout * fin],
            gb: vec![T::zero(); fout],
        }
    }

    pub fn forward(&self, input: &[T], batch: usize, out: &mut Vec<T>) {
        out.clear();
        out.resize(batch * self.fout, T::zero());
        gemm(batch, self.fin, self.fout, input, Op::N, &self.w, Op::T, T::zero(), out);
        for row in out.chunks_exact_mut(self.fout) {
            row.iter_mut().zip(&self.b).for_each(|(v, &b)| *v += b);
        }
    }

    pub fn backward(&mut self, input: &[T], dout: &[T], batch: usize, din: Option<&mut Vec<T>>) {
        gemm(self.fout, batch, self.fin, dout, Op::T, input, Op::N, T::one(), &mut self.gw);
        for row in dout.chunks_exact(self.fout) {
            self.gb.iter_mut().zip(row).for_each(|(g, &d)| *g += d);
        }
        if let Some(din) = din {
            din.clear();
            din.resize(batch * self.fin, T::zero());
            gemm(batch, self.fout, self.fin, dout, Op::N, &self.w, Op::N, T::zero(), din);
        }
    }
}
