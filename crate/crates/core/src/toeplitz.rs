//! Toeplitz operators: uni-level matrices, Kronecker-sum multilevel operators,
//! the anti-identity symmetrizer, and dense materialization for oracles.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{check_len, Error, Result};
use crate::transforms::{fix_real_bins, map_axis_lines, next_pow2};

/// Default size limit for dense oracles.
pub const DENSE_CAP: usize = 4096;

/// Toeplitz matrix stored by its first column and first row.
#[derive(Clone, Debug, PartialEq)]
pub struct Toeplitz1D {
    col: Vec<f64>,
    row: Vec<f64>,
}

impl Toeplitz1D {
    pub fn new(col: Vec<f64>, row: Vec<f64>) -> Result<Self> {
        if col.is_empty() {
            return Err(Error::InvalidParameter(
                "Toeplitz size must be positive".into(),
            ));
        }
        check_len(col.len(), row.len())?;
        if col[0] != row[0] {
            return Err(Error::InvalidParameter(format!(
                "diagonal mismatch: col[0] = {} but row[0] = {}",
                col[0], row[0]
            )));
        }
        Ok(Self { col, row })
    }

    pub fn symmetric(col: Vec<f64>) -> Result<Self> {
        let row = col.clone();
        Self::new(col, row)
    }

    pub fn identity(m: usize) -> Result<Self> {
        let mut e = vec![0.0; m];
        if let Some(v) = e.first_mut() {
            *v = 1.0;
        }
        Self::symmetric(e)
    }

    pub fn size(&self) -> usize {
        self.col.len()
    }

    pub fn col(&self) -> &[f64] {
        &self.col
    }

    pub fn row(&self) -> &[f64] {
        &self.row
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        if j >= k {
            self.col[j - k]
        } else {
            self.row[k - j]
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            col: self.row.clone(),
            row: self.col.clone(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.col == self.row
    }

    /// `(T + Tᵀ)/2`.
    pub fn symmetric_part(&self) -> Self {
        let mut col: Vec<f64> = self
            .col
            .iter()
            .zip(&self.row)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        col[0] = self.col[0];
        Self {
            row: col.clone(),
            col,
        }
    }

    /// `plus·T + minus·Tᵀ`, again Toeplitz.
    pub fn combine(&self, plus: f64, minus: f64) -> Self {
        let col: Vec<f64> = self
            .col
            .iter()
            .zip(&self.row)
            .map(|(c, r)| plus * c + minus * r)
            .collect();
        let row: Vec<f64> = self
            .row
            .iter()
            .zip(&self.col)
            .map(|(r, c)| plus * r + minus * c)
            .collect();
        Self { col, row }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.size();
        DMatrix::from_fn(m, m, |j, k| self.entry(j, k))
    }

    /// `T x` through a circulant embedding.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), x.len())?;
        let kernel = ToeplitzKernel::new(self);
        let mut out = vec![0.0; self.size()];
        kernel.apply_into(x, &mut out, &mut kernel.scratch());
        Ok(out)
    }
}

/// Circulant embedding of a Toeplitz matrix with its spectrum precomputed.
#[derive(Clone)]
pub struct ToeplitzKernel {
    m: usize,
    len: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for ToeplitzKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToeplitzKernel")
            .field("m", &self.m)
            .field("len", &self.len)
            .finish()
    }
}

/// Work buffers for [`ToeplitzKernel::apply_into`].
pub struct KernelScratch {
    time: Vec<f64>,
    freq: Vec<Complex64>,
}

impl ToeplitzKernel {
    pub fn new(t: &Toeplitz1D) -> Self {
        let m = t.size();
        let len = next_pow2(2 * m - 1);
        let mut planner = RealFftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut c = vec![0.0; len];
        c[..m].copy_from_slice(&t.col);
        for k in 1..m {
            c[len - k] = t.row[k];
        }
        let mut spectrum = fwd.make_output_vec();
        fwd.process(&mut c, &mut spectrum).expect("planned length");
        // Fold in the inverse transform's 1/len.
        let s = 1.0 / len as f64;
        spectrum.iter_mut().for_each(|z| *z *= s);
        Self {
            m,
            len,
            spectrum,
            fwd,
            inv,
        }
    }

    pub fn scratch(&self) -> KernelScratch {
        KernelScratch {
            time: vec![0.0; self.len],
            freq: self.fwd.make_output_vec(),
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64], s: &mut KernelScratch) {
        let m = self.m;
        s.time[..m].copy_from_slice(x);
        s.time[m..].iter_mut().for_each(|v| *v = 0.0);
        self.fwd
            .process(&mut s.time, &mut s.freq)
            .expect("planned length");
        for (z, k) in s.freq.iter_mut().zip(&self.spectrum) {
            *z *= *k;
        }
        fix_real_bins(&mut s.freq, self.len);
        self.inv
            .process(&mut s.freq, &mut s.time)
            .expect("planned length");
        out.copy_from_slice(&s.time[..m]);
    }
}

/// One Kronecker-sum term: `v₊ W + v₋ Wᵀ` with `W = I ⊗ L ⊗ I`.
#[derive(Clone, Debug)]
pub struct Level {
    pub generator: Toeplitz1D,
    pub v_plus: f64,
    pub v_minus: f64,
}

#[derive(Clone, Debug)]
struct LevelKernels {
    forward: ToeplitzKernel,
    transpose: ToeplitzKernel,
    symmetric: ToeplitzKernel,
}

/// `νI + Σᵢ (vᵢ₊ Wᵢ + vᵢ₋ Wᵢᵀ)` applied matrix-free.
#[derive(Clone, Debug)]
pub struct MultilevelOperator {
    dims: Vec<usize>,
    nu: f64,
    levels: Vec<Level>,
    kernels: Vec<LevelKernels>,
}

#[derive(Clone, Copy)]
enum Which {
    Forward,
    Transpose,
    Symmetric,
}

impl MultilevelOperator {
    pub fn new(dims: Vec<usize>, nu: f64, levels: Vec<Level>) -> Result<Self> {
        check_len(dims.len(), levels.len())?;
        if dims.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one level required".into(),
            ));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nu must be finite and nonnegative, got {nu}"
            )));
        }
        for (m, lv) in dims.iter().zip(&levels) {
            check_len(*m, lv.generator.size())?;
            if !(lv.v_plus >= 0.0 && lv.v_minus >= 0.0) {
                return Err(Error::InvalidParameter(
                    "level weights must be nonnegative".into(),
                ));
            }
        }
        let kernels = levels
            .iter()
            .map(|lv| {
                let (vp, vm) = (lv.v_plus, lv.v_minus);
                let g = &lv.generator;
                LevelKernels {
                    forward: ToeplitzKernel::new(&g.combine(vp, vm)),
                    transpose: ToeplitzKernel::new(&g.combine(vm, vp)),
                    symmetric: ToeplitzKernel::new(&g.symmetric_part().combine(vp + vm, 0.0)),
                }
            })
            .collect();
        Ok(Self {
            dims,
            nu,
            levels,
            kernels,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn is_symmetric(&self) -> bool {
        self.levels
            .iter()
            .all(|lv| lv.generator.is_symmetric() || lv.v_plus == lv.v_minus)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, Which::Forward)
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, Which::Transpose)
    }

    /// `H(A) x = ((A + Aᵀ)/2) x`.
    pub fn apply_symmetric_part(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, Which::Symmetric)
    }

    /// `Y A x`.
    pub fn apply_symmetrized(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply(x)?;
        y.reverse();
        Ok(y)
    }

    fn apply_with(&self, x: &[f64], which: Which) -> Result<Vec<f64>> {
        let n = self.n();
        check_len(n, x.len())?;
        let mut y: Vec<f64> = x.iter().map(|v| self.nu * v).collect();
        let mut term = vec![0.0; n];
        for (axis, (lv, ks)) in self.levels.iter().zip(&self.kernels).enumerate() {
            if lv.v_plus == 0.0 && lv.v_minus == 0.0 {
                continue;
            }
            let k = match which {
                Which::Forward => &ks.forward,
                Which::Transpose => &ks.transpose,
                Which::Symmetric => &ks.symmetric,
            };
            let mut scratch = k.scratch();
            map_axis_lines(&self.dims, axis, x, &mut term, |line, dst| {
                k.apply_into(line, dst, &mut scratch)
            });
            for (a, b) in y.iter_mut().zip(&term) {
                *a += b;
            }
        }
        Ok(y)
    }

    /// `H(A)` as an operator of the same class.
    pub fn symmetric_part(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|lv| {
                let v = 0.5 * (lv.v_plus + lv.v_minus);
                Level {
                    generator: lv.generator.symmetric_part(),
                    v_plus: v,
                    v_minus: v,
                }
            })
            .collect();
        Self::new(self.dims.clone(), self.nu, levels).expect("derived from a valid operator")
    }

    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        self.materialize_with_cap(DENSE_CAP)
    }

    /// Dense `νI + Σ I⊗(v₊L + v₋Lᵀ)⊗I`, assembled entrywise.
    pub fn materialize_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.n();
        if n > cap {
            return Err(Error::SizeCapExceeded { n, cap });
        }
        let mut a = DMatrix::<f64>::identity(n, n) * self.nu;
        for (axis, lv) in self.levels.iter().enumerate() {
            let m = self.dims[axis];
            let inner: usize = self.dims[axis + 1..].iter().product();
            let outer: usize = self.dims[..axis].iter().product();
            let blk = lv.generator.combine(lv.v_plus, lv.v_minus);
            for o in 0..outer {
                for j in 0..m {
                    for k in 0..m {
                        let t = blk.entry(j, k);
                        if t == 0.0 {
                            continue;
                        }
                        for i in 0..inner {
                            let base = o * m * inner + i;
                            a[(base + j * inner, base + k * inner)] += t;
                        }
                    }
                }
            }
        }
        Ok(a)
    }
}

/// Global reversal, i.e. `Y = Y_{n₁} ⊗ … ⊗ Y_{n_d}` under lexicographic ordering.
pub fn flip(dims: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    check_len(dims.iter().product(), x.len())?;
    Ok(x.iter().rev().copied().collect())
}
