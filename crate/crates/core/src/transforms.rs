//! Orthonormal DST-I, its tensorized form, and FFT circular convolution.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{RealFftPlanner, RealToComplex};

use crate::error::{check_len, Error, Result};

/// How a [`TransformPlan`] evaluates the sine transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DstMethod {
    /// Dense O(m²) summation against a precomputed sine table.
    Direct,
    /// Real FFT of the length-2(m+1) odd extension.
    Fft,
}

/// Immutable plan for the orthonormal DST-I of length `m`.
///
/// The matrix `S_m` with entries `sqrt(2/(m+1)) sin(π j k / (m+1))` is
/// symmetric and orthogonal, so the plan is its own inverse.
#[derive(Clone)]
pub struct TransformPlan {
    m: usize,
    method: DstMethod,
    scale: f64,
    fft: Option<Arc<dyn RealToComplex<f64>>>,
    // sines[r] = sin(π r / (m+1)) for r in 0..2(m+1); only for Direct.
    sines: Vec<f64>,
}

impl fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformPlan")
            .field("m", &self.m)
            .field("method", &self.method)
            .finish()
    }
}

impl TransformPlan {
    /// FFT-backed plan.
    pub fn new(m: usize) -> Result<Self> {
        Self::with_method(m, DstMethod::Fft)
    }

    pub fn with_method(m: usize, method: DstMethod) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "transform length must be positive".into(),
            ));
        }
        let scale = (2.0 / (m as f64 + 1.0)).sqrt();
        let (fft, sines) = match method {
            DstMethod::Fft => {
                let mut planner = RealFftPlanner::<f64>::new();
                (Some(planner.plan_fft_forward(2 * (m + 1))), Vec::new())
            }
            DstMethod::Direct => {
                let period = 2 * (m + 1);
                let sines = (0..period)
                    .map(|r| (PI * r as f64 / (m as f64 + 1.0)).sin())
                    .collect();
                (None, sines)
            }
        };
        Ok(Self {
            m,
            method,
            scale,
            fft,
            sines,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn method(&self) -> DstMethod {
        self.method
    }

    pub fn dst1(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.m];
        self.dst1_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `S_m x` into `out`.
    pub fn dst1_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.m, x.len())?;
        check_len(self.m, out.len())?;
        match self.method {
            DstMethod::Direct => self.direct(x, out),
            DstMethod::Fft => self.via_fft(x, out),
        }
        Ok(())
    }

    fn direct(&self, x: &[f64], out: &mut [f64]) {
        let period = 2 * (self.m + 1);
        for (j0, o) in out.iter_mut().enumerate() {
            let j = j0 + 1;
            let mut acc = 0.0;
            let mut r = j;
            for &xk in x {
                acc += self.sines[r] * xk;
                r += j;
                if r >= period {
                    r -= period;
                }
            }
            *o = self.scale * acc;
        }
    }

    fn via_fft(&self, x: &[f64], out: &mut [f64]) {
        let m = self.m;
        let fft = self.fft.as_ref().expect("fft plan present for Fft method");
        let mut ext = fft.make_input_vec();
        // ext = [0, x, 0, -rev(x)]
        ext[1..=m].copy_from_slice(x);
        for (k, &xk) in x.iter().enumerate() {
            ext[2 * m + 1 - k] = -xk;
        }
        let mut bins: Vec<Complex64> = fft.make_output_vec();
        fft.process(&mut ext, &mut bins)
            .expect("buffer sizes come from the plan");
        let half = -0.5 * self.scale;
        for (o, y) in out.iter_mut().zip(&bins[1..=m]) {
            *o = half * y.im;
        }
    }
}

/// Tensor product `S_{m₁} ⊗ … ⊗ S_{m_d}` applied axis by axis.
#[derive(Clone, Debug)]
pub struct MultiDst {
    dims: Vec<usize>,
    plans: Vec<TransformPlan>,
}

impl MultiDst {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one dimension required".into(),
            ));
        }
        let plans = dims
            .iter()
            .map(|&m| TransformPlan::new(m))
            .collect::<Result<_>>()?;
        Ok(Self {
            dims: dims.to_vec(),
            plans,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n: usize = self.dims.iter().product();
        check_len(n, x.len())?;
        let mut cur = x.to_vec();
        let mut next = vec![0.0; n];
        for (axis, plan) in self.plans.iter().enumerate() {
            map_axis_lines(&self.dims, axis, &cur, &mut next, |line, dst| {
                plan.dst1_into(line, dst).expect("line length matches plan")
            });
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }
}

/// One-shot multidimensional DST-I with lexicographic ordering, axis 0 outermost.
pub fn dst1_multi(dims: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    MultiDst::new(dims)?.apply(x)
}

/// Applies `f` to every 1D fibre of `x` along `axis`, writing results to the
/// same positions of `out`.
pub fn map_axis_lines<F>(dims: &[usize], axis: usize, x: &[f64], out: &mut [f64], mut f: F)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let m = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    debug_assert_eq!(x.len(), outer * m * inner);
    if inner == 1 {
        for (src, dst) in x.chunks_exact(m).zip(out.chunks_exact_mut(m)) {
            f(src, dst);
        }
        return;
    }
    let mut line = vec![0.0; m];
    let mut res = vec![0.0; m];
    for o in 0..outer {
        let base = o * m * inner;
        for i in 0..inner {
            for (k, v) in line.iter_mut().enumerate() {
                *v = x[base + k * inner + i];
            }
            f(&line, &mut res);
            for (k, v) in res.iter().enumerate() {
                out[base + k * inner + i] = *v;
            }
        }
    }
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Cyclic convolution `out_j = Σ_k a_k b_{(j−k) mod L}` via real FFTs.
pub fn circular_convolve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.len(), b.len())?;
    let len = a.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut fa = fwd.make_output_vec();
    let mut fb = fwd.make_output_vec();
    fwd.process(&mut a.to_vec(), &mut fa)
        .expect("planned length");
    fwd.process(&mut b.to_vec(), &mut fb)
        .expect("planned length");
    for (u, v) in fa.iter_mut().zip(&fb) {
        *u *= *v;
    }
    fix_real_bins(&mut fa, len);
    let mut out = inv.make_output_vec();
    inv.process(&mut fa, &mut out).expect("planned length");
    let s = 1.0 / len as f64;
    out.iter_mut().for_each(|v| *v *= s);
    Ok(out)
}

// The inverse real FFT rejects nonzero imaginary parts in the DC and Nyquist
// bins; rounding in the product can leave tiny ones behind.
pub(crate) fn fix_real_bins(bins: &mut [Complex64], len: usize) {
    bins[0].im = 0.0;
    if len.is_multiple_of(2) {
        if let Some(last) = bins.last_mut() {
            last.im = 0.0;
        }
    }
}
