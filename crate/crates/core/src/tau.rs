//! τ-algebra approximations of symmetric Toeplitz matrices and the multilevel
//! sine-transform preconditioner built from them.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::discretization::{build_l, level_weights, FractionalParams, GridSpec};
use crate::error::{check_len, Error, Result};
use crate::toeplitz::{MultilevelOperator, Toeplitz1D};
use crate::transforms::{MultiDst, TransformPlan};

/// Eigenvalues of `τ(T)` in the sine basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Tau1D {
    pub q: Vec<f64>,
}

impl Tau1D {
    pub fn size(&self) -> usize {
        self.q.len()
    }
}

// Hankel correction entry h_s, indexed by s = j + k.
fn hankel_entry(c: &[f64], s: usize) -> f64 {
    let m = c.len();
    if s + 2 < m {
        c[s + 2]
    } else if 2 * m > s && 2 * m - s < m {
        c[2 * m - s]
    } else {
        0.0
    }
}

/// Dense `τ(T) = T − H`.
pub fn tau_dense(t: &Toeplitz1D) -> Result<DMatrix<f64>> {
    if !t.is_symmetric() {
        let defect = t
            .col()
            .iter()
            .zip(t.row())
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        return Err(Error::NotSymmetric { defect });
    }
    let c = t.col();
    let m = c.len();
    Ok(DMatrix::from_fn(m, m, |j, k| {
        t.entry(j, k) - hankel_entry(c, j + k)
    }))
}

/// Eigenvalues of `τ(T)` from its first column in O(m log m).
pub fn tau_eigs(col: &[f64]) -> Result<Tau1D> {
    let m = col.len();
    if m == 0 {
        return Err(Error::InvalidParameter("tau size must be positive".into()));
    }
    let plan = TransformPlan::new(m)?;
    // First column of τ(T).
    let v: Vec<f64> = (0..m)
        .map(|j| col[j] - if j + 2 < m { col[j + 2] } else { 0.0 })
        .collect();
    let sv = plan.dst1(&v)?;
    let scale = (2.0 / (m as f64 + 1.0)).sqrt();
    let q = sv
        .iter()
        .enumerate()
        .map(|(k, s)| s / (scale * (PI * (k + 1) as f64 / (m as f64 + 1.0)).sin()))
        .collect();
    Ok(Tau1D { q })
}

/// Reference evaluation `q_i = t₁ + 2 Σ_{j≥2} t_j cos(π i (j−1)/(m+1))`.
pub fn tau_eigs_cosine(col: &[f64]) -> Tau1D {
    let m = col.len();
    let q = (1..=m)
        .map(|i| {
            col[0]
                + 2.0
                    * col[1..]
                        .iter()
                        .enumerate()
                        .map(|(j, t)| t * (PI * (i * (j + 1)) as f64 / (m as f64 + 1.0)).cos())
                        .sum::<f64>()
        })
        .collect();
    Tau1D { q }
}

/// `P = S Λ S` with `Λ = ν + Σᵢ wᵢ qᵢ` (broadcast along axis i).
#[derive(Clone, Debug)]
pub struct TauPreconditioner {
    dims: Vec<usize>,
    lambda: Vec<f64>,
    nu: f64,
    transform: MultiDst,
}

impl TauPreconditioner {
    /// Builds `Λ` from per-direction symmetric Toeplitz first columns and weights.
    pub fn from_columns(dims: &[usize], nu: f64, parts: &[(Vec<f64>, f64)]) -> Result<Self> {
        check_len(dims.len(), parts.len())?;
        let n: usize = dims.iter().product();
        let mut lambda = vec![nu; n];
        for (axis, (col, w)) in parts.iter().enumerate() {
            check_len(dims[axis], col.len())?;
            if *w == 0.0 {
                continue;
            }
            let q = tau_eigs(col)?.q;
            let inner: usize = dims[axis + 1..].iter().product();
            let m = dims[axis];
            for (idx, l) in lambda.iter_mut().enumerate() {
                *l += w * q[(idx / inner) % m];
            }
        }
        if let Some((i, v)) = lambda.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NotPositiveDefinite(format!(
                "tau eigenvalue {i} is {v:e}"
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            lambda,
            nu,
            transform: MultiDst::new(dims)?,
        })
    }

    /// Preconditioner matched to the symmetric part of `a`.
    pub fn from_operator(a: &MultilevelOperator) -> Result<Self> {
        let parts: Vec<(Vec<f64>, f64)> = a
            .levels()
            .iter()
            .map(|lv| {
                (
                    lv.generator.symmetric_part().col().to_vec(),
                    lv.v_plus + lv.v_minus,
                )
            })
            .collect();
        Self::from_columns(a.dims(), a.nu(), &parts)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn diag_sandwich(&self, x: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        check_len(self.lambda.len(), x.len())?;
        let mut y = self.transform.apply(x)?;
        for (v, l) in y.iter_mut().zip(&self.lambda) {
            *v *= f(*l);
        }
        self.transform.apply(&y)
    }

    /// `P⁻¹ x`.
    pub fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.diag_sandwich(x, |l| 1.0 / l)
    }

    /// `P^{−1/2} x`.
    pub fn apply_inv_sqrt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.diag_sandwich(x, |l| 1.0 / l.sqrt())
    }

    /// `P x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.diag_sandwich(x, |l| l)
    }
}

/// Tau preconditioner for the operator assembled from `params` on `grid`.
pub fn build_preconditioner(
    params: &FractionalParams,
    grid: &GridSpec,
    nu: f64,
) -> Result<TauPreconditioner> {
    if params.d() != grid.n.len() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            found: grid.n.len(),
        });
    }
    let parts = (0..params.d())
        .map(|i| {
            let (vp, vm) = level_weights(params, grid, i);
            let h = build_l(params.alpha[i], grid.n[i], params.scheme)?.symmetric_part();
            Ok((h.col().to_vec(), vp + vm))
        })
        .collect::<Result<Vec<_>>>()?;
    TauPreconditioner::from_columns(&grid.n, nu, &parts)
}
