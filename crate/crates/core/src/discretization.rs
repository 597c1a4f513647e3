//! Grünwald weights, assembly of the fractional diffusion operator, its
//! generating function, and the ε/ω convergence constants.

use std::f64::consts::PI;

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::toeplitz::{Level, MultilevelOperator, Toeplitz1D};

/// Finite-difference scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Backward Euler in time, shifted Grünwald in space.
    FirstOrder,
    /// Crank–Nicolson in time, weighted-shifted Grünwald in space.
    SecondOrder,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::FirstOrder => "first",
            Scheme::SecondOrder => "second",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fractional order must lie in (1, 2), got {alpha}"
        )))
    }
}

/// Orders and diffusion coefficients per direction.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalParams {
    pub alpha: Vec<f64>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub scheme: Scheme,
}

impl FractionalParams {
    /// Requires `dᵢ₊ + dᵢ₋ > 0` in every direction.
    pub fn new(
        alpha: Vec<f64>,
        d_plus: Vec<f64>,
        d_minus: Vec<f64>,
        scheme: Scheme,
    ) -> Result<Self> {
        let p = Self::allowing_vanishing(alpha, d_plus, d_minus, scheme)?;
        for i in 0..p.d() {
            if p.d_plus[i] + p.d_minus[i] <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "direction {i}: d_plus + d_minus must be positive"
                )));
            }
        }
        Ok(p)
    }

    /// Like [`FractionalParams::new`] but permits directions with no
    /// diffusion at all, which reduce the operator to a pure reaction term.
    pub fn allowing_vanishing(
        alpha: Vec<f64>,
        d_plus: Vec<f64>,
        d_minus: Vec<f64>,
        scheme: Scheme,
    ) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one direction required".into(),
            ));
        }
        if d_plus.len() != alpha.len() || d_minus.len() != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: if d_plus.len() != alpha.len() {
                    d_plus.len()
                } else {
                    d_minus.len()
                },
            });
        }
        for &a in &alpha {
            check_alpha(a)?;
        }
        for &c in d_plus.iter().chain(&d_minus) {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "diffusion coefficients must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(Self {
            alpha,
            d_plus,
            d_minus,
            scheme,
        })
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }
}

/// Tensor grid of interior points on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
}

impl GridSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if a.len() != b.len() || a.len() != n.len() || a.is_empty() {
            return Err(Error::InvalidParameter(
                "grid endpoint and size lists must match".into(),
            ));
        }
        for i in 0..a.len() {
            if !(b[i] > a[i]) {
                return Err(Error::InvalidParameter(format!(
                    "direction {i}: need b > a"
                )));
            }
            if n[i] == 0 {
                return Err(Error::InvalidParameter(format!(
                    "direction {i}: need at least one point"
                )));
            }
        }
        let h = (0..a.len())
            .map(|i| (b[i] - a[i]) / (n[i] as f64 + 1.0))
            .collect();
        Ok(Self { a, b, n, h })
    }

    /// Same box and resolution in every one of `d` directions.
    pub fn uniform(a: f64, b: f64, n: usize, d: usize) -> Result<Self> {
        Self::new(vec![a; d], vec![b; d], vec![n; d])
    }

    pub fn total(&self) -> usize {
        self.n.iter().product()
    }
}

/// Grünwald weights `w₀..w_K` (second order) or `g̃₀..g̃_K` (first order).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub alpha: f64,
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(alpha: f64, scheme: Scheme, k: usize) -> Result<Self> {
        match scheme {
            Scheme::FirstOrder => weights_first(alpha, k),
            Scheme::SecondOrder => weights_second(alpha, k),
        }
    }
}

/// `g₀ = 1`, `g_k = (1 − (α+1)/k) g_{k−1}`.
pub fn grunwald_g(alpha: f64, k: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut g = Vec::with_capacity(k + 1);
    g.push(1.0);
    for j in 1..=k {
        let prev = g[j - 1];
        g.push((1.0 - (alpha + 1.0) / j as f64) * prev);
    }
    Ok(g)
}

/// `w₀ = (α/2) g₀`, `w_k = (α/2) g_k + ((2−α)/2) g_{k−1}`.
pub fn weights_second(alpha: f64, k: usize) -> Result<CoefficientTable> {
    let g = grunwald_g(alpha, k)?;
    let (p, q) = (0.5 * alpha, 0.5 * (2.0 - alpha));
    let values = (0..=k)
        .map(|j| {
            if j == 0 {
                p * g[0]
            } else {
                p * g[j] + q * g[j - 1]
            }
        })
        .collect();
    Ok(CoefficientTable {
        alpha,
        scheme: Scheme::SecondOrder,
        values,
    })
}

/// `g̃_k = (−1)^k binom(α, k)`.
pub fn weights_first(alpha: f64, k: usize) -> Result<CoefficientTable> {
    check_alpha(alpha)?;
    let mut values = Vec::with_capacity(k + 1);
    values.push(1.0);
    for j in 1..=k {
        let prev = values[j - 1];
        values.push(prev * (j as f64 - 1.0 - alpha) / j as f64);
    }
    Ok(CoefficientTable {
        alpha,
        scheme: Scheme::FirstOrder,
        values,
    })
}

/// Lower Hessenberg Toeplitz matrix `L = −[w_{j−k+1}]`.
pub fn build_l(alpha: f64, m: usize, scheme: Scheme) -> Result<Toeplitz1D> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "matrix size must be positive".into(),
        ));
    }
    let w = CoefficientTable::new(alpha, scheme, m)?.values;
    let col: Vec<f64> = w[1..=m].iter().map(|v| -v).collect();
    let mut row = vec![0.0; m];
    row[0] = -w[1];
    if m > 1 {
        row[1] = -w[0];
    }
    Toeplitz1D::new(col, row)
}

/// Level weights `v₊, v₋` for one direction.
pub fn level_weights(params: &FractionalParams, grid: &GridSpec, i: usize) -> (f64, f64) {
    let ha = grid.h[i].powf(params.alpha[i]);
    let denom = match params.scheme {
        Scheme::SecondOrder => 2.0 * ha,
        Scheme::FirstOrder => ha,
    };
    (params.d_plus[i] / denom, params.d_minus[i] / denom)
}

/// `νI + Σᵢ (vᵢ₊ Wᵢ + vᵢ₋ Wᵢᵀ)` for the chosen scheme.
pub fn assemble_operator(
    params: &FractionalParams,
    grid: &GridSpec,
    nu: f64,
) -> Result<MultilevelOperator> {
    if params.d() != grid.n.len() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            found: grid.n.len(),
        });
    }
    let levels = (0..params.d())
        .map(|i| {
            let (v_plus, v_minus) = level_weights(params, grid, i);
            Ok(Level {
                generator: build_l(params.alpha[i], grid.n[i], params.scheme)?,
                v_plus,
                v_minus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MultilevelOperator::new(grid.n.clone(), nu, levels)
}

/// Truncated generating function `−Σ_{k=−1}^{K} c_{k+1} e^{ikθ}`.
pub fn symbol_series(table: &CoefficientTable, theta: f64, k: usize) -> Result<Complex64> {
    if k + 1 >= table.values.len() {
        return Err(Error::InvalidParameter(format!(
            "truncation {k} needs {} coefficients, table has {}",
            k + 2,
            table.values.len()
        )));
    }
    // Summed from the small tail towards the large head.
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..=k + 1).rev() {
        let freq = j as f64 - 1.0;
        acc += Complex64::from_polar(table.values[j], freq * theta);
    }
    Ok(-acc)
}

/// Closed-form generating function on `[−π, π]`, principal branch, 0 at `θ = 0`.
pub fn symbol_closed(alpha: f64, theta: f64, scheme: Scheme) -> Result<Complex64> {
    check_alpha(alpha)?;
    if !(-PI..=PI).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [-pi, pi], got {theta}"
        )));
    }
    if theta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let one = Complex64::new(1.0, 0.0);
    let z = one - Complex64::from_polar(1.0, theta);
    let pow = z.powf(alpha);
    let pre = match scheme {
        Scheme::FirstOrder => Complex64::from_polar(1.0, -theta),
        Scheme::SecondOrder => Complex64::from_polar(0.5 * alpha, -theta) + 0.5 * (2.0 - alpha),
    };
    Ok(-pre * pow)
}

/// Direction-wise trigonometric form of the second-order generating function.
pub fn symbol_piecewise(alpha: f64, theta: f64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if theta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (r, phase) = if theta > 0.0 {
        (
            (2.0 * (0.5 * theta).sin()).powf(alpha),
            0.5 * alpha * (theta - PI),
        )
    } else {
        (
            (2.0 * (-0.5 * theta).sin()).powf(alpha),
            0.5 * alpha * (theta + PI),
        )
    };
    let a = Complex64::from_polar(0.5 * alpha, phase - theta);
    let b = Complex64::from_polar(0.5 * (2.0 - alpha), phase);
    Ok(-(a + b) * r)
}

/// `ε* = maxᵢ |dᵢ₊ − dᵢ₋| / (dᵢ₊ + dᵢ₋) · |tan(αᵢ π / 2)|`.
pub fn epsilon_bound(params: &FractionalParams) -> Result<f64> {
    let mut eps = 0.0f64;
    for i in 0..params.d() {
        let (p, m) = (params.d_plus[i], params.d_minus[i]);
        if p + m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "direction {i}: d_plus + d_minus vanishes, ratio undefined"
            )));
        }
        if p == m {
            continue;
        }
        eps = eps.max((p - m).abs() / (p + m) * (0.5 * params.alpha[i] * PI).tan().abs());
    }
    Ok(eps)
}

/// `ω = sqrt((2 + 3ε) / (4 + 3ε))`.
pub fn omega_bound(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    Ok(((2.0 + 3.0 * epsilon) / (4.0 + 3.0 * epsilon)).sqrt())
}

/// Constants governing the preconditioned MINRES rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceBound {
    pub epsilon_star: f64,
    pub omega: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
}

impl ConvergenceBound {
    pub fn from_params(params: &FractionalParams) -> Result<Self> {
        let epsilon_star = epsilon_bound(params)?;
        Ok(Self {
            epsilon_star,
            omega: omega_bound(epsilon_star)?,
            kappa_lo: 0.5,
            kappa_hi: 1.5,
        })
    }
}
