//! Preconditioned MINRES for symmetric, possibly indefinite systems.

use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MinresConfig {
    /// Relative residual tolerance, measured in the `P⁻¹` norm.
    pub tol: f64,
    pub maxit: usize,
    /// Initial guess; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for MinresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxit: 100,
            x0: None,
        }
    }
}

impl MinresConfig {
    /// Starts from `(1, …, 1)ᵀ / √n`.
    pub fn with_uniform_guess(mut self, n: usize) -> Self {
        self.x0 = Some(vec![1.0 / (n as f64).sqrt(); n]);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidParameter("maxit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MinresResult {
    pub x: Vec<f64>,
    /// `‖r_k‖_{P⁻¹} / ‖b‖_{P⁻¹}` for k = 0..=iters.
    pub relres_history: Vec<f64>,
    /// `‖r_k‖_{P⁻¹}` for k = 0..=iters.
    pub resnorm_history: Vec<f64>,
    /// `‖b − A x‖₂ / ‖b‖₂`, recomputed at exit.
    pub true_relres: f64,
    pub iters: usize,
    pub converged: bool,
}

impl MinresResult {
    pub fn relres(&self) -> f64 {
        *self.relres_history.last().unwrap_or(&0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sqrt_inner(r: &[f64], z: &[f64], iteration: usize) -> Result<f64> {
    let v = dot(r, z);
    if v < 0.0 || !v.is_finite() {
        return Err(Error::Breakdown {
            iteration,
            value: v,
        });
    }
    Ok(v.sqrt())
}

// Cheap probe of ⟨Ax, y⟩ = ⟨x, Ay⟩ in debug builds.
#[cfg(debug_assertions)]
fn probe_symmetry<A>(apply_a: &mut A, n: usize) -> Result<()>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax = apply_a(&x)?;
        let ay = apply_a(&y)?;
        let (l, r) = (dot(&ax, &y), dot(&x, &ay));
        let scale = norm(&ax) * norm(&y) + norm(&x) * norm(&ay);
        if scale > 0.0 && (l - r).abs() > 1e-10 * scale {
            return Err(Error::NotSymmetric {
                defect: (l - r).abs() / scale,
            });
        }
    }
    Ok(())
}

/// Solves `A x = b` with `A` symmetric and `P` symmetric positive definite,
/// given callbacks for `A·` and `P⁻¹·`.
pub fn pminres<A, M>(
    mut apply_a: A,
    mut apply_pinv: M,
    b: &[f64],
    cfg: &MinresConfig,
) -> Result<MinresResult>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    M: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let n = b.len();
    let mut x = match &cfg.x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.clone()
        }
        None => vec![0.0; n],
    };

    let bnorm2 = norm(b);
    if bnorm2 == 0.0 {
        return Ok(MinresResult {
            x: vec![0.0; n],
            relres_history: vec![0.0],
            resnorm_history: vec![0.0],
            true_relres: 0.0,
            iters: 0,
            converged: true,
        });
    }

    #[cfg(debug_assertions)]
    probe_symmetry(&mut apply_a, n)?;

    let bnorm_p = sqrt_inner(b, &apply_pinv(b)?, 0)?;

    let ax = apply_a(&x)?;
    let mut r1: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let mut y = apply_pinv(&r1)?;
    let beta1 = sqrt_inner(&r1, &y, 0)?;

    let mut relres_history = vec![beta1 / bnorm_p];
    let mut resnorm_history = vec![beta1];
    let mut converged = beta1 / bnorm_p <= cfg.tol;
    let mut iters = 0;

    if !converged && beta1 > 0.0 {
        let mut oldb = 0.0;
        let mut beta = beta1;
        let mut dbar = 0.0;
        let mut epsln = 0.0;
        let mut phibar = beta1;
        let mut cs = -1.0;
        let mut sn = 0.0;
        let mut w = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut r2 = r1.clone();

        while iters < cfg.maxit {
            iters += 1;
            let s = 1.0 / beta;
            let v: Vec<f64> = y.iter().map(|t| s * t).collect();
            y = apply_a(&v)?;
            if iters >= 2 {
                let f = beta / oldb;
                y.iter_mut().zip(&r1).for_each(|(t, r)| *t -= f * r);
            }
            let alfa = dot(&v, &y);
            let f = alfa / beta;
            y.iter_mut().zip(&r2).for_each(|(t, r)| *t -= f * r);
            r1 = std::mem::replace(&mut r2, y);
            y = apply_pinv(&r2)?;
            oldb = beta;
            beta = sqrt_inner(&r2, &y, iters)?;

            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;

            let gamma = gbar.hypot(beta).max(f64::EPSILON);
            cs = gbar / gamma;
            sn = beta / gamma;
            let phi = cs * phibar;
            phibar *= sn;

            let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
            let ig = 1.0 / gamma;
            w = v
                .iter()
                .zip(&w1)
                .zip(&w2)
                .map(|((vi, a), c)| (vi - oldeps * a - delta * c) * ig)
                .collect();
            x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi += phi * wi);

            resnorm_history.push(phibar);
            relres_history.push(phibar / bnorm_p);
            if phibar / bnorm_p <= cfg.tol {
                converged = true;
                break;
            }
            if beta == 0.0 {
                // Invariant subspace reached; x is exact up to rounding.
                break;
            }
        }
    }

    let ax = apply_a(&x)?;
    let true_relres = norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / bnorm2;
    Ok(MinresResult {
        x,
        relres_history,
        resnorm_history,
        true_relres,
        iters,
        converged,
    })
}

/// Identity preconditioner callback.
pub fn identity(x: &[f64]) -> Result<Vec<f64>> {
    Ok(x.to_vec())
}

/// `2 ρ^{⌊k/2⌋}` for k = 0..=k_max with `ρ = (κ−1)/(κ+1)`, `κ = 3(1+ε)`.
pub fn bound_curve(epsilon: f64, k_max: usize) -> Vec<f64> {
    let kappa = 3.0 * (1.0 + epsilon);
    let rho = (kappa - 1.0) / (kappa + 1.0);
    (0..=k_max)
        .map(|k| 2.0 * rho.powi((k / 2) as i32))
        .collect()
}
