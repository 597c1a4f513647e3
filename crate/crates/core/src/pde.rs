//! Time stepping for the space-fractional diffusion equation and the two
//! benchmark setups.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use statrs::function::gamma::gamma;

use crate::discretization::{assemble_operator, FractionalParams, GridSpec, Scheme};
use crate::error::{check_len, Error, Result};
use crate::krylov::{identity, pminres, MinresConfig};
use crate::tau::{build_preconditioner, TauPreconditioner};
use crate::toeplitz::MultilevelOperator;

/// Space-time function `(x, t) ↦ value`.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Space function `x ↦ value`.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The order pairs used in the benchmark tables.
pub const TABLE_ALPHAS: [(f64, f64); 9] = [
    (1.1, 1.1),
    (1.1, 1.5),
    (1.1, 1.9),
    (1.5, 1.1),
    (1.5, 1.5),
    (1.5, 1.9),
    (1.9, 1.1),
    (1.9, 1.5),
    (1.9, 1.9),
];

#[derive(Clone)]
pub struct FractionalProblem {
    pub grid: GridSpec,
    pub params: FractionalParams,
    pub t_final: f64,
    pub steps: usize,
    pub tau_step: f64,
    pub nu: f64,
    pub source: SpaceTimeFn,
    pub u0: SpaceFn,
    pub exact: Option<SpaceTimeFn>,
}

impl fmt::Debug for FractionalProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractionalProblem")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("t_final", &self.t_final)
            .field("steps", &self.steps)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl FractionalProblem {
    pub fn new(
        grid: GridSpec,
        params: FractionalParams,
        t_final: f64,
        steps: usize,
        source: SpaceTimeFn,
        u0: SpaceFn,
        exact: Option<SpaceTimeFn>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "need at least one time step".into(),
            ));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidParameter(
                "final time must be positive".into(),
            ));
        }
        if params.d() != grid.n.len() {
            return Err(Error::DimensionMismatch {
                expected: params.d(),
                found: grid.n.len(),
            });
        }
        let tau_step = t_final / steps as f64;
        Ok(Self {
            grid,
            params,
            t_final,
            steps,
            tau_step,
            nu: 1.0 / tau_step,
            source,
            u0,
            exact,
        })
    }

    pub fn operator(&self) -> Result<MultilevelOperator> {
        assemble_operator(&self.params, &self.grid, self.nu)
    }

    pub fn preconditioner(&self) -> Result<TauPreconditioner> {
        build_preconditioner(&self.params, &self.grid, self.nu)
    }

    pub fn initial(&self) -> Vec<f64> {
        let u0 = &self.u0;
        sample_grid(self, |x, _| u0(x), 0.0)
    }
}

/// Samples `f(·, t)` at the interior grid points in lexicographic order.
pub fn sample_grid<F>(problem: &FractionalProblem, f: F, t: f64) -> Vec<f64>
where
    F: Fn(&[f64], f64) -> f64,
{
    sample_on(&problem.grid, f, t)
}

pub fn sample_on<F>(grid: &GridSpec, f: F, t: f64) -> Vec<f64>
where
    F: Fn(&[f64], f64) -> f64,
{
    let d = grid.n.len();
    let total = grid.total();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for i in 0..d {
            x[i] = grid.a[i] + (idx[i] + 1) as f64 * grid.h[i];
        }
        out.push(f(&x, t));
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < grid.n[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub iters: usize,
    pub relres: f64,
    pub true_relres: f64,
    pub converged: bool,
    pub err_inf: Option<f64>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

// Solves Y A u = Y b.
fn symmetrized_solve(
    a: &MultilevelOperator,
    precond: Option<&TauPreconditioner>,
    b: &[f64],
    cfg: &MinresConfig,
) -> Result<crate::krylov::MinresResult> {
    let yb: Vec<f64> = b.iter().rev().copied().collect();
    match precond {
        Some(p) => pminres(|x| a.apply_symmetrized(x), |x| p.apply_inverse(x), &yb, cfg),
        None => pminres(|x| a.apply_symmetrized(x), identity, &yb, cfg),
    }
}

fn finish_step(
    problem: &FractionalProblem,
    step: usize,
    t_new: f64,
    res: crate::krylov::MinresResult,
) -> (Vec<f64>, StepReport) {
    let err_inf = problem.exact.as_ref().map(|ex| {
        let e = sample_grid(problem, |x, t| ex(x, t), t_new);
        max_abs_diff(&res.x, &e)
    });
    let report = StepReport {
        step,
        iters: res.iters,
        relres: res.relres(),
        true_relres: res.true_relres,
        converged: res.converged,
        err_inf,
    };
    (res.x, report)
}

/// One Crank–Nicolson step from time `t_k`:
/// `A u^{k+1} = (2νI − A) u^k + f(t_k + τ/2)`.
pub fn step_second_order(
    problem: &FractionalProblem,
    a: &MultilevelOperator,
    precond: Option<&TauPreconditioner>,
    u_k: &[f64],
    t_k: f64,
    cfg: &MinresConfig,
) -> Result<(Vec<f64>, StepReport)> {
    check_len(a.n(), u_k.len())?;
    let au = a.apply(u_k)?;
    let src = &problem.source;
    let f = sample_grid(problem, |x, t| src(x, t), t_k + 0.5 * problem.tau_step);
    let nu2 = 2.0 * a.nu();
    let b: Vec<f64> = (0..u_k.len())
        .map(|i| nu2 * u_k[i] - au[i] + f[i])
        .collect();
    let res = symmetrized_solve(a, precond, &b, cfg)?;
    let step = (t_k / problem.tau_step).round() as usize + 1;
    Ok(finish_step(problem, step, t_k + problem.tau_step, res))
}

/// One backward Euler step arriving at time `t_k`: `Ã u^k = ν u^{k−1} + f(t_k)`.
pub fn step_first_order(
    problem: &FractionalProblem,
    a: &MultilevelOperator,
    precond: Option<&TauPreconditioner>,
    u_prev: &[f64],
    t_k: f64,
    cfg: &MinresConfig,
) -> Result<(Vec<f64>, StepReport)> {
    check_len(a.n(), u_prev.len())?;
    let src = &problem.source;
    let f = sample_grid(problem, |x, t| src(x, t), t_k);
    let nu = a.nu();
    let b: Vec<f64> = u_prev.iter().zip(&f).map(|(u, s)| nu * u + s).collect();
    let res = symmetrized_solve(a, precond, &b, cfg)?;
    let step = (t_k / problem.tau_step).round() as usize;
    Ok(finish_step(problem, step, t_k, res))
}

/// Runs all `problem.steps` steps, warm-starting each solve from the previous iterate.
pub fn march(
    problem: &FractionalProblem,
    precond: Option<&TauPreconditioner>,
    cfg: &MinresConfig,
) -> Result<(Vec<f64>, Vec<StepReport>)> {
    let a = problem.operator()?;
    let mut u = problem.initial();
    let mut reports = Vec::with_capacity(problem.steps);
    for k in 0..problem.steps {
        let step_cfg = MinresConfig {
            x0: Some(u.clone()),
            ..cfg.clone()
        };
        let (next, rep) = match problem.params.scheme {
            Scheme::SecondOrder => step_second_order(
                problem,
                &a,
                precond,
                &u,
                k as f64 * problem.tau_step,
                &step_cfg,
            )?,
            Scheme::FirstOrder => step_first_order(
                problem,
                &a,
                precond,
                &u,
                (k + 1) as f64 * problem.tau_step,
                &step_cfg,
            )?,
        };
        u = next;
        reports.push(rep);
    }
    Ok((u, reports))
}

/// Benchmark setups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Example {
    /// Unit square, no closed-form solution, `τ = 1/⌈n₁^{α₁}⌉`.
    One,
    /// `(0, 2)²` with a polynomial-in-space exact solution, `τ = 1/(n₁+1)`.
    Two,
}

impl Example {
    pub fn default_scheme(self) -> Scheme {
        match self {
            Example::One => Scheme::FirstOrder,
            Example::Two => Scheme::SecondOrder,
        }
    }

    pub fn coefficients(self) -> ([f64; 2], [f64; 2]) {
        match self {
            Example::One => ([2.0, 0.3], [0.5, 1.0]),
            Example::Two => ([3.0, 2.0], [1.0, 1.0]),
        }
    }

    pub fn problem(self, n1: usize, alphas: (f64, f64)) -> Result<FractionalProblem> {
        self.problem_with_scheme(n1, alphas, self.default_scheme())
    }

    pub fn problem_with_scheme(
        self,
        n1: usize,
        alphas: (f64, f64),
        scheme: Scheme,
    ) -> Result<FractionalProblem> {
        let (dp, dm) = self.coefficients();
        let params =
            FractionalParams::new(vec![alphas.0, alphas.1], dp.to_vec(), dm.to_vec(), scheme)?;
        match self {
            Example::One => {
                let grid = GridSpec::uniform(0.0, 1.0, n1, 2)?;
                let steps = (n1 as f64).powf(alphas.0).ceil() as usize;
                let source: SpaceTimeFn = Arc::new(|x: &[f64], t: f64| {
                    100.0 * (10.0 * x[0]).sin() * x[1].cos() + (10.0 * t).sin() * x[0] * x[1]
                });
                FractionalProblem::new(
                    grid,
                    params,
                    1.0,
                    steps,
                    source,
                    Arc::new(|_: &[f64]| 0.0),
                    None,
                )
            }
            Example::Two => {
                let grid = GridSpec::uniform(0.0, 2.0, n1, 2)?;
                let exact: SpaceTimeFn =
                    Arc::new(|x: &[f64], t: f64| t.exp() * bump(x[0]) * bump(x[1]));
                let ex0 = exact.clone();
                let u0: SpaceFn = Arc::new(move |x: &[f64]| ex0(x, 0.0));
                let source = example2_source(alphas, dp, dm);
                FractionalProblem::new(grid, params, 1.0, n1 + 1, source, u0, Some(exact))
            }
        }
    }
}

fn bump(x: f64) -> f64 {
    x * x * (2.0 - x) * (2.0 - x)
}

/// Source term for which `eᵗ x₁²(2−x₁)² x₂²(2−x₂)²` solves the equation
/// on `(0, 2)²`: `x²(2−x)² = 4x² − 4x³ + x⁴` and its mirror image.
fn example2_source(alphas: (f64, f64), dp: [f64; 2], dm: [f64; 2]) -> SpaceTimeFn {
    const C: [(i32, f64); 3] = [(2, 4.0), (3, -4.0), (4, 1.0)];
    let factors = |alpha: f64| -> [f64; 3] {
        let mut f = [0.0; 3];
        for (slot, (i, c)) in f.iter_mut().zip(C) {
            *slot = c * gamma(i as f64 + 1.0) / gamma(i as f64 + 1.0 - alpha);
        }
        f
    };
    let k = [factors(alphas.0), factors(alphas.1)];
    let al = [alphas.0, alphas.1];
    Arc::new(move |x: &[f64], t: f64| {
        let s = |j: usize, xv: f64| -> f64 {
            C.iter()
                .zip(&k[j])
                .map(|((i, _), kj)| {
                    let p = *i as f64 - al[j];
                    kj * (dp[j] * xv.powf(p) + dm[j] * (2.0 - xv).powf(p))
                })
                .sum()
        };
        let (p1, p2) = (bump(x[0]), bump(x[1]));
        t.exp() * (p1 * p2 - p2 * s(0, x[0]) - p1 * s(1, x[1]))
    })
}

/// Preconditioner choice for the symmetrized solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrecondKind {
    Tau,
    Identity,
}

impl PrecondKind {
    pub fn name(self) -> &'static str {
        match self {
            PrecondKind::Tau => "tau",
            PrecondKind::Identity => "identity",
        }
    }
}

/// First-step outcome for one table cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub alphas: (f64, f64),
    pub n1: usize,
    pub n: usize,
    pub preconditioner: PrecondKind,
    pub iters: usize,
    pub converged: bool,
    pub relres: f64,
    pub true_relres: f64,
    pub err_inf: Option<f64>,
    pub wall_seconds: f64,
}

/// Solves the first time step of `problem` from `(1, …, 1)ᵀ/√n`.
pub fn run_first_step(
    problem: &FractionalProblem,
    kind: PrecondKind,
    tol: f64,
    maxit: usize,
) -> Result<TableRow> {
    let start = Instant::now();
    let a = problem.operator()?;
    let p = match kind {
        PrecondKind::Tau => Some(problem.preconditioner()?),
        PrecondKind::Identity => None,
    };
    let n = a.n();
    let cfg = MinresConfig {
        tol,
        maxit,
        x0: None,
    }
    .with_uniform_guess(n);
    let u0 = problem.initial();
    let (_, rep) = match problem.params.scheme {
        Scheme::SecondOrder => step_second_order(problem, &a, p.as_ref(), &u0, 0.0, &cfg)?,
        Scheme::FirstOrder => {
            step_first_order(problem, &a, p.as_ref(), &u0, problem.tau_step, &cfg)?
        }
    };
    Ok(TableRow {
        alphas: (problem.params.alpha[0], problem.params.alpha[1]),
        n1: problem.grid.n[0],
        n,
        preconditioner: kind,
        iters: rep.iters,
        converged: rep.converged,
        relres: rep.relres,
        true_relres: rep.true_relres,
        err_inf: rep.err_inf,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_table(example: Example, n1: usize) -> Result<Vec<TableRow>> {
    let mut rows = Vec::with_capacity(2 * TABLE_ALPHAS.len());
    for &al in &TABLE_ALPHAS {
        let problem = example.problem(n1, al)?;
        for kind in [PrecondKind::Tau, PrecondKind::Identity] {
            rows.push(run_first_step(&problem, kind, 1e-8, 100)?);
        }
    }
    Ok(rows)
}

/// All nine order pairs of the first benchmark, Tau and unpreconditioned.
pub fn run_example1(n1: usize) -> Result<Vec<TableRow>> {
    run_table(Example::One, n1)
}

/// All nine order pairs of the second benchmark, Tau and unpreconditioned.
pub fn run_example2(n1: usize) -> Result<Vec<TableRow>> {
    run_table(Example::Two, n1)
}
