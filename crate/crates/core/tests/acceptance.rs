//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use symtau::discretization::{
    assemble_operator, build_l, epsilon_bound, level_weights, symbol_closed, symbol_series,
    weights_first, weights_second, FractionalParams, GridSpec, Scheme,
};
use symtau::krylov::{bound_curve, pminres, MinresConfig};
use symtau::pde::{run_first_step, Example, PrecondKind, TABLE_ALPHAS};
use symtau::spectrum::{
    equivalence_spectrum, generalized_sym_eig, ideal_preconditioned_spectrum,
    preconditioned_spectrum,
};
use symtau::tau::{build_preconditioner, tau_dense};
use symtau::transforms::{DstMethod, TransformPlan};
use symtau::MultilevelOperator;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(limit: Duration, start: Instant, msg: String) -> Outcome {
    let t = start.elapsed();
    ensure(
        t < limit,
        format!(
            "{msg}; {:.2} s of {} s budget",
            t.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn example_params(example: Example, al: (f64, f64), scheme: Scheme) -> FractionalParams {
    let (dp, dm) = example.coefficients();
    FractionalParams::new(vec![al.0, al.1], dp.to_vec(), dm.to_vec(), scheme).unwrap()
}

// Example grid and ν for the given scheme: the first-order scheme uses the
// Example-1 setup, the second-order scheme the Example-2 setup.
fn example_setup(
    example: Example,
    n1: usize,
    al: (f64, f64),
    scheme: Scheme,
) -> (FractionalParams, GridSpec, f64) {
    let p = example.problem_with_scheme(n1, al, scheme).unwrap();
    (example_params(example, al, scheme), p.grid.clone(), p.nu)
}

fn scheme_example(scheme: Scheme) -> Example {
    match scheme {
        Scheme::FirstOrder => Example::One,
        Scheme::SecondOrder => Example::Two,
    }
}

const SCHEMES: [Scheme; 2] = [Scheme::FirstOrder, Scheme::SecondOrder];

fn c1_transforms() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let (mut inv, mut pars, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    for m in [1, 3, 7, 15, 31, 63, 255, 511] {
        let fast = TransformPlan::with_method(m, DstMethod::Fft).unwrap();
        let slow = TransformPlan::with_method(m, DstMethod::Direct).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = fast.dst1(&x).unwrap();
            inv = inv.max(diff_inf(&fast.dst1(&y).unwrap(), &x) / inf(&x));
            pars = pars.max((l2(&y) - l2(&x)).abs() / l2(&x));
            let d = slow.dst1(&x).unwrap();
            agree = agree.max(diff_inf(&y, &d) / inf(&d));
        }
    }
    let msg = format!("involution {inv:.1e}, Parseval {pars:.1e}, fft vs direct {agree:.1e}");
    if inv <= 1e-12 && pars <= 1e-12 && agree <= 1e-13 {
        within(Duration::from_secs(5), start, msg)
    } else {
        Err(msg)
    }
}

// Dense νI + Σ I⊗(v₊L + v₋Lᵀ)⊗I built with Kronecker products.
fn kronecker_oracle(dims: &[usize], nu: f64, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = dims.iter().product();
    let mut a = DMatrix::<f64>::identity(n, n) * nu;
    for (axis, blk) in blocks.iter().enumerate() {
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let term = DMatrix::<f64>::identity(outer, outer)
            .kronecker(blk)
            .kronecker(&DMatrix::<f64>::identity(inner, inner));
        a += term;
    }
    a
}

fn c2_operator_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut largest = 0;
    for cfg in 0..50 {
        let d = 1 + cfg % 3;
        let dims: Vec<usize> = loop {
            let cap = match d {
                1 => 4096,
                2 => 64,
                _ => 16,
            };
            let dims: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=cap)).collect();
            if dims.iter().product::<usize>() <= 4096 {
                break dims;
            }
        };
        let scheme = if rng.gen() {
            Scheme::FirstOrder
        } else {
            Scheme::SecondOrder
        };
        let alpha: Vec<f64> = (0..d).map(|_| rng.gen_range(1.01..1.99)).collect();
        let dp: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..3.0)).collect();
        let dm: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..3.0)).collect();
        let params = FractionalParams::new(alpha, dp, dm, scheme).unwrap();
        let grid =
            GridSpec::new(vec![0.0; d], vec![rng.gen_range(0.5..3.0); d], dims.clone()).unwrap();
        let nu = rng.gen_range(0.0..100.0);
        let a = assemble_operator(&params, &grid, nu).unwrap();
        let blocks: Vec<DMatrix<f64>> = (0..d)
            .map(|i| {
                let l = build_l(params.alpha[i], dims[i], scheme)
                    .unwrap()
                    .to_dense();
                let (vp, vm) = level_weights(&params, &grid, i);
                &l * vp + l.transpose() * vm
            })
            .collect();
        let dense = kronecker_oracle(&dims, nu, &blocks);
        let n = a.n();
        largest = largest.max(n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xv = DVector::from_column_slice(&x);
        let want = (&dense * &xv).as_slice().to_vec();
        let want_t = (dense.transpose() * &xv).as_slice().to_vec();
        worst = worst.max(diff_inf(&a.apply(&x).unwrap(), &want) / inf(&want));
        worst = worst.max(diff_inf(&a.apply_transpose(&x).unwrap(), &want_t) / inf(&want_t));
    }
    let msg = format!("50 configurations up to n={largest}, worst relative error {worst:.1e}");
    if worst <= 1e-11 {
        within(Duration::from_secs(60), start, msg)
    } else {
        Err(msg)
    }
}

fn flipped_dense(a: &MultilevelOperator) -> DMatrix<f64> {
    let mut d = a.materialize().unwrap();
    let n = d.nrows();
    for i in 0..n / 2 {
        d.swap_rows(i, n - 1 - i);
    }
    d
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn c3_symmetrization() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n1 in [15, 31] {
        for scheme in SCHEMES {
            for al in [(1.1, 1.9), (1.5, 1.5), (1.9, 1.1)] {
                let (p, g, nu) = example_setup(scheme_example(scheme), n1, al, scheme);
                let ya = flipped_dense(&assemble_operator(&p, &g, nu).unwrap());
                worst = worst.max(inf_norm(&(&ya - ya.transpose())) / inf_norm(&ya));
                count += 1;
            }
        }
    }
    ensure(
        worst <= 1e-13,
        format!("{count} operators, worst ‖YA − (YA)ᵀ‖∞/‖YA‖∞ = {worst:.1e}"),
    )
}

fn c4_coefficients() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut closed = 0.0f64;
    for _ in 0..50 {
        let a: f64 = rng.gen_range(1.01..1.99);
        let w = weights_second(a, 1000).unwrap().values;
        if (w[0] - a / 2.0).abs() > 1e-15 {
            return Err(format!("α={a}: w₀ = {} ≠ α/2", w[0]));
        }
        let w1 = (2.0 - a - a * a) / 2.0;
        let w2 = a * (a * a + a - 4.0) / 4.0;
        closed = closed.max((w[1] - w1).abs()).max((w[2] - w2).abs());
        if !(w[1] < 0.0) {
            return Err(format!("α={a}: w₁ = {} not negative", w[1]));
        }
        if !(1.0 >= w[0] && w[0] >= w[3]) {
            return Err(format!("α={a}: ordering 1 ≥ w₀ ≥ w₃ fails"));
        }
        if let Some(k) = (3..1000).find(|&k| !(w[k] >= w[k + 1] && w[k + 1] >= 0.0)) {
            return Err(format!("α={a}: monotone nonnegative tail fails at k={k}"));
        }
        let mut s = w[0] + w[1];
        for (k, wk) in w.iter().enumerate().skip(2) {
            s += wk;
            if !(s < 0.0) {
                return Err(format!("α={a}: partial sum to {k} is {s}"));
            }
        }
        let g = weights_first(a, 1000).unwrap().values;
        if g[0] != 1.0 || (g[1] + a).abs() > 1e-15 {
            return Err(format!("α={a}: g̃₀, g̃₁ wrong"));
        }
        if let Some(k) = (2..1000).find(|&k| !(g[k] > g[k + 1] && g[k + 1] > 0.0)) {
            return Err(format!("α={a}: g̃ not positive decreasing at k={k}"));
        }
        let mut s = 0.0;
        for (k, gk) in g.iter().enumerate() {
            s += gk;
            if k >= 1 && !(s < 0.0) {
                return Err(format!("α={a}: first-order partial sum to {k} is {s}"));
            }
        }
    }
    ensure(
        closed <= 1e-13,
        format!("50 orders, K=1000; closed forms agree to {closed:.1e}"),
    )
}

fn c5_symbols() -> Outcome {
    let k = 10_000;
    let mut worst = 0.0f64;
    let mut min_re = f64::INFINITY;
    for scheme in SCHEMES {
        for alpha in [1.1, 1.5, 1.9] {
            let table = match scheme {
                Scheme::FirstOrder => weights_first(alpha, k + 1).unwrap(),
                Scheme::SecondOrder => weights_second(alpha, k + 1).unwrap(),
            };
            for theta in [
                PI / 4.0,
                -PI / 4.0,
                PI / 2.0,
                -PI / 2.0,
                3.0 * PI / 4.0,
                -3.0 * PI / 4.0,
            ] {
                let s = symbol_series(&table, theta, k).unwrap();
                let c = symbol_closed(alpha, theta, scheme).unwrap();
                worst = worst.max((s - c).norm());
            }
            for i in 1..=200 {
                let theta = PI * i as f64 / 200.0;
                for t in [theta, -theta] {
                    // Symbol of the weight matrix [w_{j−k+1}], i.e. of −L.
                    let weight_symbol = -symbol_closed(alpha, t, scheme).unwrap();
                    min_re = min_re.min(-weight_symbol.re);
                }
            }
            let h = build_l(alpha, 64, scheme)
                .unwrap()
                .symmetric_part()
                .to_dense();
            if h.cholesky().is_none() {
                return Err(format!("{scheme:?} α={alpha}: H(L) at m=64 not SPD"));
            }
        }
    }
    let msg = format!(
        "series vs closed gap {worst:.1e}; min over θ≠0 of −Re(weight-matrix symbol) = {min_re:.2e}; H(L) SPD"
    );
    ensure(worst <= 1e-3 && min_re > 0.0, msg)
}

fn c6_tau_lemma() -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for scheme in SCHEMES {
        for alpha in [1.1, 1.5, 1.9] {
            for m in [8, 16, 32] {
                let h = build_l(alpha, m, scheme).unwrap().symmetric_part();
                let ev = generalized_sym_eig(&h.to_dense(), &tau_dense(&h).unwrap())
                    .map_err(|e| e.to_string())?;
                lo = lo.min(ev[0]);
                hi = hi.max(*ev.last().unwrap());
            }
        }
    }
    ensure(
        lo > 0.5 + 1e-10 && hi < 1.5 - 1e-10,
        format!("eigenvalues of τ(H(L))⁻¹H(L) span [{lo:.6}, {hi:.6}]"),
    )
}

fn c7_equivalence() -> Outcome {
    let mut bad = 0;
    let mut runs = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n1 in [7, 15] {
        for example in [Example::One, Example::Two] {
            for scheme in SCHEMES {
                for &al in &TABLE_ALPHAS {
                    let (p, g, nu) = example_setup(example, n1, al, scheme);
                    let a = assemble_operator(&p, &g, nu).unwrap();
                    let pc = build_preconditioner(&p, &g, nu).unwrap();
                    let r = equivalence_spectrum(&a, &pc).map_err(|e| e.to_string())?;
                    bad += r.violations;
                    lo = lo.min(r.eigenvalues[0]);
                    hi = hi.max(*r.eigenvalues.last().unwrap());
                    runs += 1;
                }
            }
        }
    }
    ensure(
        bad == 0,
        format!("{runs} spectra, {bad} violations, eigenvalues in [{lo:.4}, {hi:.4}]"),
    )
}

fn c8_main_theorems() -> Outcome {
    let start = Instant::now();
    let mut bad = 0;
    let mut runs = 0;
    let mut min_inner = f64::INFINITY;
    let mut worst_outer_ratio = 0.0f64;
    for n1 in [15, 31] {
        for scheme in SCHEMES {
            for &al in &TABLE_ALPHAS {
                let (p, g, nu) = example_setup(scheme_example(scheme), n1, al, scheme);
                let eps = epsilon_bound(&p).unwrap();
                let a = assemble_operator(&p, &g, nu).unwrap();
                let pc = build_preconditioner(&p, &g, nu).unwrap();
                let r = preconditioned_spectrum(&a, &pc, eps).map_err(|e| e.to_string())?;
                bad += r.violations;
                min_inner = min_inner.min(r.min_abs());
                worst_outer_ratio = worst_outer_ratio.max(r.max_abs() / (1.5 * (1.0 + eps)));
                runs += 1;
            }
        }
    }
    let mut ideal_min = f64::INFINITY;
    let mut ideal_bad = 0;
    for scheme in SCHEMES {
        for &al in &TABLE_ALPHAS {
            let (p, g, nu) = example_setup(scheme_example(scheme), 7, al, scheme);
            let eps = epsilon_bound(&p).unwrap();
            let a = assemble_operator(&p, &g, nu).unwrap();
            let r = ideal_preconditioned_spectrum(&a, eps).map_err(|e| e.to_string())?;
            ideal_min = ideal_min.min(r.min_abs());
            ideal_bad += r.violations;
        }
    }
    let msg = format!(
        "{runs} Tau spectra: {bad} violations, min |λ| {min_inner:.4}, max |λ|/(1.5(1+ε*)) {worst_outer_ratio:.4}; \
         ideal: min |λ| {ideal_min:.10}, {ideal_bad} violations of ±[1, 1+ε*]"
    );
    if bad == 0 && ideal_min >= 1.0 - 1e-8 {
        within(Duration::from_secs(600), start, msg)
    } else {
        Err(msg)
    }
}

fn c9_mesh_independence() -> Outcome {
    let sizes = [31, 63, 127, 255];
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for &al in &TABLE_ALPHAS {
        let mut tau = Vec::new();
        let mut ident = Vec::new();
        for &n1 in &sizes {
            let p = Example::One.problem(n1, al).unwrap();
            let t = run_first_step(&p, PrecondKind::Tau, 1e-8, 100).unwrap();
            // Large cap so unpreconditioned growth is observable rather than clipped.
            let i = run_first_step(&p, PrecondKind::Identity, 1e-8, 5000).unwrap();
            if !t.converged {
                failures.push(format!("{al:?} n1={n1}: Tau solve did not converge"));
            }
            tau.push(t.iters);
            ident.push(if i.converged { i.iters } else { usize::MAX });
        }
        let spread = tau.iter().max().unwrap() - tau.iter().min().unwrap();
        if spread > 2 || *tau.iter().max().unwrap() > 16 {
            failures.push(format!("{al:?}: Tau counts {tau:?}"));
        }
        if tau.iter().zip(&ident).any(|(t, i)| i <= t) {
            failures.push(format!("{al:?}: identity {ident:?} not above Tau {tau:?}"));
        }
        if !ident.windows(2).all(|w| w[1] > w[0]) {
            failures.push(format!(
                "{al:?}: identity counts do not grow: {}",
                fmt_counts(&ident)
            ));
        }
        lines.push(format!("{al:?} tau {tau:?} id {}", fmt_counts(&ident)));
    }
    let summary = lines.join("; ");
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{} | {}", failures.join("; "), summary))
    }
}

fn fmt_counts(v: &[usize]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|c| {
            if *c == usize::MAX {
                ">5000".into()
            } else {
                c.to_string()
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn c10_example2_accuracy() -> Outcome {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for al in [(1.1, 1.1), (1.9, 1.9)] {
        let mut errs = Vec::new();
        let mut iters = Vec::new();
        for n1 in [15, 31, 63, 127] {
            let p = Example::Two.problem(n1, al).unwrap();
            let r = run_first_step(&p, PrecondKind::Tau, 1e-8, 100).unwrap();
            errs.push(r.err_inf.unwrap());
            iters.push(r.iters);
        }
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        for (r, n1) in ratios.iter().zip([15, 31, 63]) {
            if !(3.0..=5.0).contains(r) {
                failures.push(format!("{al:?}: Err({n1})/Err({}) = {r:.2}", 2 * n1 + 1));
            }
        }
        let spread = iters.iter().max().unwrap() - iters.iter().min().unwrap();
        if *iters.iter().max().unwrap() > 11 || spread > 2 {
            failures.push(format!("{al:?}: Tau iterations {iters:?}"));
        }
        let e: Vec<String> = errs.iter().map(|v| format!("{v:.2e}")).collect();
        let r: Vec<String> = ratios.iter().map(|v| format!("{v:.2}")).collect();
        lines.push(format!(
            "{al:?} Err [{}] ratios [{}] iters {iters:?}",
            e.join(", "),
            r.join(", ")
        ));
    }
    let summary = lines.join("; ");
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{} | {}", failures.join("; "), summary))
    }
}

fn c11_residual_bound() -> Outcome {
    let p = Example::Two.problem(15, (1.5, 1.5)).unwrap();
    let eps = epsilon_bound(&p.params).unwrap();
    let a = p.operator().unwrap();
    let pc = p.preconditioner().unwrap();
    let u0 = p.initial();
    let au = a.apply(&u0).unwrap();
    let f = symtau::pde::sample_grid(&p, |x, t| (p.source)(x, t), 0.5 * p.tau_step);
    let b: Vec<f64> = (0..u0.len())
        .map(|i| 2.0 * p.nu * u0[i] - au[i] + f[i])
        .rev()
        .collect();
    let cfg = MinresConfig::default().with_uniform_guess(a.n());
    let r = pminres(
        |x| a.apply_symmetrized(x),
        |x| pc.apply_inverse(x),
        &b,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let bound = bound_curve(eps, r.iters);
    let r0 = r.resnorm_history[0];
    let mut worst_k = 0;
    let mut worst_slack = f64::INFINITY;
    for (k, rk) in r.resnorm_history.iter().enumerate() {
        let slack = bound[k] + 1e-12 - rk / r0;
        if slack < worst_slack {
            worst_slack = slack;
            worst_k = k;
        }
    }
    ensure(
        r.converged && worst_slack >= 0.0,
        format!(
            "ε*={eps}, {} iterations, tightest margin {worst_slack:.3e} at k={worst_k}",
            r.iters
        ),
    )
}

fn c12_degeneracy() -> Outcome {
    let mut max_asym = 0.0f64;
    let mut bad = 0;
    let mut runs = 0;
    for scheme in SCHEMES {
        for &al in &TABLE_ALPHAS {
            let p = FractionalParams::new(vec![al.0, al.1], vec![1.5, 0.7], vec![1.5, 0.7], scheme)
                .unwrap();
            let eps = epsilon_bound(&p).unwrap();
            if eps != 0.0 {
                return Err(format!("{al:?}: ε* = {eps}"));
            }
            let g = GridSpec::uniform(0.0, 1.0, 15, 2).unwrap();
            let a = assemble_operator(&p, &g, 16.0).unwrap();
            let d = a.materialize().unwrap();
            max_asym = max_asym.max((&d - d.transpose()).abs().max() / d.abs().max());
            let pc = build_preconditioner(&p, &g, 16.0).unwrap();
            let r = preconditioned_spectrum(&a, &pc, 0.0).map_err(|e| e.to_string())?;
            bad += r
                .eigenvalues
                .iter()
                .filter(|v| !(v.abs() > 0.5 - 1e-8 && v.abs() < 1.5 + 1e-8))
                .count();
            runs += 1;
        }
    }
    ensure(
        max_asym <= f64::EPSILON && bad == 0,
        format!("ε*=0 exactly; {runs} operators, max asymmetry {max_asym:.1e}, {bad} eigenvalues outside ±(0.5, 1.5)"),
    )
}

fn main() -> ExitCode {
    let checks: [Check; 12] = [
        ("transform correctness", c1_transforms),
        ("operator oracle equivalence", c2_operator_oracle),
        ("symmetrization", c3_symmetrization),
        ("coefficient lemma suite", c4_coefficients),
        ("symbol consistency", c5_symbols),
        ("tau lemma interval", c6_tau_lemma),
        ("spectral equivalence", c7_equivalence),
        ("main eigenvalue theorems", c8_main_theorems),
        ("mesh independence", c9_mesh_independence),
        ("example 2 accuracy", c10_example2_accuracy),
        ("MINRES residual bound", c11_residual_bound),
        ("symmetric-coefficient degeneracy", c12_degeneracy),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.2} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {d} [{secs:.2} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
