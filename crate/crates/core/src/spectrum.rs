//! Dense spectral checks of preconditioned operators and CSV export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tau::TauPreconditioner;
use crate::toeplitz::{MultilevelOperator, DENSE_CAP};

/// Size limit for checks that need a dense Cholesky factor.
pub const CHOLESKY_CAP: usize = 1024;

const MAX_SWEEPS: usize = 60;

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖M − Mᵀ‖∞ / ‖M‖∞`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let s = inf_norm(m);
    if s == 0.0 {
        0.0
    } else {
        inf_norm(&(m - m.transpose())) / s
    }
}

struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
}

// Row pass: rows p, q ← (c·p − s·q, s·p + c·q).
fn rotate_rows(a: &mut [f64], n: usize, rots: &[Rotation]) {
    for r in rots {
        let (lo, hi) = (r.p.min(r.q), r.p.max(r.q));
        let (head, tail) = a.split_at_mut(hi * n);
        let rl = &mut head[lo * n..lo * n + n];
        let rh = &mut tail[..n];
        let (rp, rq) = if r.p < r.q { (rl, rh) } else { (rh, rl) };
        let (c, s) = (r.c, r.s);
        for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
            let (u, v) = (*x, *y);
            *x = c * u - s * v;
            *y = s * u + c * v;
        }
    }
}

// Column pass: columns p, q ← (c·p − s·q, s·p + c·q), one row at a time.
fn rotate_cols(a: &mut [f64], n: usize, rots: &[Rotation]) {
    for row in a.chunks_exact_mut(n) {
        for r in rots {
            let (u, v) = (row[r.p], row[r.q]);
            row[r.p] = r.c * u - r.s * v;
            row[r.q] = r.s * u + r.c * v;
        }
    }
}

fn off_frobenius(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Sorted eigenvalues of a symmetric matrix by cyclic Jacobi rotations in
/// round-robin order, so that each round applies disjoint rotations.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n > DENSE_CAP {
        return Err(Error::SizeCapExceeded { n, cap: DENSE_CAP });
    }
    let defect = symmetry_defect(m);
    if defect > 1e-10 {
        return Err(Error::NotSymmetric { defect });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // Row-major copy of the symmetric part.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = 1e-12 * frob;
    let skip = 1e-15 * frob / n as f64;

    let players = n + n % 2;
    let mut order: Vec<usize> = (0..players).collect();
    let mut rots = Vec::with_capacity(players / 2);
    for _ in 0..MAX_SWEEPS {
        if off_frobenius(&a, n) <= target {
            break;
        }
        for _ in 0..players - 1 {
            rots.clear();
            for k in 0..players / 2 {
                let (p, q) = (order[k], order[players - 1 - k]);
                if p >= n || q >= n {
                    continue;
                }
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                rots.push(Rotation { p, q, c, s: t * c });
            }
            if !rots.is_empty() {
                rotate_rows(&mut a, n, &rots);
                rotate_cols(&mut a, n, &rots);
                for r in &rots {
                    a[r.p * n + r.q] = 0.0;
                    a[r.q * n + r.p] = 0.0;
                }
            }
            order[1..].rotate_right(1);
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Eigenvalues of `B⁻¹A` for symmetric `A` and SPD `B`, via `L⁻¹AL⁻ᵀ`.
pub fn generalized_sym_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    sym_eig(&cholesky_sandwich(a, b)?)
}

fn cholesky_sandwich(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    if n > CHOLESKY_CAP {
        return Err(Error::SizeCapExceeded {
            n,
            cap: CHOLESKY_CAP,
        });
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NotPositiveDefinite("singular factor".into()))?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular factor".into()))?;
    Ok(0.5 * (&m + m.transpose()))
}

/// Which eigenvalue statement a report checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// `P^{−1/2} Y A P^{−1/2}` in `±(1/2, 3/2(1+ε))`.
    TauPreconditioned,
    /// `H(A)^{−1/2} Y A H(A)^{−1/2}` in `±[1, 1+ε]`.
    IdealPreconditioned,
    /// `P^{−1/2} H(A) P^{−1/2}` in `(1/2, 3/2)`.
    SpectralEquivalence,
    /// `Y A` alone; nothing is asserted.
    Unconstrained,
}

impl Theorem {
    pub fn tag(self) -> &'static str {
        match self {
            Theorem::TauPreconditioned => "tau-preconditioned",
            Theorem::IdealPreconditioned => "ideal-preconditioned",
            Theorem::SpectralEquivalence => "spectral-equivalence",
            Theorem::Unconstrained => "unconstrained",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub epsilon_star: f64,
    /// Admissible interval for negative eigenvalues, if any are allowed.
    pub interval_lo: Option<(f64, f64)>,
    /// Admissible interval for positive eigenvalues.
    pub interval_hi: Option<(f64, f64)>,
    pub tolerance: f64,
    pub violations: usize,
    pub theorem: Theorem,
}

impl SpectrumReport {
    fn new(
        eigenvalues: Vec<f64>,
        epsilon_star: f64,
        hi: Option<(f64, f64)>,
        two_sided: bool,
        tolerance: f64,
        theorem: Theorem,
    ) -> Self {
        let lo = if two_sided {
            hi.map(|(a, b)| (-b, -a))
        } else {
            None
        };
        let inside = |v: f64, iv: Option<(f64, f64)>| {
            iv.is_some_and(|(a, b)| v >= a - tolerance && v <= b + tolerance)
        };
        let violations = match hi {
            None => 0,
            Some(_) => eigenvalues
                .iter()
                .filter(|&&v| !(inside(v, lo) || inside(v, hi)))
                .count(),
        };
        Self {
            n: eigenvalues.len(),
            eigenvalues,
            epsilon_star,
            interval_lo: lo,
            interval_hi: hi,
            tolerance,
            violations,
            theorem,
        }
    }

    /// Smallest eigenvalue magnitude.
    pub fn min_abs(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Report carrying only eigenvalues, e.g. one read back from CSV.
    pub fn unconstrained(eigenvalues: Vec<f64>) -> Self {
        Self::new(eigenvalues, 0.0, None, false, 0.0, Theorem::Unconstrained)
    }
}

fn dense_from_columns<F>(n: usize, mut col: F) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if n > DENSE_CAP {
        return Err(Error::SizeCapExceeded { n, cap: DENSE_CAP });
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let c = col(&e)?;
        m.set_column(j, &DVector::from_vec(c));
        e[j] = 0.0;
    }
    Ok(m)
}

fn symmetrize_checked(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = m.abs().max();
    let defect = if scale == 0.0 {
        0.0
    } else {
        (&m - m.transpose()).abs().max() / scale
    };
    if defect > 1e-9 {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(0.5 * (&m + m.transpose()))
}

fn check_dims(a: &MultilevelOperator, p: &TauPreconditioner) -> Result<()> {
    if a.dims() != p.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: p.lambda().len(),
        });
    }
    Ok(())
}

/// Spectrum of `P^{−1/2} (Y A) P^{−1/2}` against `±(1/2, 3/2 (1+ε))`.
pub fn preconditioned_spectrum(
    a: &MultilevelOperator,
    p: &TauPreconditioner,
    epsilon: f64,
) -> Result<SpectrumReport> {
    check_dims(a, p)?;
    let m = dense_from_columns(a.n(), |e| {
        let z = p.apply_inv_sqrt(e)?;
        p.apply_inv_sqrt(&a.apply_symmetrized(&z)?)
    })?;
    let ev = sym_eig(&symmetrize_checked(m)?)?;
    Ok(SpectrumReport::new(
        ev,
        epsilon,
        Some((0.5, 1.5 * (1.0 + epsilon))),
        true,
        1e-8,
        Theorem::TauPreconditioned,
    ))
}

/// Spectrum of `H(A)^{−1/2} (Y A) H(A)^{−1/2}` against `±[1, 1+ε]`.
pub fn ideal_preconditioned_spectrum(
    a: &MultilevelOperator,
    epsilon: f64,
) -> Result<SpectrumReport> {
    let n = a.n();
    if n > CHOLESKY_CAP {
        return Err(Error::SizeCapExceeded {
            n,
            cap: CHOLESKY_CAP,
        });
    }
    let mut ya = a.materialize()?;
    // Y·A reverses the row order.
    for i in 0..n / 2 {
        ya.swap_rows(i, n - 1 - i);
    }
    let ya = symmetrize_checked(ya)?;
    let h = a.symmetric_part().materialize()?;
    let ev = generalized_sym_eig(&ya, &h)?;
    Ok(SpectrumReport::new(
        ev,
        epsilon,
        Some((1.0, 1.0 + epsilon)),
        true,
        1e-8,
        Theorem::IdealPreconditioned,
    ))
}

/// Spectrum of `P^{−1/2} H(A) P^{−1/2}` against `(1/2, 3/2)`.
pub fn equivalence_spectrum(
    a: &MultilevelOperator,
    p: &TauPreconditioner,
) -> Result<SpectrumReport> {
    check_dims(a, p)?;
    let m = dense_from_columns(a.n(), |e| {
        let z = p.apply_inv_sqrt(e)?;
        p.apply_inv_sqrt(&a.apply_symmetric_part(&z)?)
    })?;
    let ev = sym_eig(&symmetrize_checked(m)?)?;
    Ok(SpectrumReport::new(
        ev,
        0.0,
        Some((0.5, 1.5)),
        false,
        1e-10,
        Theorem::SpectralEquivalence,
    ))
}

/// Spectrum of `Y A` without preconditioning; exported for plotting only.
pub fn symmetrized_spectrum(a: &MultilevelOperator) -> Result<SpectrumReport> {
    let m = dense_from_columns(a.n(), |e| a.apply_symmetrized(e))?;
    let ev = sym_eig(&symmetrize_checked(m)?)?;
    Ok(SpectrumReport::unconstrained(ev))
}

/// Writes `index,eigenvalue` rows.
pub fn write_spectrum_csv<W: Write>(report: &SpectrumReport, mut w: W) -> Result<()> {
    writeln!(w, "index,eigenvalue")?;
    for (i, v) in report.eigenvalues.iter().enumerate() {
        writeln!(w, "{i},{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_spectrum_csv(report: &SpectrumReport, path: &Path) -> Result<()> {
    write_spectrum_csv(report, BufWriter::new(File::create(path)?))
}

/// Parses a file written by [`export_spectrum_csv`].
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<f64>> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some("index,eigenvalue") {
        return Err(Error::Parse("missing index,eigenvalue header".into()));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected two fields", k + 2)))?;
        let idx: usize = idx
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
        if idx != k {
            return Err(Error::Parse(format!(
                "line {}: index {idx} out of sequence",
                k + 2
            )));
        }
        out.push(
            val.parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?,
        );
    }
    Ok(out)
}
