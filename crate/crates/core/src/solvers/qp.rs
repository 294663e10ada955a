//! Box- and inequality-constrained convex QP.
//!
//! Minimizes `½ wᵀHw + gᵀw` over `|wᵢ| ≤ B` subject to a handful of affine
//! rows `aᵢᵀw ≤ bᵢ`. The affine rows are handled with a shifted quadratic
//! (augmented Lagrangian) penalty whose multipliers make the penalty exact at
//! finite weight; every penalized subproblem is solved by accelerated
//! projected gradient onto the box. The result is audited against the
//! original rows before it is returned.
//!
//! Infeasibility is detected two ways: a Farkas certificate built from the
//! multipliers (`min over box of λᵀ(Aw − b − tol) > 0`), or failure of the
//! final audit once the iteration budget is spent.

use crate::error::{CalfError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Row-major `dim × dim` symmetric positive semidefinite matrix.
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// Affine inequalities `row · w ≤ bound`.
    pub inequalities: Vec<(Vec<f64>, f64)>,
    pub box_half_width: f64,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.h[i * n..(i + 1) * n];
            acc += w[i] * (0.5 * dot(row, w) + self.g[i]);
        }
        acc
    }

    /// Largest violation of the affine rows at `w` (zero when satisfied).
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        self.inequalities
            .iter()
            .map(|(a, b)| (dot(a, w) - b).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn in_box(&self, w: &[f64]) -> bool {
        w.iter().all(|v| v.abs() <= self.box_half_width)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || self.h.len() != n * n {
            return Err(CalfError::Solver(format!(
                "inconsistent QP dimensions: g has {n}, H has {}",
                self.h.len()
            )));
        }
        let finite = self.h.iter().chain(self.g.iter()).all(|v| v.is_finite())
            && self.box_half_width.is_finite()
            && self
                .inequalities
                .iter()
                .all(|(a, b)| b.is_finite() && a.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(CalfError::Solver("non-finite QP data".into()));
        }
        if self.box_half_width <= 0.0 {
            return Err(CalfError::Solver("box half-width must be positive".into()));
        }
        if let Some((a, _)) = self.inequalities.iter().find(|(a, _)| a.len() != n) {
            return Err(CalfError::Solver(format!(
                "inequality row of length {} in a {n}-dimensional QP",
                a.len()
            )));
        }
        let scale = self.h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (self.h[i * n + j] - self.h[j * n + i]).abs() > 1e-12 * scale {
                    return Err(CalfError::Solver(format!(
                        "H is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(h: &[f64], w: &[f64], out: &mut [f64]) {
    let n = w.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&h[i * n..(i + 1) * n], w);
    }
}

/// Largest eigenvalue of a PSD matrix by power iteration, inflated slightly so
/// it can serve as a Lipschitz bound.
fn spectral_bound(h: &[f64], n: usize) -> f64 {
    let frob = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut hv = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        mat_vec(h, &v, &mut hv);
        let next = dot(&v, &hv);
        std::mem::swap(&mut v, &mut hv);
        if (next - lambda).abs() <= 1e-9 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // power iteration approaches from below; never exceed the Frobenius bound
    (1.05 * lambda + 1e-12 * frob).min(frob)
}

struct Row {
    a: Vec<f64>,
    b: f64,
    norm: f64,
}

const MAX_OUTER: usize = 80;
const MAX_INNER: usize = 4000;

/// Solves the QP from `start` (projected into the box). Returns `Ok(None)`
/// when no point within `tol` of the affine rows was found.
pub fn qp_solve(p: &QpProblem, start: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
    p.validate()?;
    let n = p.dim();
    if start.len() != n || start.iter().any(|v| !v.is_finite()) {
        return Err(CalfError::Solver("invalid QP start point".into()));
    }
    if !(tol > 0.0) {
        return Err(CalfError::Solver(format!(
            "QP tolerance must be positive, got {tol}"
        )));
    }
    let bw = p.box_half_width;

    // rows with a zero normal are pure feasibility statements
    let mut rows = Vec::with_capacity(p.inequalities.len());
    for (a, b) in &p.inequalities {
        let norm = dot(a, a).sqrt();
        if norm == 0.0 {
            if *b < -tol {
                return Ok(None);
            }
            continue;
        }
        rows.push(Row {
            a: a.iter().map(|v| v / norm).collect(),
            b: b / norm,
            norm,
        });
    }

    let l_h = spectral_bound(&p.h, n);
    let g_scale = p.g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rho0 = l_h.max(1e-3 * g_scale).max(1e-6);
    let rho_max = rho0 * 1e10;
    let mut rho = rho0;
    let mut lambda = vec![0.0; rows.len()];

    let mut w: Vec<f64> = start.iter().map(|v| v.clamp(-bw, bw)).collect();
    let mut prev_viol = f64::INFINITY;

    let mut scratch = Scratch::new(n);
    for _ in 0..MAX_OUTER {
        let inner_tol =
            1e-10 * (1.0 + g_scale + l_h * w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        minimize_penalized(p, &rows, &lambda, rho, l_h, inner_tol, &mut w, &mut scratch);

        let mut viol: f64 = 0.0;
        for (lam, r) in lambda.iter_mut().zip(&rows) {
            let s = dot(&r.a, &w) - r.b;
            viol = viol.max(s.max(0.0) * r.norm);
            *lam = (*lam + rho * s).max(0.0);
        }

        if !rows.is_empty() && farkas_certificate(&rows, &lambda, bw, tol) {
            return Ok(None);
        }
        if viol <= 1e-3 * tol && multipliers_settled(&rows, &w, &lambda, tol) {
            break;
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 10.0).min(rho_max);
        }
        prev_viol = viol;
    }

    if w.iter().any(|v| !v.is_finite()) {
        return Err(CalfError::Solver("QP iterate became non-finite".into()));
    }
    if p.in_box(&w) && p.max_violation(&w) <= tol {
        Ok(Some(w))
    } else {
        Ok(None)
    }
}

/// Complementary slackness: no active multiplier sits on a clearly slack row.
fn multipliers_settled(rows: &[Row], w: &[f64], lambda: &[f64], tol: f64) -> bool {
    rows.iter().zip(lambda).all(|(r, &lam)| {
        let slack = r.b - dot(&r.a, w);
        lam == 0.0 || slack * r.norm <= tol
    })
}

/// True when `min_{|w|≤B} Σ λᵢ(aᵢᵀw − bᵢ − tol/‖aᵢ‖) > 0`, i.e. no point in
/// the box satisfies the rows relaxed by `tol`.
fn farkas_certificate(rows: &[Row], lambda: &[f64], bw: f64, tol: f64) -> bool {
    let total: f64 = lambda.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return false;
    }
    let n = rows[0].a.len();
    let mut combo = vec![0.0; n];
    let mut rhs = 0.0;
    let mut mag = 0.0;
    for (r, &lam) in rows.iter().zip(lambda) {
        let y = lam / total;
        for (c, a) in combo.iter_mut().zip(&r.a) {
            *c += y * a;
        }
        rhs += y * (r.b + tol / r.norm);
        mag += y * (r.b.abs() + tol / r.norm + bw);
    }
    let min_over_box = -bw * combo.iter().map(|c| c.abs()).sum::<f64>() - rhs;
    min_over_box > 1e-12 * mag
}

struct Scratch {
    y: Vec<f64>,
    grad: Vec<f64>,
    next: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            y: vec![0.0; n],
            grad: vec![0.0; n],
            next: vec![0.0; n],
        }
    }
}

fn penalized_gradient(
    p: &QpProblem,
    rows: &[Row],
    lambda: &[f64],
    rho: f64,
    w: &[f64],
    grad: &mut [f64],
) {
    mat_vec(&p.h, w, grad);
    for (gi, g0) in grad.iter_mut().zip(&p.g) {
        *gi += g0;
    }
    for (r, &lam) in rows.iter().zip(lambda) {
        let m = (lam + rho * (dot(&r.a, w) - r.b)).max(0.0);
        if m > 0.0 {
            for (gi, a) in grad.iter_mut().zip(&r.a) {
                *gi += m * a;
            }
        }
    }
}

/// Accelerated projected gradient (FISTA with gradient restart) on the
/// penalized objective, warm-started at `w`.
#[allow(clippy::too_many_arguments)]
fn minimize_penalized(
    p: &QpProblem,
    rows: &[Row],
    lambda: &[f64],
    rho: f64,
    l_h: f64,
    inner_tol: f64,
    w: &mut [f64],
    s: &mut Scratch,
) {
    let bw = p.box_half_width;
    let lipschitz = (l_h + rho * rows.len() as f64).max(1e-12);
    let step = 1.0 / lipschitz;
    s.y.copy_from_slice(w);
    let mut t = 1.0f64;
    for _ in 0..MAX_INNER {
        penalized_gradient(p, rows, lambda, rho, &s.y, &mut s.grad);
        let mut gmap: f64 = 0.0;
        for i in 0..w.len() {
            s.next[i] = (s.y[i] - step * s.grad[i]).clamp(-bw, bw);
            gmap = gmap.max((s.next[i] - s.y[i]).abs() * lipschitz);
        }
        // restart momentum when it points uphill
        let uphill: f64 = (0..w.len())
            .map(|i| (s.y[i] - s.next[i]) * (s.next[i] - w[i]))
            .sum();
        let t_next = if uphill > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let beta = if uphill > 0.0 {
            0.0
        } else {
            (t - 1.0) / t_next
        };
        for i in 0..w.len() {
            let prev = w[i];
            w[i] = s.next[i];
            s.y[i] = w[i] + beta * (w[i] - prev);
        }
        t = t_next;
        if gmap <= inner_tol {
            break;
        }
    }
}
