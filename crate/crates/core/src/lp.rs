//! Elfving linear program solved with a small two-phase revised simplex.
//!
//! `min Σ (u_i + v_i)  s.t.  Σ (u_i − v_i) f_i = c,  u, v ≥ 0`. The optimum is `1/λ_c` where
//! `λ_c c` is the boundary point of the Elfving set on the ray through `c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct ElfvingLp {
    /// `1 / λ_c`.
    pub value: f64,
    /// Signed coefficients `u_i − v_i` per candidate.
    pub coef: Vec<f64>,
    /// Dual vector `y` with `|f_iᵀ y| ≤ 1` and `cᵀ y = value`.
    pub dual: DVector<f64>,
}

struct Problem<'a> {
    f: &'a [DVector<f64>],
    /// Row signs making the right-hand side non-negative.
    sign: DVector<f64>,
    b: DVector<f64>,
    n: usize,
    p: usize,
}

impl Problem<'_> {
    fn n_vars(&self) -> usize {
        2 * self.n + self.p
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= 2 * self.n
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.f[j].component_mul(&self.sign)
        } else if j < 2 * self.n {
            -self.f[j - self.n].component_mul(&self.sign)
        } else {
            let mut e = DVector::zeros(self.p);
            e[j - 2 * self.n] = 1.0;
            e
        }
    }
}

pub(crate) fn elfving_lp(f: &[DVector<f64>], c: &DVector<f64>) -> Result<ElfvingLp> {
    let p = c.len();
    if f.is_empty() {
        return Err(Error::InvalidInput("no candidate points".into()));
    }
    if f.iter().any(|v| v.len() != p) {
        return Err(Error::InvalidInput("candidate vectors and c differ in length".into()));
    }
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("c must be nonzero".into()));
    }
    let sign = c.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
    let prob = Problem {
        f,
        b: c.component_mul(&sign),
        sign,
        n: f.len(),
        p,
    };
    let mut basis: Vec<usize> = (0..p).map(|r| 2 * prob.n + r).collect();

    // phase 1: minimize the artificial mass
    let cost1 = |j: usize| if prob.is_artificial(j) { 1.0 } else { 0.0 };
    let phase1 = simplex(&prob, &mut basis, &cost1, true)?;
    let scale = c.amax().max(1.0);
    if phase1 > FEAS_TOL * scale {
        return Err(Error::Infeasible(format!(
            "c is outside the span of the candidate regression vectors (residual {phase1:.3e})"
        )));
    }
    drive_out_artificials(&prob, &mut basis)?;

    let cost2 = |j: usize| if prob.is_artificial(j) { 0.0 } else { 1.0 };
    let value = simplex(&prob, &mut basis, &cost2, false)?;

    let (binv, xb) = factor(&prob, &basis)?;
    let mut coef = vec![0.0; prob.n];
    for (r, &j) in basis.iter().enumerate() {
        let x = xb[r].max(0.0);
        if j < prob.n {
            coef[j] += x;
        } else if j < 2 * prob.n {
            coef[j - prob.n] -= x;
        }
    }
    let cb = DVector::from_iterator(p, basis.iter().map(|&j| cost2(j)));
    // y for the sign-flipped rows; undo the flip for the caller
    let y = binv.transpose() * cb;
    Ok(ElfvingLp {
        value,
        coef,
        dual: y.component_mul(&prob.sign),
    })
}

fn factor(prob: &Problem, basis: &[usize]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = prob.p;
    let mut bm = DMatrix::zeros(p, p);
    for (r, &j) in basis.iter().enumerate() {
        bm.set_column(r, &prob.column(j));
    }
    let binv = bm
        .try_inverse()
        .ok_or_else(|| Error::Consistency("simplex basis became singular".into()))?;
    let xb = &binv * &prob.b;
    Ok((binv, xb))
}

/// Runs simplex iterations from a feasible basis; returns the objective value.
fn simplex(prob: &Problem, basis: &mut [usize], cost: &dyn Fn(usize) -> f64, allow_artificial: bool) -> Result<f64> {
    let p = prob.p;
    let max_iter = 50 * (prob.n_vars() + p) + 1000;
    let mut degenerate = 0usize;
    for _ in 0..max_iter {
        let (binv, xb) = factor(prob, basis)?;
        let cb = DVector::from_iterator(p, basis.iter().map(|&j| cost(j)));
        let y = binv.transpose() * &cb;
        let bland = degenerate >= DEGENERATE_STREAK;

        let mut enter: Option<(usize, f64)> = None;
        let mut consider = |j: usize, d: f64| {
            if d < -FEAS_TOL && !basis.contains(&j) {
                let better = match enter {
                    None => true,
                    Some((_, best)) => !bland && d < best - PIVOT_TOL,
                };
                if better {
                    enter = Some((j, d));
                }
            }
        };
        let ys = y.component_mul(&prob.sign);
        for i in 0..prob.n {
            let g = ys.dot(&prob.f[i]);
            consider(i, cost(i) - g);
            consider(prob.n + i, cost(prob.n + i) + g);
        }
        if allow_artificial {
            for r in 0..p {
                let j = 2 * prob.n + r;
                consider(j, cost(j) - y[r]);
            }
        }
        let Some((q, _)) = enter else {
            return Ok(cb.dot(&xb));
        };

        let dir = &binv * prob.column(q);
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..p {
            if dir[r] > PIVOT_TOL {
                let ratio = xb[r].max(0.0) / dir[r];
                let take = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && basis[r] < basis[lr])
                    }
                };
                if take {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, step)) = leave else {
            return Err(Error::Consistency("Elfving LP reported unbounded".into()));
        };
        degenerate = if step <= PIVOT_TOL { degenerate + 1 } else { 0 };
        basis[r] = q;
    }
    Err(Error::Consistency("simplex iteration limit reached".into()))
}

/// Replaces artificial basics at level zero by real columns where possible.
fn drive_out_artificials(prob: &Problem, basis: &mut [usize]) -> Result<()> {
    for r in 0..prob.p {
        if !prob.is_artificial(basis[r]) {
            continue;
        }
        let (binv, _) = factor(prob, basis)?;
        let row = binv.row(r).transpose().component_mul(&prob.sign);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..prob.n {
            let v = row.dot(&prob.f[i]).abs();
            if v > 1e-9 && best.is_none_or(|(_, b)| v > b + PIVOT_TOL) && !basis.contains(&i) {
                best = Some((i, v));
            }
        }
        if let Some((i, _)) = best {
            basis[r] = i;
        }
    }
    Ok(())
}
