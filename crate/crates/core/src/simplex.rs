//! Dense tableau simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`,
//! `b ≥ 0`.
//!
//! The slack basis is feasible at the start, so no phase one is needed.
//! Pivoting follows Dantzig's rule with a two-pass ratio test. Degenerate
//! problems are solved with slightly perturbed right-hand sides (or reduced
//! costs in the dual method); the perturbation is removed afterwards and
//! the basis cleaned up from the original data. Rows can be appended after a solve; the
//! tableau is then re-optimized with the dual simplex method, which keeps
//! the previous basis.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;

/// One constraint `Σ val[k] x[idx[k]] ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn new(idx: Vec<usize>, val: Vec<f64>, rhs: f64) -> Self {
        Self { idx, val, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, v)| v * x[i]).sum()
    }
}

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-10;
const STALL_LIMIT: usize = 50;
/// Relative size of the offsets that break degeneracy.
const PERTURB: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Tableau {
    n: usize,
    c: Vec<f64>,
    rows: Vec<SparseRow>,
    w: usize,
    t: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
    z: f64,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    pub fn new(c: Vec<f64>, rows: Vec<SparseRow>) -> Result<Self> {
        let n = c.len();
        for r in &rows {
            if r.rhs < 0.0 || !r.rhs.is_finite() {
                return Err(Error::Lp("right-hand sides must be non-negative".into()));
            }
            if r.idx.iter().any(|&i| i >= n) || r.idx.len() != r.val.len() {
                return Err(Error::Lp("row refers to a missing column".into()));
            }
        }
        let mut tab = Self {
            n,
            d: c.clone(),
            c,
            rows: Vec::new(),
            w: n,
            t: Vec::new(),
            b: Vec::new(),
            z: 0.0,
            basis: Vec::new(),
            is_basic: vec![false; n],
            pivots: 0,
        };
        tab.append_rows(rows);
        Ok(tab)
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    pub fn objective(&self) -> f64 {
        self.z
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn objective_coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Current basic solution over the structural columns.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.b[i].max(0.0);
            }
        }
        x
    }

    /// Row multipliers `y ≥ 0` read off the slack reduced costs.
    pub fn duals(&self) -> Vec<f64> {
        (0..self.num_rows()).map(|i| -self.d[self.n + i]).collect()
    }

    /// Slack of each row at the current basic solution.
    pub fn slacks(&self) -> Vec<f64> {
        let x = self.primal();
        self.rows.iter().map(|r| r.rhs - r.dot(&x)).collect()
    }

    /// Appends rows, expressing each in terms of the current basis. The new
    /// slacks enter the basis, possibly at negative values.
    pub fn add_rows(&mut self, rows: Vec<SparseRow>) -> Result<()> {
        for r in &rows {
            if r.idx.iter().any(|&i| i >= self.n) || r.idx.len() != r.val.len() {
                return Err(Error::Lp("row refers to a missing column".into()));
            }
        }
        self.append_rows(rows);
        Ok(())
    }

    fn append_rows(&mut self, rows: Vec<SparseRow>) {
        let k = rows.len();
        if k == 0 {
            return;
        }
        let r0 = self.num_rows();
        let (w0, w1) = (self.w, self.w + k);
        let mut t = vec![0.0; (r0 + k) * w1];
        for i in 0..r0 {
            t[i * w1..i * w1 + w0].copy_from_slice(&self.t[i * w0..(i + 1) * w0]);
        }
        self.d.resize(w1, 0.0);
        self.is_basic.resize(w1, false);
        for (q, row) in rows.iter().enumerate() {
            let i = r0 + q;
            let mut rhs = row.rhs;
            {
                let dst = &mut t[i * w1..(i + 1) * w1];
                for (&j, &v) in row.idx.iter().zip(&row.val) {
                    dst[j] += v;
                }
                dst[w0 + q] = 1.0;
            }
            for p in 0..r0 {
                let bc = self.basis[p];
                let coef = t[i * w1 + bc];
                if coef != 0.0 {
                    let (head, tail) = t.split_at_mut(i * w1);
                    let src = &head[p * w1..(p + 1) * w1];
                    let dst = &mut tail[..w1];
                    for (x, s) in dst.iter_mut().zip(src) {
                        *x -= coef * s;
                    }
                    dst[bc] = 0.0;
                    rhs -= coef * self.b[p];
                }
            }
            self.b.push(rhs);
            self.basis.push(w0 + q);
            self.is_basic[w0 + q] = true;
        }
        self.t = t;
        self.w = w1;
        self.rows.extend(rows);
    }

    /// Removes rows whose own slack is basic and for which `drop` holds.
    /// Returns the indices (before removal) of the rows removed.
    pub fn remove_rows(&mut self, mut drop: impl FnMut(usize, f64) -> bool) -> Vec<usize> {
        let r = self.num_rows();
        let removed: Vec<usize> = (0..r)
            .filter(|&i| self.basis[i] == self.n + i && drop(i, self.b[i]))
            .collect();
        if removed.is_empty() {
            return removed;
        }
        let mut keep_row = vec![true; r];
        for &i in &removed {
            keep_row[i] = false;
        }
        let mut col_map = vec![usize::MAX; self.w];
        let mut nc = 0;
        for (j, slot) in col_map.iter_mut().enumerate() {
            if j < self.n || keep_row[j - self.n] {
                *slot = nc;
                nc += 1;
            }
        }
        let nr = r - removed.len();
        let mut t = vec![0.0; nr * nc];
        let (mut b, mut basis, mut rows) = (Vec::with_capacity(nr), Vec::with_capacity(nr), Vec::with_capacity(nr));
        let mut ri = 0;
        for i in 0..r {
            if !keep_row[i] {
                continue;
            }
            let src = &self.t[i * self.w..(i + 1) * self.w];
            let dst = &mut t[ri * nc..(ri + 1) * nc];
            for (j, &v) in src.iter().enumerate() {
                if col_map[j] != usize::MAX {
                    dst[col_map[j]] = v;
                }
            }
            b.push(self.b[i]);
            basis.push(col_map[self.basis[i]]);
            rows.push(self.rows[i].clone());
            ri += 1;
        }
        let mut d = vec![0.0; nc];
        let mut is_basic = vec![false; nc];
        for j in 0..self.w {
            if col_map[j] != usize::MAX {
                d[col_map[j]] = self.d[j];
                is_basic[col_map[j]] = self.is_basic[j];
            }
        }
        self.t = t;
        self.w = nc;
        self.b = b;
        self.basis = basis;
        self.rows = rows;
        self.d = d;
        self.is_basic = is_basic;
        removed
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.w;
        let p = self.t[r * w + c];
        let inv = 1.0 / p;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for (j, x) in row.iter_mut().enumerate() {
                if *x != 0.0 {
                    *x *= inv;
                    nz.push((j, *x));
                }
            }
            row[c] = 1.0;
        }
        self.b[r] *= inv;
        let br = self.b[r];
        let rows = self.num_rows();
        let dense = nz.len() * 3 > w;
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            if dense {
                let (lo, hi) = if i < r {
                    let (a, bb) = self.t.split_at_mut(r * w);
                    (&mut a[i * w..(i + 1) * w], &bb[..w])
                } else {
                    let (a, bb) = self.t.split_at_mut(i * w);
                    (&mut bb[..w], &a[r * w..(r + 1) * w])
                };
                for (x, s) in lo.iter_mut().zip(hi) {
                    *x -= f * s;
                }
            } else {
                let row = &mut self.t[i * w..(i + 1) * w];
                for &(j, v) in &nz {
                    row[j] -= f * v;
                }
            }
            self.t[i * w + c] = 0.0;
            self.b[i] -= f * br;
        }
        let dc = self.d[c];
        if dc != 0.0 {
            for &(j, v) in &nz {
                self.d[j] -= dc * v;
            }
            self.d[c] = 0.0;
            self.z += dc * br;
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[c] = true;
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn iteration_limit(&self) -> usize {
        100_000 + 50 * (self.w + self.num_rows())
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.c[j]
        } else {
            0.0
        }
    }

    fn rhs_scale(&self) -> f64 {
        1.0f64.max(self.rows.iter().fold(0.0, |m: f64, r| m.max(abs(r.rhs))))
    }

    fn cost_scale(&self) -> f64 {
        1.0f64.max(self.c.iter().fold(0.0, |m: f64, v| m.max(abs(*v))))
    }

    /// Recomputes basic values, reduced costs and the objective from the
    /// original data. The slack columns of the tableau hold `B⁻¹`.
    fn refresh(&mut self) {
        let (n, w, r) = (self.n, self.w, self.num_rows());
        let mut y = vec![0.0; r];
        for i in 0..r {
            let inv = &self.t[i * w + n..i * w + n + r];
            self.b[i] = inv.iter().zip(&self.rows).map(|(v, row)| v * row.rhs).sum();
            let cb = self.cost(self.basis[i]);
            if cb != 0.0 {
                for (yk, v) in y.iter_mut().zip(inv) {
                    *yk += cb * v;
                }
            }
        }
        let mut d = vec![0.0; w];
        d[..n].copy_from_slice(&self.c);
        for (k, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row.idx.iter().zip(&row.val) {
                d[j] -= y[k] * v;
            }
            d[n + k] = -y[k];
        }
        for &j in &self.basis {
            d[j] = 0.0;
        }
        self.d = d;
        self.z = (0..r).map(|i| self.cost(self.basis[i]) * self.b[i]).sum();
    }

    fn is_optimal(&self) -> bool {
        let ft = FEAS_TOL * self.rhs_scale();
        let ot = OPT_TOL * self.cost_scale();
        self.b.iter().all(|&v| v >= -ft) && (0..self.w).all(|j| self.is_basic[j] || self.d[j] <= ot)
    }

    /// Distinct small offsets used to break degeneracy.
    fn offsets(len: usize, eps: f64) -> impl Iterator<Item = f64> {
        (0..len).map(move |i| {
            let f = (i as f64 + 1.0) * 0.618_033_988_749_894_9;
            eps * (1.0 + (f - crate::math::floor(f)))
        })
    }

    /// Primal simplex from a primal feasible basis.
    pub fn solve_primal(&mut self) -> Result<()> {
        let eps = PERTURB * self.rhs_scale();
        let r = self.num_rows();
        for (bi, e) in self.b.iter_mut().zip(Self::offsets(r, eps)) {
            *bi = bi.max(0.0) + e;
        }
        self.primal_loop()?;
        self.refresh();
        self.polish()
    }

    /// Dual simplex from a dual feasible basis; restores primal feasibility.
    pub fn solve_dual(&mut self) -> Result<()> {
        let eps = PERTURB * self.cost_scale();
        let w = self.w;
        for (j, e) in (0..w).zip(Self::offsets(w, eps)) {
            if !self.is_basic[j] {
                self.d[j] = self.d[j].min(0.0) - e;
            }
        }
        self.dual_loop()?;
        self.refresh();
        Ok(())
    }

    /// Dual simplex followed by a primal clean-up pass.
    pub fn reoptimize(&mut self) -> Result<()> {
        self.solve_dual()?;
        self.solve_primal()
    }

    /// Removes the small infeasibilities left after the perturbation is
    /// dropped.
    fn polish(&mut self) -> Result<()> {
        for _ in 0..4 {
            if self.is_optimal() {
                return Ok(());
            }
            self.dual_loop()?;
            self.primal_loop()?;
            self.refresh();
        }
        if self.is_optimal() {
            Ok(())
        } else {
            Err(Error::Lp("could not restore an optimal basis".to_string()))
        }
    }

    fn primal_loop(&mut self) -> Result<()> {
        let w = self.w;
        let tol = OPT_TOL * self.cost_scale();
        let harris = FEAS_TOL * self.rhs_scale();
        let mut bland = false;
        let mut stall = 0;
        let mut last = self.z;
        for _ in 0..self.iteration_limit() {
            let entering = if bland {
                (0..w).find(|&j| !self.is_basic[j] && self.d[j] > tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..w {
                    if !self.is_basic[j] && self.d[j] > tol && best.is_none_or(|(_, v)| self.d[j] > v) {
                        best = Some((j, self.d[j]));
                    }
                }
                best.map(|b| b.0)
            };
            let Some(c) = entering else { return Ok(()) };
            // two-pass ratio test: widest step within the tolerance, then the
            // largest pivot among rows that block it
            let mut bound = f64::INFINITY;
            for i in 0..self.num_rows() {
                let a = self.t[i * w + c];
                if a > PIVOT_TOL {
                    bound = bound.min((self.b[i].max(0.0) + harris) / a);
                }
            }
            if bound == f64::INFINITY {
                return Err(Error::Lp("objective is unbounded".into()));
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.num_rows() {
                let a = self.t[i * w + c];
                if a > PIVOT_TOL
                    && self.b[i].max(0.0) / a <= bound
                    && leave.is_none_or(|(li, la)| a > la || (a == la && self.basis[i] < self.basis[li]))
                {
                    leave = Some((i, a));
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            self.pivot(r, c);
            if self.z > last + 1e-12 * 1.0f64.max(abs(last)) {
                last = self.z;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Err(Error::Lp("primal simplex iteration limit".to_string()))
    }

    fn dual_loop(&mut self) -> Result<()> {
        let w = self.w;
        let tol = FEAS_TOL * self.rhs_scale();
        let harris = OPT_TOL * self.cost_scale();
        for _ in 0..self.iteration_limit() {
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.num_rows() {
                if self.b[i] < -tol && leaving.is_none_or(|(_, v)| self.b[i] < v) {
                    leaving = Some((i, self.b[i]));
                }
            }
            let Some((r, _)) = leaving else { return Ok(()) };
            let row = &self.t[r * w..(r + 1) * w];
            let mut bound = f64::INFINITY;
            for (j, &a) in row.iter().enumerate() {
                if !self.is_basic[j] && a < -PIVOT_TOL {
                    bound = bound.min((self.d[j].min(0.0) - harris) / a);
                }
            }
            let mut enter: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate() {
                if !self.is_basic[j]
                    && a < -PIVOT_TOL
                    && self.d[j].min(0.0) / a <= bound
                    && enter.is_none_or(|(_, ea)| a < ea)
                {
                    enter = Some((j, a));
                }
            }
            let Some((c, _)) = enter else {
                return Err(Error::Lp("constraints are infeasible".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::Lp("dual simplex iteration limit".to_string()))
    }
}

/// Optimal value and solution of `max cᵀx, Ax ≤ b, x ≥ 0`.
pub fn solve(c: Vec<f64>, rows: Vec<SparseRow>) -> Result<(f64, Vec<f64>)> {
    let mut t = Tableau::new(c, rows)?;
    t.solve_primal()?;
    Ok((t.objective(), t.primal()))
}
