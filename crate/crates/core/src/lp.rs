//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are small (at most a few hundred rows), so the full tableau is
//! kept in memory. All variables are nonnegative.

use crate::error::{Error, Result};

/// Pivot tolerance: tableau entries below this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    cost: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers with `objective = sum_r duals[r] * b[r]`.
    pub duals: Vec<f64>,
    /// Another optimal vertex is reachable by a nondegenerate pivot.
    pub alternative_optima: bool,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn minimize(cost: Vec<f64>) -> Self {
        Self {
            sense: Sense::Min,
            cost,
            rows: Vec::new(),
        }
    }

    pub fn maximize(cost: Vec<f64>) -> Self {
        Self {
            sense: Sense::Max,
            cost,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, a: Vec<f64>, rel: Relation, b: f64) -> &mut Self {
        assert_eq!(a.len(), self.cost.len(), "row width must match variable count");
        self.rows.push((a, rel, b));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    width: usize, // columns excluding rhs
    n: usize,     // structural columns
    data: Vec<f64>,
    basis: Vec<usize>,
    artificial_from: usize,
    row_column: Vec<usize>, // identity column introduced for each row
    row_sign: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.cost.len();
        let mut rels = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (_, rel, b) in &lp.rows {
            let flip = *b < 0.0;
            row_sign.push(if flip { -1.0 } else { 1.0 });
            rels.push(match (rel, flip) {
                (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
                (Relation::Ge, false) | (Relation::Le, true) => Relation::Ge,
                (Relation::Eq, _) => Relation::Eq,
            });
        }
        let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
        let artificial_from = n + n_slack;
        let width = artificial_from + n_art;
        let stride = width + 1;
        let mut data = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut row_column = vec![0; m];
        let (mut next_slack, mut next_art) = (n, artificial_from);
        for (r, ((a, _, b), rel)) in lp.rows.iter().zip(&rels).enumerate() {
            let s = row_sign[r];
            let row = &mut data[r * stride..(r + 1) * stride];
            for (dst, v) in row.iter_mut().zip(a) {
                *dst = s * v;
            }
            row[width] = s * b;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[r] = next_slack;
                    row_column[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    row_column[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    row_column[r] = next_art;
                    next_art += 1;
                }
            }
        }
        Self {
            m,
            width,
            n,
            data,
            basis,
            artificial_from,
            row_column,
            row_sign,
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.width + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    /// Reduced costs `c_B B^-1 A_j - c_j` and objective for a max problem.
    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut red: Vec<f64> = cost.iter().map(|c| -c).collect();
        let mut obj = 0.0;
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (c, red_c) in red.iter_mut().enumerate() {
                *red_c += cb * self.at(r, c);
            }
            obj += cb * self.rhs(r);
        }
        (red, obj)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let stride = self.width + 1;
        let p = self.at(pr, pc);
        for c in 0..stride {
            self.data[pr * stride + c] /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * stride..(pr + 1) * stride].to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * stride..(r + 1) * stride];
            for (dst, src) in row.iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Bland ratio test: minimum ratio, ties to the lowest basic index.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, col);
            if a > PIVOT_TOL {
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - PIVOT_TOL
                            || (ratio <= bratio + PIVOT_TOL && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
        }
        best.map(|(r, _)| r)
    }

    /// Maximizes `cost . x` over columns `< allowed` entering.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::PivotBreakdown(format!(
                    "no convergence within {MAX_PIVOTS} pivots"
                )));
            }
            let (red, _) = self.reduced_costs(cost);
            let entering = (0..allowed).find(|&c| red[c] < -PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(());
            };
            match self.leaving_row(col) {
                Some(row) => self.pivot(row, col),
                None => return Err(Error::Unbounded),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let width = self.width;
        if self.artificial_from < width {
            let mut phase1 = vec![0.0; width];
            phase1[self.artificial_from..].iter_mut().for_each(|c| *c = -1.0);
            self.optimize(&phase1, width)?;
            let (_, obj) = self.reduced_costs(&phase1);
            if obj < -1e-7 {
                return Err(Error::Infeasible);
            }
            // Drive zero-valued artificials out of the basis where possible.
            for r in 0..self.m {
                if self.basis[r] >= self.artificial_from {
                    if let Some(c) =
                        (0..self.artificial_from).find(|&c| self.at(r, c).abs() > PIVOT_TOL)
                    {
                        self.pivot(r, c);
                    }
                }
            }
        }

        let sign = match lp.sense {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        };
        let mut cost = vec![0.0; width];
        for (dst, c) in cost.iter_mut().zip(&lp.cost) {
            *dst = sign * c;
        }
        self.optimize(&cost, self.artificial_from)?;

        let (red, obj) = self.reduced_costs(&cost);
        let mut x = vec![0.0; self.n];
        for r in 0..self.m {
            if self.basis[r] < self.n {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let duals = (0..self.m)
            .map(|r| sign * self.row_sign[r] * red[self.row_column[r]])
            .collect();
        let alternative_optima = (0..self.artificial_from).any(|c| {
            !self.basis.contains(&c)
                && red[c].abs() <= PIVOT_TOL
                && self
                    .leaving_row(c)
                    .is_none_or(|r| self.rhs(r) / self.at(r, c) > PIVOT_TOL)
        });
        Ok(LpSolution {
            x,
            objective: sign * obj,
            duals,
            alternative_optima,
            pivots: self.pivots,
        })
    }
}
