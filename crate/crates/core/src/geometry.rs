//! Monotone polyhedral target sets in score space.
//!
//! A [`TargetSet`] is the intersection of a lower box `z >= lower` with
//! half-spaces `a . z >= b` whose normals are nonnegative. Such sets are
//! closed upward, which gives a closed form for the `l_inf` distance: the
//! smallest `zeta >= 0` with `z + zeta * 1` inside the set.
//!
//! The implicit ambient upper bound `z <= 1` is not enforced by
//! [`TargetSet::distance`] or [`TargetSet::project`]; both work with the
//! upward closure of the polyhedron.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::tensor::ScoreVector;

/// Membership tolerance.
pub const CONTAINS_TOL: f64 = 1e-12;
/// Convergence tolerance of the iterative projections.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Sweep budget of the iterative projections.
pub const PROJECTION_MAX_SWEEPS: usize = 10_000;

/// Selects the `l_q` norm, `q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    q: f64,
}

impl NormSpec {
    pub const L1: Self = Self { q: 1.0 };
    pub const L2: Self = Self { q: 2.0 };
    pub const INF: Self = Self { q: f64::INFINITY };

    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidParameter(format!("norm exponent q={q} < 1")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_inf(&self) -> bool {
        self.q.is_infinite()
    }

    /// Smooth norms (`1 < q < inf`) have a unique projection and gradient.
    pub fn is_smooth(&self) -> bool {
        self.q > 1.0 && self.q.is_finite()
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        if self.is_inf() {
            v.iter().fold(0.0, |m, x| m.max(x.abs()))
        } else if self.q == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if self.q == 2.0 {
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        } else {
            let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale
                * v.iter()
                    .map(|x| (x.abs() / scale).powf(self.q))
                    .sum::<f64>()
                    .powf(1.0 / self.q)
        }
    }

    /// `k^(1/q)`, the `l_1`-Lipschitz constant of the value function.
    pub fn lipschitz(&self, k: usize) -> f64 {
        if self.is_inf() {
            1.0
        } else {
            (k as f64).powf(1.0 / self.q)
        }
    }

    /// Gradient of `||r||_q` at `r != 0` for a smooth norm.
    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let n = self.norm(r);
        if n == 0.0 {
            return vec![0.0; r.len()];
        }
        if self.q == 2.0 {
            return r.iter().map(|x| x / n).collect();
        }
        r.iter()
            .map(|x| x.signum() * (x.abs() / n).powf(self.q - 1.0))
            .collect()
    }
}

impl Serialize for NormSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.q)
        }
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(q) => Self::new(q),
            Repr::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" => Ok(Self::INF),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad norm '{s}'")))
                .and_then(Self::new),
        }
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.q)
        }
    }
}

/// `a . z >= b` with `a >= 0`, `a != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self> {
        if a.iter().any(|x| !x.is_finite() || *x < 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(
                "half-space normal must be finite and nonnegative".into(),
            ));
        }
        if a.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidParameter("half-space normal is zero".into()));
        }
        Ok(Self { a, b })
    }

    fn dot(&self, z: &[f64]) -> f64 {
        self.a.iter().zip(z).map(|(a, z)| a * z).sum()
    }

    fn mass(&self) -> f64 {
        self.a.iter().sum()
    }
}

/// One row of the polyhedron, with box bounds expressed as unit normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Lower(usize),
    Half(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetSetFile", into = "TargetSetFile")]
pub struct TargetSet {
    lower: Vec<f64>,
    halfspaces: Vec<HalfSpace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSetFile {
    pub lower: Vec<f64>,
    #[serde(default)]
    pub halfspaces: Vec<HalfSpace>,
}

impl TryFrom<TargetSetFile> for TargetSet {
    type Error = Error;

    fn try_from(f: TargetSetFile) -> Result<Self> {
        let halfspaces = f
            .halfspaces
            .into_iter()
            .map(|h| HalfSpace::new(h.a, h.b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.lower, halfspaces)
    }
}

impl From<TargetSet> for TargetSetFile {
    fn from(s: TargetSet) -> Self {
        Self {
            lower: s.lower,
            halfspaces: s.halfspaces,
        }
    }
}

impl TargetSet {
    pub fn new(lower: Vec<f64>, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let k = lower.len();
        if k == 0 {
            return Err(Error::InvalidParameter("target set needs k >= 1".into()));
        }
        if lower.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidParameter(
                "box lower bounds must lie in [0, 1]".into(),
            ));
        }
        for h in &halfspaces {
            if h.a.len() != k {
                return Err(Error::DimensionMismatch {
                    what: "half-space normal",
                    expected: k,
                    found: h.a.len(),
                });
            }
            if h.b > h.mass() + CONTAINS_TOL {
                return Err(Error::InvalidParameter(format!(
                    "half-space excludes the all-ones vector (b={} > {})",
                    h.b,
                    h.mass()
                )));
            }
        }
        Ok(Self { lower, halfspaces })
    }

    /// `{z : z >= lower}`.
    pub fn boxed(lower: Vec<f64>) -> Result<Self> {
        Self::new(lower, Vec::new())
    }

    /// `[1/2, 1]^k`.
    pub fn orthant_half(k: usize) -> Self {
        Self {
            lower: vec![0.5; k],
            halfspaces: Vec::new(),
        }
    }

    /// `{r in [0,1]^k : <w, r> >= 1/2}` for `w` on the simplex.
    pub fn weighted(w: &[f64]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        if w.is_empty() || min < 0.0 || (sum - 1.0).abs() > crate::tensor::SIMPLEX_TOL {
            return Err(Error::NotOnSimplex { sum, min });
        }
        Self::new(vec![0.0; w.len()], vec![HalfSpace::new(w.to_vec(), 0.5)?])
    }

    pub fn k(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    /// All rows, box bounds first.
    pub fn constraints(&self) -> impl Iterator<Item = ConstraintRef> + '_ {
        (0..self.k())
            .map(ConstraintRef::Lower)
            .chain((0..self.halfspaces.len()).map(ConstraintRef::Half))
    }

    /// Normal and offset of a row; box rows use the unit normal `e_j`.
    pub fn row(&self, c: ConstraintRef) -> (Vec<f64>, f64) {
        match c {
            ConstraintRef::Lower(j) => {
                let mut a = vec![0.0; self.k()];
                a[j] = 1.0;
                (a, self.lower[j])
            }
            ConstraintRef::Half(h) => (self.halfspaces[h].a.clone(), self.halfspaces[h].b),
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.k() {
            return Err(Error::DimensionMismatch {
                what: "score vector",
                expected: self.k(),
                found: z.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, z: &ScoreVector) -> Result<bool> {
        self.check_dim(z.as_slice())?;
        Ok(self.contains_slice(z.as_slice()))
    }

    fn contains_slice(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(&self.lower)
            .all(|(z, l)| *z >= l - CONTAINS_TOL)
            && self
                .halfspaces
                .iter()
                .all(|h| h.dot(z) >= h.b - CONTAINS_TOL)
    }

    /// Smallest `zeta >= 0` with `z + zeta * 1` in the set; this is the
    /// `l_inf` distance for a monotone polyhedron.
    pub fn shift_to_set(&self, z: &[f64]) -> f64 {
        let mut zeta: f64 = 0.0;
        for (z, l) in z.iter().zip(&self.lower) {
            zeta = zeta.max(l - z);
        }
        for h in &self.halfspaces {
            zeta = zeta.max((h.b - h.dot(z)) / h.mass());
        }
        zeta
    }

    /// The row attaining [`TargetSet::shift_to_set`], lowest index on ties,
    /// together with the attained shift.
    pub fn active_row(&self, z: &[f64]) -> (ConstraintRef, f64) {
        let mut best = (ConstraintRef::Lower(0), self.lower[0] - z[0]);
        for c in self.constraints() {
            let shift = match c {
                ConstraintRef::Lower(j) => self.lower[j] - z[j],
                ConstraintRef::Half(h) => {
                    let h = &self.halfspaces[h];
                    (h.b - h.dot(z)) / h.mass()
                }
            };
            if shift > best.1 {
                best = (c, shift);
            }
        }
        best
    }

    /// Distance `inf_{v in S} ||z - v||_q`.
    pub fn distance(&self, z: &ScoreVector, norm: NormSpec) -> Result<f64> {
        self.check_dim(z.as_slice())?;
        self.distance_slice(z.as_slice(), norm)
    }

    /// As [`TargetSet::distance`] for a raw slice of length `k`.
    pub fn distance_slice(&self, z: &[f64], norm: NormSpec) -> Result<f64> {
        debug_assert_eq!(z.len(), self.k());
        if norm.is_inf() {
            return Ok(self.shift_to_set(z).max(0.0));
        }
        if self.contains_slice(z) {
            return Ok(0.0);
        }
        if self.halfspaces.is_empty() {
            let deficit: Vec<f64> = z
                .iter()
                .zip(&self.lower)
                .map(|(z, l)| (l - z).max(0.0))
                .collect();
            return Ok(norm.norm(&deficit));
        }
        if norm.q() == 1.0 {
            return self.l1_distance(z);
        }
        let x = self.project_slice(z, norm)?;
        let r: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        Ok(norm.norm(&r))
    }

    /// `l_1` distance as the LP `min sum u  s.t.  z + u in S, u >= 0`.
    /// Moving down never helps for an upward-closed set.
    fn l1_distance(&self, z: &[f64]) -> Result<f64> {
        let k = self.k();
        let mut lp = LinearProgram::minimize(vec![1.0; k]);
        for c in self.constraints() {
            let (a, b) = self.row(c);
            let rhs = b - a.iter().zip(z).map(|(a, z)| a * z).sum::<f64>();
            lp.add_row(a, Relation::Ge, rhs);
        }
        Ok(lp.solve()?.objective.max(0.0))
    }

    /// `l_1` distance and one of its subgradients with respect to `z`,
    /// read off the optimal row multipliers `y`: `-sum_c y_c a_c`.
    pub fn l1_distance_subgradient(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(z)?;
        let k = self.k();
        let mut lp = LinearProgram::minimize(vec![1.0; k]);
        let rows: Vec<(Vec<f64>, f64)> = self.constraints().map(|c| self.row(c)).collect();
        for (a, b) in &rows {
            let rhs = b - a.iter().zip(z).map(|(a, z)| a * z).sum::<f64>();
            lp.add_row(a.clone(), Relation::Ge, rhs);
        }
        let sol = lp.solve()?;
        let mut g = vec![0.0; k];
        for ((a, _), y) in rows.iter().zip(&sol.duals) {
            for (g, a) in g.iter_mut().zip(a) {
                *g -= y * a;
            }
        }
        Ok((sol.objective.max(0.0), g))
    }

    /// A point of the set nearest to `z` in `l_q`. Only smooth
    /// norms are supported; `l_1` and `l_inf` projections are not unique.
    pub fn project(&self, z: &ScoreVector, norm: NormSpec) -> Result<ScoreVector> {
        self.check_dim(z.as_slice())?;
        self.project_slice(z.as_slice(), norm).map(ScoreVector)
    }

    pub fn project_slice(&self, z: &[f64], norm: NormSpec) -> Result<Vec<f64>> {
        if !norm.is_smooth() {
            return Err(Error::Unsupported(format!(
                "projection in l_{norm} is not unique; use the distance oracle"
            )));
        }
        if self.contains_slice(z) {
            return Ok(z.to_vec());
        }
        let clipped: Vec<f64> = z.iter().zip(&self.lower).map(|(z, l)| z.max(*l)).collect();
        if self.halfspaces.is_empty() {
            return Ok(clipped);
        }
        let mut x = if norm.q() == 2.0 && self.halfspaces.len() == 1 {
            self.project_single_halfspace(z)
        } else if norm.q() == 2.0 {
            self.dykstra(z)?
        } else {
            self.dual_ascent(z, norm)?
        };
        // Absorb the residual infeasibility (at most the tolerance) with a
        // uniform upward shift so the result is exactly inside.
        let zeta = self.shift_to_set(&x);
        if zeta > 0.0 {
            x.iter_mut().for_each(|v| *v += zeta);
        }
        Ok(x)
    }

    /// Exact Euclidean projection onto `{x >= lower, a.x >= b}`: the
    /// minimizer is `max(lower, z + lambda a)` where `lambda >= 0` solves the
    /// piecewise linear equation `a.x(lambda) = b`, found by walking the
    /// sorted breakpoints.
    fn project_single_halfspace(&self, z: &[f64]) -> Vec<f64> {
        let h = &self.halfspaces[0];
        let at = |lambda: f64| -> Vec<f64> {
            z.iter()
                .zip(&h.a)
                .zip(&self.lower)
                .map(|((z, a), l)| (z + lambda * a).max(*l))
                .collect()
        };
        if h.dot(&at(0.0)) >= h.b {
            return at(0.0);
        }
        // Coordinate j leaves its bound at lambda = (l_j - z_j) / a_j.
        let release: Vec<Option<f64>> = z
            .iter()
            .zip(&h.a)
            .zip(&self.lower)
            .map(|((z, a), l)| (*a > 0.0).then(|| ((l - z) / a).max(0.0)))
            .collect();
        let mut breaks: Vec<f64> = release.iter().flatten().copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut lo = 0.0;
        for &bp in breaks.iter().chain(std::iter::once(&f64::INFINITY)) {
            // On [lo, bp] a.x is affine in lambda with slope the squared
            // normal mass of the released coordinates.
            let free: f64 = release
                .iter()
                .zip(&h.a)
                .filter(|(r, _)| r.is_some_and(|r| r <= lo))
                .map(|(_, a)| a * a)
                .sum();
            let base = h.dot(&at(lo));
            if free > 0.0 {
                let lambda = lo + (h.b - base).max(0.0) / free;
                if lambda <= bp {
                    return at(lambda);
                }
            }
            lo = bp;
        }
        unreachable!("a nonzero normal makes the half-space reachable")
    }

    /// Euclidean projection by Dykstra's alternating projections over the
    /// box and each half-space.
    pub fn dykstra(&self, z: &[f64]) -> Result<Vec<f64>> {
        let k = self.k();
        let n_sets = 1 + self.halfspaces.len();
        let mut x = z.to_vec();
        let mut corrections = vec![vec![0.0; k]; n_sets];
        let mut y = vec![0.0; k];
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_SWEEPS {
            let start = x.clone();
            let start_corr = corrections.clone();
            for (s, corr) in corrections.iter_mut().enumerate() {
                for j in 0..k {
                    y[j] = x[j] + corr[j];
                }
                if s == 0 {
                    for (yj, l) in y.iter_mut().zip(&self.lower) {
                        *yj = yj.max(*l);
                    }
                } else {
                    let h = &self.halfspaces[s - 1];
                    let gap = h.b - h.dot(&y);
                    if gap > 0.0 {
                        let norm2: f64 = h.a.iter().map(|a| a * a).sum();
                        for (yj, aj) in y.iter_mut().zip(&h.a) {
                            *yj += gap * aj / norm2;
                        }
                    }
                }
                for j in 0..k {
                    corr[j] = x[j] + corr[j] - y[j];
                    x[j] = y[j];
                }
            }
            // The iterate can stall while the corrections still move, so
            // both must settle.
            let moved = x
                .iter()
                .zip(&start)
                .chain(corrections.iter().flatten().zip(start_corr.iter().flatten()))
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            residual = self.shift_to_set(&x).max(0.0).max(moved);
            if residual <= PROJECTION_TOL {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence {
            sweeps: PROJECTION_MAX_SWEEPS,
            residual,
        })
    }

    /// `l_q` projection by coordinate ascent on the dual of
    /// `min (1/q) ||x - z||_q^q  s.t.  a_c . x >= b_c`. With
    /// `s = sum_c lambda_c a_c` the primal point is
    /// `x = z + sign(s) |s|^(1/(q-1))`. For `q = 2` this is Hildreth's method.
    pub fn dual_ascent(&self, z: &[f64], norm: NormSpec) -> Result<Vec<f64>> {
        let q = norm.q();
        let expo = 1.0 / (q - 1.0);
        let rows: Vec<(Vec<f64>, f64)> = self.constraints().map(|c| self.row(c)).collect();
        let k = self.k();
        let mut lambda = vec![0.0; rows.len()];
        let mut s = vec![0.0; k];
        let primal = |s: &[f64]| -> Vec<f64> {
            z.iter()
                .zip(s)
                .map(|(z, s)| z + s.signum() * s.abs().powf(expo))
                .collect()
        };
        let slack = |a: &[f64], b: f64, s: &[f64]| -> f64 {
            let x = primal(s);
            a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - b
        };
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_SWEEPS {
            let mut moved: f64 = 0.0;
            for (c, (a, b)) in rows.iter().enumerate() {
                // Remove this row's contribution, then pick lambda_c >= 0
                // zeroing the (decreasing) partial derivative b - a.x.
                let base: Vec<f64> = s
                    .iter()
                    .zip(a)
                    .map(|(s, a)| s - lambda[c] * a)
                    .collect();
                let at = |l: f64| -> Vec<f64> {
                    base.iter().zip(a).map(|(s, a)| s + l * a).collect()
                };
                let new = if slack(a, *b, &base) >= 0.0 {
                    0.0
                } else {
                    let mut hi = lambda[c].max(1e-3);
                    while slack(a, *b, &at(hi)) < 0.0 {
                        hi *= 2.0;
                    }
                    let mut lo = 0.0;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if slack(a, *b, &at(mid)) < 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-15 * hi.max(1.0) {
                            break;
                        }
                    }
                    hi
                };
                moved = moved.max((new - lambda[c]).abs());
                lambda[c] = new;
                s = at(new);
            }
            let x = primal(&s);
            let infeasible = self.shift_to_set(&x).max(0.0);
            let complementarity = rows
                .iter()
                .zip(&lambda)
                .map(|((a, b), l)| {
                    let gap = a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - b;
                    (l * gap).abs()
                })
                .fold(0.0_f64, f64::max);
            residual = infeasible.max(complementarity).max(moved * 1e-3);
            if infeasible <= PROJECTION_TOL && complementarity <= PROJECTION_TOL {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence {
            sweeps: PROJECTION_MAX_SWEEPS,
            residual,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// `S_w`: see [`TargetSet::weighted`].
pub fn weighted_set(w: &[f64]) -> Result<TargetSet> {
    TargetSet::weighted(w)
}
