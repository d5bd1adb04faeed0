//! Preference tensors, distributions over objects, and score vectors.
//!
//! A tensor holds `k` criterion slices, each a `d x d` matrix whose entry
//! `(i1, i2)` is the probability that object `i1` beats `i2` on that
//! criterion. Storage is criterion-major: slice `j` is contiguous.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the symmetry, diagonal and range checks.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Tolerance on `sum(weights) == 1` for a [`Distribution`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Dense row-major square matrix. Used for single-criterion preference
/// matrices and for general payoff matrices in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `x^T M e_col` for an arbitrary real vector `x`.
    pub fn column_dot(&self, x: &[f64], col: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(r, xr)| xr * self.get(r, col))
            .sum()
    }

    /// Checks `m(r,c) + m(c,r) = 1`, `m(r,r) = 1/2` and the `[0,1]` range.
    pub fn validate_preference(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_slice(0, self.n, |r, c| self.get(r, c), &mut report);
        report
    }
}

/// Which invariant a tensor entry breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Symmetry,
    Diagonal,
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub j: usize,
    pub i1: usize,
    pub i2: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_slice(
    j: usize,
    d: usize,
    entry: impl Fn(usize, usize) -> f64,
    report: &mut ValidationReport,
) {
    for i1 in 0..d {
        for i2 in 0..d {
            let p = entry(i1, i2);
            if !(-VALIDATION_TOL..=1.0 + VALIDATION_TOL).contains(&p) {
                report.violations.push(Violation {
                    j,
                    i1,
                    i2,
                    kind: ViolationKind::Range,
                });
            }
            if i1 == i2 {
                if (p - 0.5).abs() > VALIDATION_TOL {
                    report.violations.push(Violation {
                        j,
                        i1,
                        i2,
                        kind: ViolationKind::Diagonal,
                    });
                }
            } else if i1 < i2 && (p + entry(i2, i1) - 1.0).abs() > VALIDATION_TOL {
                report.violations.push(Violation {
                    j,
                    i1,
                    i2,
                    kind: ViolationKind::Symmetry,
                });
            }
        }
    }
}

/// A `d x d x k` array of comparison probabilities indexed `(j, i1, i2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceTensor {
    d: usize,
    k: usize,
    p: Vec<f64>,
    criteria: Option<Vec<String>>,
}

impl PreferenceTensor {
    /// Builds a tensor from criterion-major data without checking the
    /// preference invariants; see [`PreferenceTensor::validate`].
    pub fn from_raw(d: usize, k: usize, p: Vec<f64>) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "tensor needs d >= 1 and k >= 1, got d={d}, k={k}"
            )));
        }
        if p.len() != d * d * k {
            return Err(Error::DimensionMismatch {
                what: "tensor entries",
                expected: d * d * k,
                found: p.len(),
            });
        }
        if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite entry {bad}")));
        }
        Ok(Self {
            d,
            k,
            p,
            criteria: None,
        })
    }

    /// Builds a tensor and rejects it unless every invariant holds.
    pub fn new(d: usize, k: usize, p: Vec<f64>) -> Result<Self> {
        let t = Self::from_raw(d, k, p)?;
        t.ensure_valid()?;
        Ok(t)
    }

    pub fn from_fn(d: usize, k: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut p = Vec::with_capacity(d * d * k);
        for j in 0..k {
            for i1 in 0..d {
                for i2 in 0..d {
                    p.push(f(j, i1, i2));
                }
            }
        }
        Self {
            d,
            k,
            p,
            criteria: None,
        }
    }

    /// Stacks single-criterion matrices into a tensor.
    pub fn from_slices(slices: &[SquareMatrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidParameter("no criterion slices".into()))?;
        let d = first.dim();
        for s in slices {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    what: "criterion slice",
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        Ok(Self::from_fn(d, slices.len(), |j, i1, i2| {
            slices[j].get(i1, i2)
        }))
    }

    pub fn with_criteria(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "criteria names",
                expected: self.k,
                found: names.len(),
            });
        }
        self.criteria = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn criteria(&self) -> Option<&[String]> {
        self.criteria.as_deref()
    }

    #[inline]
    fn idx(&self, j: usize, i1: usize, i2: usize) -> usize {
        (j * self.d + i1) * self.d + i2
    }

    #[inline]
    pub fn get(&self, j: usize, i1: usize, i2: usize) -> f64 {
        self.p[self.idx(j, i1, i2)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, i1: usize, i2: usize, v: f64) {
        let idx = self.idx(j, i1, i2);
        self.p[idx] = v;
    }

    pub fn raw(&self) -> &[f64] {
        &self.p
    }

    /// Criterion slice `P^j` as a matrix.
    pub fn slice(&self, j: usize) -> SquareMatrix {
        let start = j * self.d * self.d;
        SquareMatrix {
            n: self.d,
            data: self.p[start..start + self.d * self.d].to_vec(),
        }
    }

    /// Diagnostic check of the three invariants: pairwise symmetry,
    /// diagonal one-half, and entries in `[0, 1]`. Never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for j in 0..self.k {
            check_slice(j, self.d, |i1, i2| self.get(j, i1, i2), &mut report);
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidTensor(report.violations))
        }
    }

    /// Score vector `P(pi1, pi2)`: component `j` is `pi1^T P^j pi2`.
    pub fn score_mixed(&self, pi1: &Distribution, pi2: &Distribution) -> Result<ScoreVector> {
        self.check_dim(pi1.len())?;
        self.check_dim(pi2.len())?;
        let (a, b) = (pi1.weights(), pi2.weights());
        let scores = (0..self.k)
            .map(|j| {
                let mut s = 0.0;
                for (i1, &w1) in a.iter().enumerate() {
                    if w1 == 0.0 {
                        continue;
                    }
                    let row = &self.p[self.idx(j, i1, 0)..self.idx(j, i1, 0) + self.d];
                    s += w1 * row.iter().zip(b).map(|(p, w2)| p * w2).sum::<f64>();
                }
                s
            })
            .collect();
        Ok(ScoreVector(scores))
    }

    /// Score vector `P(pi, i2)` against a pure opponent.
    pub fn score_vs_pure(&self, pi: &Distribution, i2: usize) -> Result<ScoreVector> {
        self.check_dim(pi.len())?;
        if i2 >= self.d {
            return Err(Error::IndexOutOfRange {
                index: i2,
                len: self.d,
            });
        }
        Ok(self.score_linear(pi.weights(), i2))
    }

    /// `x^T P^j e_i2` for every `j`, with `x` any real vector of length `d`.
    /// This is the linear extension of the score map off the simplex.
    pub fn score_linear(&self, x: &[f64], i2: usize) -> ScoreVector {
        debug_assert_eq!(x.len(), self.d);
        let scores = (0..self.k)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .map(|(i1, xi)| xi * self.get(j, i1, i2))
                    .sum()
            })
            .collect();
        ScoreVector(scores)
    }

    /// `P(w) = sum_j w_j P^j`.
    pub fn weighted_matrix(&self, w: &[f64]) -> Result<SquareMatrix> {
        if w.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "criterion weights",
                expected: self.k,
                found: w.len(),
            });
        }
        check_simplex(w)?;
        Ok(SquareMatrix::from_fn(self.d, |i1, i2| {
            w.iter()
                .enumerate()
                .map(|(j, wj)| wj * self.get(j, i1, i2))
                .sum()
        }))
    }

    /// Keeps only the listed objects, in the given order.
    pub fn restrict(&self, objects: &[usize]) -> Result<Self> {
        for &o in objects {
            if o >= self.d {
                return Err(Error::IndexOutOfRange {
                    index: o,
                    len: self.d,
                });
            }
        }
        let mut t = Self::from_fn(objects.len(), self.k, |j, a, b| {
            self.get(j, objects[a], objects[b])
        });
        t.criteria = self.criteria.clone();
        Ok(t)
    }

    /// `max_i || Q(., i) - P(., i) ||_{inf, q}`: the `d x k` deviation of
    /// each opponent column, measured as the largest `l_q` norm (over
    /// criteria) of any of its rows, maximized over columns.
    pub fn column_deviation(&self, other: &Self, q: crate::geometry::NormSpec) -> Result<f64> {
        if self.d != other.d || self.k != other.k {
            return Err(Error::DimensionMismatch {
                what: "tensor shape",
                expected: self.d * self.d * self.k,
                found: other.d * other.d * other.k,
            });
        }
        let mut worst: f64 = 0.0;
        let mut row = vec![0.0; self.k];
        for i2 in 0..self.d {
            for i1 in 0..self.d {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = self.get(j, i1, i2) - other.get(j, i1, i2);
                }
                worst = worst.max(q.norm(&row));
            }
        }
        Ok(worst)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch {
                what: "distribution",
                expected: self.d,
                found: len,
            });
        }
        Ok(())
    }

    pub fn to_file(&self) -> TensorFile {
        TensorFile {
            d: self.d,
            k: self.k,
            criteria: self.criteria.clone(),
            p: (0..self.k)
                .map(|j| self.slice(j).rows())
                .collect(),
        }
    }

    pub fn from_file(file: TensorFile, allow_invalid: bool) -> Result<Self> {
        if file.p.len() != file.k {
            return Err(Error::DimensionMismatch {
                what: "criterion slices",
                expected: file.k,
                found: file.p.len(),
            });
        }
        let mut flat = Vec::with_capacity(file.d * file.d * file.k);
        for slice in &file.p {
            if slice.len() != file.d {
                return Err(Error::DimensionMismatch {
                    what: "slice rows",
                    expected: file.d,
                    found: slice.len(),
                });
            }
            for row in slice {
                if row.len() != file.d {
                    return Err(Error::DimensionMismatch {
                        what: "slice columns",
                        expected: file.d,
                        found: row.len(),
                    });
                }
                flat.extend_from_slice(row);
            }
        }
        let mut t = Self::from_raw(file.d, file.k, flat)?;
        if let Some(names) = file.criteria {
            t = t.with_criteria(names)?;
        }
        if !allow_invalid {
            t.ensure_valid()?;
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>, allow_invalid: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?, allow_invalid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }
}

/// On-disk JSON tensor: `p[j][i1][i2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorFile {
    pub d: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<String>>,
    pub p: Vec<Vec<Vec<f64>>>,
}

/// Upper-triangular entries `(j, i1, i2)` with `i1 < i2`, to be completed
/// by mirroring.
#[derive(Debug, Clone)]
pub struct UpperEntries {
    d: usize,
    k: usize,
    values: Vec<Option<f64>>,
}

impl UpperEntries {
    pub fn new(d: usize, k: usize) -> Self {
        Self {
            d,
            k,
            values: vec![None; d * d * k],
        }
    }

    pub fn set(&mut self, j: usize, i1: usize, i2: usize, v: f64) -> Result<()> {
        if i1 >= i2 || i2 >= self.d || j >= self.k {
            return Err(Error::InvalidParameter(format!(
                "upper entry ({j},{i1},{i2}) outside i1 < i2 < {}, j < {}",
                self.d, self.k
            )));
        }
        self.values[(j * self.d + i1) * self.d + i2] = Some(v);
        Ok(())
    }

    pub fn get(&self, j: usize, i1: usize, i2: usize) -> Option<f64> {
        self.values[(j * self.d + i1) * self.d + i2]
    }

    /// Upper triangle of an existing tensor.
    pub fn of(t: &PreferenceTensor) -> Self {
        let mut u = Self::new(t.d(), t.k());
        for j in 0..t.k() {
            for i1 in 0..t.d() {
                for i2 in i1 + 1..t.d() {
                    u.values[(j * t.d() + i1) * t.d() + i2] = Some(t.get(j, i1, i2));
                }
            }
        }
        u
    }

    /// Full tensor with `p(j,i2,i1) = 1 - p(j,i1,i2)` and diagonals 1/2.
    pub fn complete(&self) -> Result<PreferenceTensor> {
        let mut t = PreferenceTensor::from_fn(self.d, self.k, |_, _, _| 0.5);
        for j in 0..self.k {
            for i1 in 0..self.d {
                for i2 in i1 + 1..self.d {
                    let v = self.get(j, i1, i2).ok_or(Error::MissingEntry { j, i1, i2 })?;
                    t.set(j, i1, i2, v);
                    t.set(j, i2, i1, 1.0 - v);
                }
            }
        }
        Ok(t)
    }
}

/// Completes a tensor from its strictly upper-triangular entries.
pub fn complete_upper(upper: &UpperEntries) -> Result<PreferenceTensor> {
    upper.complete()
}

fn check_simplex(w: &[f64]) -> Result<()> {
    let sum: f64 = w.iter().sum();
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 || (sum - 1.0).abs() > SIMPLEX_TOL || !sum.is_finite() {
        return Err(Error::NotOnSimplex { sum, min });
    }
    Ok(())
}

/// A point of the probability simplex over `d` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        check_simplex(&weights)?;
        Ok(Self(weights))
    }

    /// Clamps negatives to zero and rescales to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        for w in &mut weights {
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite weight {w}")));
            }
            *w = w.max(0.0);
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::NotOnSimplex { sum, min: 0.0 });
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self(weights))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn point(d: usize, i: usize) -> Self {
        let mut w = vec![0.0; d];
        w[i] = 1.0;
        Self(w)
    }

    /// `alpha * a + (1 - alpha) * b`.
    pub fn mix(a: &Self, b: &Self, alpha: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "distribution",
                expected: a.len(),
                found: b.len(),
            });
        }
        Self::normalized(
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.0
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w:.6}")?;
        }
        write!(f, "]")
    }
}

/// Length-`k` vector of per-criterion win probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{all_half, conflict_example};

    fn two_ex() -> PreferenceTensor {
        conflict_example(2, 2).unwrap()
    }

    #[test]
    fn all_half_is_valid() {
        assert!(all_half(3, 2).validate().is_ok());
    }

    #[test]
    fn asymmetric_pair_is_reported_once() {
        let mut t = all_half(3, 2);
        t.set(0, 0, 1, 0.7);
        t.set(0, 1, 0, 0.4);
        let report = t.validate();
        assert_eq!(
            report.violations,
            vec![Violation {
                j: 0,
                i1: 0,
                i2: 1,
                kind: ViolationKind::Symmetry
            }]
        );
    }

    #[test]
    fn off_half_diagonal_and_range_are_flagged() {
        let mut t = all_half(2, 1);
        t.set(0, 1, 1, 0.6);
        t.set(0, 0, 1, 1.2);
        t.set(0, 1, 0, -0.2);
        let kinds: Vec<_> = t.validate().violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::Diagonal));
        assert!(kinds.contains(&ViolationKind::Range));
        assert!(PreferenceTensor::new(2, 1, t.raw().to_vec()).is_err());
    }

    #[test]
    fn conflict_tensor_is_valid() {
        let t = two_ex();
        assert!(t.validate().is_ok());
        assert_eq!(t.get(0, 0, 1), 1.0);
        assert_eq!(t.get(1, 1, 0), 1.0);
    }

    #[test]
    fn scores_against_pure_columns() {
        let t = two_ex();
        for &p in &[0.0, 0.3, 0.5, 0.9, 1.0] {
            let pi = Distribution::new(vec![p, 1.0 - p]).unwrap();
            let r1 = t.score_vs_pure(&pi, 0).unwrap();
            let r2 = t.score_vs_pure(&pi, 1).unwrap();
            assert!((r1.0[0] - p / 2.0).abs() < 1e-15);
            assert!((r1.0[1] - (1.0 - p / 2.0)).abs() < 1e-15);
            assert!((r2.0[0] - (0.5 + p / 2.0)).abs() < 1e-15);
            assert!((r2.0[1] - (0.5 - p / 2.0)).abs() < 1e-15);
            let mixed = t.score_mixed(&pi, &Distribution::point(2, 1)).unwrap();
            assert_eq!(mixed, r2);
        }
    }

    #[test]
    fn all_half_scores_are_half() {
        let t = all_half(4, 3);
        let pi = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let s = t.score_mixed(&pi, &Distribution::uniform(4)).unwrap();
        assert!(s.0.iter().all(|v| (v - 0.5).abs() < 1e-15));
        let s = t.score_vs_pure(&Distribution::uniform(4), 2).unwrap();
        assert!(s.0.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn scoring_errors() {
        let t = two_ex();
        assert!(matches!(
            t.score_vs_pure(&Distribution::uniform(2), 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            t.score_mixed(&Distribution::uniform(3), &Distribution::uniform(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weighted_matrix_examples() {
        let t = two_ex();
        assert_eq!(t.weighted_matrix(&[1.0, 0.0]).unwrap(), t.slice(0));
        let half = t.weighted_matrix(&[0.5, 0.5]).unwrap();
        assert_eq!(half, SquareMatrix::constant(2, 0.5));
        let m = t.weighted_matrix(&[0.3, 0.7]).unwrap();
        assert!((m.get(0, 1) - 0.3).abs() < 1e-15);
        assert!(m.validate_preference().is_ok());
        assert!(matches!(
            t.weighted_matrix(&[0.6, 0.6]),
            Err(Error::NotOnSimplex { .. })
        ));
    }

    #[test]
    fn complete_upper_examples() {
        let mut u = UpperEntries::new(2, 1);
        u.set(0, 0, 1, 0.8).unwrap();
        let t = complete_upper(&u).unwrap();
        assert!((t.get(0, 1, 0) - 0.2).abs() < 1e-15);
        assert_eq!(t.get(0, 0, 0), 0.5);

        let single = complete_upper(&UpperEntries::new(1, 1)).unwrap();
        assert_eq!(single.raw(), &[0.5]);

        let ex = two_ex();
        assert_eq!(complete_upper(&UpperEntries::of(&ex)).unwrap(), ex);

        let missing = UpperEntries::new(3, 1);
        assert!(matches!(
            complete_upper(&missing),
            Err(Error::MissingEntry { j: 0, i1: 0, i2: 1 })
        ));
        assert!(UpperEntries::new(2, 1).set(0, 1, 0, 0.3).is_err());
    }

    #[test]
    fn distribution_checks() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        let d = Distribution::normalized(vec![2.0, -1e-18, 2.0]).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.0, 0.5]);
        let json = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Distribution>("[0.2, 0.2]").is_err());
    }

    #[test]
    fn json_file_round_trip_and_refusal() {
        let t = two_ex().with_criteria(vec!["a".into(), "b".into()]).unwrap();
        let file = t.to_file();
        let text = serde_json::to_string(&file).unwrap();
        let back = PreferenceTensor::from_file(serde_json::from_str(&text).unwrap(), false).unwrap();
        assert_eq!(back, t);

        let mut bad = file.clone();
        bad.p[0][0][1] = 0.7;
        assert!(matches!(
            PreferenceTensor::from_file(bad.clone(), false),
            Err(Error::InvalidTensor(_))
        ));
        assert!(PreferenceTensor::from_file(bad, true).is_ok());
    }

    #[test]
    fn column_deviation_matches_hand_value() {
        let p = all_half(2, 2);
        let q = two_ex();
        // Column 0 deviates by 0.5 on both criteria, column 1 likewise.
        let inf = p.column_deviation(&q, crate::geometry::NormSpec::INF).unwrap();
        let one = p.column_deviation(&q, crate::geometry::NormSpec::L1).unwrap();
        assert!((inf - 0.5).abs() < 1e-15);
        assert!((one - 1.0).abs() < 1e-15);
    }
}
