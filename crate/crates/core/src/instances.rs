//! Named instance families and the bundled driving-study data.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{HalfSpace, NormSpec, TargetSet};
use crate::tensor::{Distribution, PreferenceTensor, SquareMatrix};

/// An instance `(P, S, ||.||)` with whatever is known about its optimum.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub tensor: PreferenceTensor,
    pub set: TargetSet,
    pub norm: NormSpec,
    pub known_value: Option<f64>,
    pub known_winner: Option<Distribution>,
    pub provenance: String,
}

pub fn all_half(d: usize, k: usize) -> PreferenceTensor {
    PreferenceTensor::from_fn(d, k, |_, _, _| 0.5)
}

/// Entry of the 2x2 conflict pair: object 1 wins criterion 1 outright and
/// loses criterion 2 outright.
fn conflict_entry(j: usize, a: usize, b: usize) -> f64 {
    match (j, a, b) {
        (_, a, b) if a == b => 0.5,
        (0, 0, 1) | (1, 1, 0) => 1.0,
        _ => 0.0,
    }
}

/// The conflict pair repeated on the diagonal blocks of criteria 1 and 2,
/// with every other entry (cross-block, criteria 3..k) equal to 1/2.
pub fn conflict_example(d: usize, k: usize) -> Result<PreferenceTensor> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("conflict example needs even d, got {d}")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("conflict example needs k >= 2, got {k}")));
    }
    Ok(PreferenceTensor::from_fn(d, k, |j, a, b| {
        if j < 2 && a / 2 == b / 2 {
            conflict_entry(j, a % 2, b % 2)
        } else {
            0.5
        }
    }))
}

/// `P_cr(gamma)` on criterion `j` (0 or 1), 2x2 block.
fn cr2(j: usize, gamma: f64, a: usize, b: usize) -> f64 {
    let g = if j == 0 { gamma } else { -gamma };
    match (a, b) {
        (0, 1) => 0.5 + g,
        (1, 0) => 0.5 - g,
        _ => 0.5,
    }
}

/// `P_cr,3(gamma)` on criterion `j` (0 or 1), 3x3 block.
fn cr3(j: usize, gamma: f64, a: usize, b: usize) -> f64 {
    let g = if j == 0 { gamma } else { -gamma };
    const SIGN: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, -1.0], [1.0, 1.0, 0.0]];
    0.5 + SIGN[a][b] * g
}

/// The two tensors of the lower-bound construction. Both carry `P_cr(gamma)`
/// blocks on the diagonal of criteria 1 and 2 (a 3x3 block last when `d` is
/// odd); they differ only in the leading block, all-half in `P0` and
/// `P_cr(gamma / d)` in `P1`.
pub fn lecam_pair(d: usize, k: usize, gamma: f64) -> Result<(PreferenceTensor, PreferenceTensor)> {
    if d < 4 {
        return Err(Error::InvalidParameter(format!("Le Cam pair needs d >= 4, got {d}")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("Le Cam pair needs k >= 2, got {k}")));
    }
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::InvalidParameter(format!("gamma={gamma} outside (0, 1/2]")));
    }
    let odd_from = if d % 2 == 1 { d - 3 } else { d };
    let build = |lead: Option<f64>| {
        PreferenceTensor::from_fn(d, k, |j, a, b| {
            if j >= 2 {
                return 0.5;
            }
            if a >= odd_from && b >= odd_from {
                return cr3(j, gamma, a - odd_from, b - odd_from);
            }
            if a / 2 != b / 2 || a >= odd_from || b >= odd_from {
                return 0.5;
            }
            if a / 2 == 0 {
                return lead.map_or(0.5, |g| cr2(j, g, a, b));
            }
            cr2(j, gamma, a % 2, b % 2)
        })
    };
    Ok((build(None), build(Some(gamma / d as f64))))
}

fn check_criteria(j1: usize, j2: usize, k: usize) -> Result<()> {
    if j1 == j2 || j1 >= k || j2 >= k {
        return Err(Error::InvalidParameter(format!(
            "criteria ({j1}, {j2}) must be distinct and below k={k}"
        )));
    }
    Ok(())
}

/// 2x2xk tensor with `p(j1; 1, 2) = 1/2 + alpha`, `p(j2; 1, 2) = 1/2 + beta`
/// and all-half elsewhere. Criteria are 0-based.
pub fn alpha_beta_tensor(alpha: f64, beta: f64, j1: usize, j2: usize, k: usize) -> Result<PreferenceTensor> {
    check_criteria(j1, j2, k)?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(-0.5..=0.5).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name}={v} outside [-1/2, 1/2]")));
        }
    }
    Ok(PreferenceTensor::from_fn(2, k, |j, a, b| {
        let shift = if j == j1 {
            alpha
        } else if j == j2 {
            beta
        } else {
            0.0
        };
        match (a, b) {
            (0, 1) => 0.5 + shift,
            (1, 0) => 0.5 - shift,
            _ => 0.5,
        }
    }))
}

/// `(1 - delta) P_{0,0} + delta P_{alpha0, beta0}`.
pub fn delta_mixture(
    delta: f64,
    alpha0: f64,
    beta0: f64,
    j1: usize,
    j2: usize,
    k: usize,
) -> Result<PreferenceTensor> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta={delta} outside [0, 1]")));
    }
    alpha_beta_tensor(delta * alpha0, delta * beta0, j1, j2, k)
}

/// Cyclic rock-paper-scissors payoff of odd size `d`: each object loses
/// (0.25) to the `(d-1)/2` objects after it and beats (0.75) the rest.
pub fn rps_tensor(d: usize) -> Result<SquareMatrix> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("RPS needs odd d >= 3, got {d}")));
    }
    let half = (d - 1) / 2;
    Ok(SquareMatrix::from_fn(d, |r, c| {
        let s = (c + d - r) % d;
        if s == 0 {
            0.5
        } else if s <= half {
            0.25
        } else {
            0.75
        }
    }))
}

/// Conflict pair on criteria 1 and 2, all-half beyond, target `[1/2, 1]^k`
/// in `l_inf`. The winner is uniform with value 1/4.
pub fn conflict_bundle(k: usize) -> Result<InstanceBundle> {
    Ok(InstanceBundle {
        tensor: conflict_example(2, k)?,
        set: TargetSet::orthant_half(k),
        norm: NormSpec::INF,
        known_value: Some(0.25),
        known_winner: Some(Distribution::uniform(2)),
        provenance: "conflict pair: approachable but not achievable".into(),
    })
}

/// Lower bounds `z >= (0.3, 0.3, 0.2, 0.3, 0.4)`.
pub fn driving_s1() -> TargetSet {
    TargetSet::boxed(vec![0.3, 0.3, 0.2, 0.3, 0.4]).expect("static set is valid")
}

/// Lower bounds 0.25 on every criterion plus `z1 + z5 >= 0.9`.
pub fn driving_s2() -> TargetSet {
    TargetSet::new(
        vec![0.25; 5],
        vec![HalfSpace::new(vec![1.0, 0.0, 0.0, 0.0, 1.0], 0.9).expect("static half-space is valid")],
    )
    .expect("static set is valid")
}

pub const DRIVING_POLICIES: [&str; 7] = ["A", "B", "C", "D", "E", "R1", "R2"];

const BUNDLE: [(&str, &str, &str); 5] = [
    (
        "tensor.json",
        include_str!("../data/driving/tensor.json"),
        "ddef1ad1043bbdcfe8e5115ca7306f1b80edef164d8ecaab9f42c3278bb32eaa",
    ),
    (
        "overall.json",
        include_str!("../data/driving/overall.json"),
        "27680bb2496bcde932d00dc297da371afb9a229c0c613df3ee79c96bf0657777",
    ),
    (
        "s1.json",
        include_str!("../data/driving/s1.json"),
        "f0ba7b6c9dd2c977e2f0445517771e31548c1e89632da86c01e96c2d2aa03990",
    ),
    (
        "s2.json",
        include_str!("../data/driving/s2.json"),
        "32f87aa2e97e38903bfd1ab847ba0417bef47aadbcd4d0cee13e7ea9429bc34f",
    ),
    (
        "weights.json",
        include_str!("../data/driving/weights.json"),
        "c8128a881c44b64d2f5701461ec9655b25e6d21f914b3e2a6e11ee29493fe9a8",
    ),
];

/// Comparison data among five baseline driving policies (A-E) and two
/// randomized policies (R1, R2), on five criteria plus an overall matrix.
#[derive(Debug, Clone)]
pub struct DrivingDataset {
    /// 7x7x5, policies in [`DRIVING_POLICIES`] order.
    pub tensor: PreferenceTensor,
    pub overall: SquareMatrix,
    /// Pairs never compared in the study, filled with 1/2.
    pub unobserved: Vec<(usize, usize)>,
    pub s1: TargetSet,
    pub s2: TargetSet,
    /// `w1..w9`; `None` marks weights that cannot be reconstructed.
    pub weights: Vec<(String, Option<Vec<f64>>)>,
}

impl DrivingDataset {
    /// The five baseline policies only.
    pub fn base_tensor(&self) -> PreferenceTensor {
        self.tensor
            .restrict(&[0, 1, 2, 3, 4])
            .expect("baseline indices are in range")
    }

    pub fn base_overall(&self) -> SquareMatrix {
        SquareMatrix::from_fn(5, |r, c| self.overall.get(r, c))
    }

    pub fn weight(&self, name: &str) -> Option<&[f64]> {
        self.weights
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, w)| w.as_deref())
    }
}

#[derive(Deserialize)]
struct OverallFile {
    matrix: Vec<Vec<f64>>,
    unobserved: Vec<(usize, usize)>,
}

fn verify(name: &str, text: &str, expected: &str) -> Result<()> {
    let found = hex::encode(Sha256::digest(text.as_bytes()));
    if found != expected {
        return Err(Error::Checksum {
            name: name.into(),
            expected: expected.into(),
            found,
        });
    }
    Ok(())
}

fn parse_bundle(files: &[(&str, &str, &str); 5]) -> Result<DrivingDataset> {
    for (name, text, sum) in files {
        verify(name, text, sum)?;
    }
    let tensor = PreferenceTensor::from_file(serde_json::from_str(files[0].1)?, false)?;
    let overall: OverallFile = serde_json::from_str(files[1].1)?;
    let overall_m = SquareMatrix::from_rows(&overall.matrix)?;
    let report = overall_m.validate_preference();
    if !report.is_ok() {
        return Err(Error::InvalidTensor(report.violations));
    }
    let weights: serde_json::Map<String, serde_json::Value> = serde_json::from_str(files[4].1)?;
    let weights = weights
        .into_iter()
        .map(|(n, v)| Ok((n, serde_json::from_value::<Option<Vec<f64>>>(v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DrivingDataset {
        tensor,
        overall: overall_m,
        unobserved: overall.unobserved,
        s1: serde_json::from_str(files[2].1)?,
        s2: serde_json::from_str(files[3].1)?,
        weights,
    })
}

/// The bundled study data, checksum-verified.
pub fn driving_dataset() -> Result<DrivingDataset> {
    parse_bundle(&BUNDLE)
}
