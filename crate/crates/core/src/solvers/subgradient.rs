use crate::error::Result;
use crate::objective::{ValueContext, BEST_RESPONSE_TOL};
use crate::tensor::Distribution;

/// Distance gradient with respect to the score vector `z`, plus the distance.
fn score_gradient(ctx: &ValueContext, z: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = ctx.k();
    let set = &ctx.set;
    if ctx.norm.is_inf() {
        let (row, shift) = set.active_row(z);
        if shift <= 0.0 {
            return Ok((0.0, vec![0.0; k]));
        }
        let (a, _) = set.row(row);
        let mass: f64 = a.iter().sum();
        return Ok((shift, a.iter().map(|a| -a / mass).collect()));
    }
    if ctx.norm.q() == 1.0 {
        return set.l1_distance_subgradient(z);
    }
    let x = set.project_slice(z, ctx.norm)?;
    let r: Vec<f64> = z.iter().zip(&x).map(|(z, x)| z - x).collect();
    let dist = ctx.norm.norm(&r);
    if dist == 0.0 {
        return Ok((0.0, vec![0.0; k]));
    }
    Ok((dist, ctx.norm.gradient(&r)))
}

/// Chain rule through the score map: `g_r = sum_j P^j(r, i) dz_j`.
fn pull_back(ctx: &ValueContext, i: usize, dz: &[f64]) -> Vec<f64> {
    (0..ctx.d())
        .map(|r| dz.iter().enumerate().map(|(j, g)| g * ctx.tensor.get(j, r, i)).sum())
        .collect()
}

/// Distance and a subgradient in `x` of `x -> rho(P(x, i), S)` for every
/// opponent `i`.
pub(crate) fn column_gradients(ctx: &ValueContext, x: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    (0..ctx.d())
        .map(|i| {
            let z = ctx.tensor.score_linear(x, i);
            let (v, dz) = score_gradient(ctx, z.as_slice())?;
            Ok((v, pull_back(ctx, i, &dz)))
        })
        .collect()
}

/// A subgradient of the value at `pi`, taken through the lowest-index best
/// response.
///
/// * smooth `q`: `P(., i*)^T grad ||r||_q` with `r = z - proj(z)`, where
///   `grad ||r||_q = sign(r) |r / ||r||_q|^(q-1)`;
/// * `l_inf`: the slope of the active affine piece,
///   `-(1/|a|) sum_j a_j P^j(., i*)` (box rows have unit normals);
/// * `l_1`: `P(., i*)^T (-A^T y)` for optimal multipliers `y` of the
///   distance LP.
///
/// Returns the zero vector when the value is zero.
pub fn subgradient(ctx: &ValueContext, pi: &Distribution) -> Result<Vec<f64>> {
    let br = ctx.best_response_set(pi, BEST_RESPONSE_TOL)?;
    let i = br.first();
    let z = ctx.tensor.score_linear(pi.weights(), i);
    let (v, dz) = score_gradient(ctx, z.as_slice())?;
    if v <= 0.0 {
        return Ok(vec![0.0; ctx.d()]);
    }
    Ok(pull_back(ctx, i, &dz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{HalfSpace, NormSpec, TargetSet};
    use crate::instances::{all_half, conflict_example};
    use crate::tensor::PreferenceTensor;
    use proptest::prelude::*;

    fn conflict(norm: NormSpec) -> ValueContext {
        ValueContext::new(conflict_example(2, 2).unwrap(), TargetSet::orthant_half(2), norm).unwrap()
    }

    #[test]
    fn zero_inside_the_set() {
        let ctx = ValueContext::new(all_half(3, 2), TargetSet::orthant_half(2), NormSpec::L2).unwrap();
        assert_eq!(subgradient(&ctx, &Distribution::uniform(3)).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn conflict_vertex_matches_finite_differences() {
        // At [1, 0] only opponent 2 is deficient, on criterion 2.
        let ctx = conflict(NormSpec::INF);
        let g = subgradient(&ctx, &Distribution::point(2, 0)).unwrap();
        assert_eq!(g, vec![0.0, -0.5]);
        let h = 1e-6;
        let fd: Vec<f64> = (0..2)
            .map(|r| {
                let mut up = vec![1.0, 0.0];
                let mut dn = up.clone();
                up[r] += h;
                dn[r] -= h;
                (ctx.value_linear(&up).unwrap() - ctx.value_linear(&dn).unwrap()) / (2.0 * h)
            })
            .collect();
        assert!((fd[0] - g[0]).abs() < 1e-6 && (fd[1] - g[1]).abs() < 1e-6, "{fd:?}");
    }

    fn random_ctx(seed: &[f64], norm: NormSpec) -> ValueContext {
        let t = PreferenceTensor::from_fn(3, 2, |j, a, b| {
            if a == b {
                0.5
            } else if a < b {
                seed[j * 3 + a + b - 1]
            } else {
                1.0 - seed[j * 3 + a + b - 1]
            }
        });
        let set = TargetSet::new(vec![0.45, 0.4], vec![HalfSpace::new(vec![1.0, 1.0], 1.0).unwrap()]).unwrap();
        ValueContext::new(t, set, norm).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Away from kinks the subgradient is the gradient; check it along
        /// simplex-tangent directions against central differences.
        #[test]
        fn subgradient_matches_directional_derivatives(
            seed in proptest::collection::vec(0.0f64..1.0, 6),
            w in proptest::collection::vec(0.05f64..1.0, 3),
            qi in 0usize..4,
        ) {
            let norm = [NormSpec::INF, NormSpec::L1, NormSpec::L2, NormSpec::new(3.0).unwrap()][qi];
            let ctx = random_ctx(&seed, norm);
            let pi = Distribution::normalized(w).unwrap();
            let dist = ctx.column_distances(pi.weights()).unwrap();
            let mut sorted = dist.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assume!(sorted[0] > 1e-3 && sorted[0] - sorted[1] > 1e-3);
            let g = subgradient(&ctx, &pi).unwrap();
            let h = 1e-6;
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let mut up = pi.weights().to_vec();
                let mut dn = up.clone();
                up[a] += h; up[b] -= h;
                dn[a] -= h; dn[b] += h;
                let fd = (ctx.value_linear(&up).unwrap() - ctx.value_linear(&dn).unwrap()) / (2.0 * h);
                let lin = g[a] - g[b];
                // Piecewise-linear norms may sit on a kink of the distance itself;
                // there the one-sided slopes bracket the subgradient's.
                if norm.is_smooth() {
                    prop_assert!((fd - lin).abs() < 1e-4, "fd {fd} vs {lin}");
                } else {
                    let right = (ctx.value_linear(&up).unwrap() - ctx.value(&pi).unwrap()) / h;
                    let left = (ctx.value(&pi).unwrap() - ctx.value_linear(&dn).unwrap()) / h;
                    prop_assert!(lin <= right + 1e-4 && lin >= left - 1e-4, "{left} {lin} {right}");
                }
            }
        }
    }
}
