//! Pure vector-level intervention math shared by runtime hooks and offline
//! analysis.
//!
//! Directional ablation projects a residual vector onto the orthogonal
//! complement of a unit direction: `x' = x - r (r . x)`. Activation addition
//! offsets a vector along a direction: `x' = x + c r`. Both are plain fp32
//! operations; dot products accumulate in f64 so the ablation residual stays
//! well below [`crate::consts::ABLATION_RESIDUAL_TOL`] even at large hidden
//! dims.

use crate::consts::UNIT_NORM_TOL;
use crate::error::{Error, Result};

/// Dot product with f64 accumulation.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// L2 norm with f64 accumulation.
pub fn norm(x: &[f32]) -> f64 {
    dot(x, x).sqrt()
}

fn check_dims(x: &[f32], r: &[f32]) -> Result<()> {
    if x.len() != r.len() {
        return Err(Error::DimMismatch(format!(
            "vector has dim {}, direction has dim {}",
            x.len(),
            r.len()
        )));
    }
    Ok(())
}

/// A validated unit-norm projection direction.
#[derive(Debug, Clone)]
pub struct ProjectionOp {
    direction: Vec<f32>,
}

impl ProjectionOp {
    /// Wrap a direction, checking `||r|| = 1` within [`UNIT_NORM_TOL`].
    pub fn new(direction: Vec<f32>) -> Result<Self> {
        let n = norm(&direction);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm((n - 1.0).abs()));
        }
        Ok(Self { direction })
    }

    /// Normalize an arbitrary nonzero vector into a projection direction.
    pub fn from_unnormalized(v: &[f32]) -> Result<Self> {
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::ZeroNormDirection);
        }
        let direction = v.iter().map(|&x| (f64::from(x) / n) as f32).collect();
        Ok(Self { direction })
    }

    pub fn direction(&self) -> &[f32] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Remove the component of `x` along this direction, in place.
    pub fn ablate_in_place(&self, x: &mut [f32]) -> Result<()> {
        check_dims(x, &self.direction)?;
        let c = dot(x, &self.direction);
        for (xi, ri) in x.iter_mut().zip(self.direction.iter()) {
            *xi = (f64::from(*xi) - c * f64::from(*ri)) as f32;
        }
        Ok(())
    }
}

/// Project `x` onto the orthogonal complement of the unit direction `r`.
///
/// The result satisfies `result . r ~ 0` and `||result|| <= ||x||`.
pub fn ablate(x: &[f32], r: &[f32]) -> Result<Vec<f32>> {
    check_dims(x, r)?;
    let c = dot(x, r);
    Ok(x.iter()
        .zip(r.iter())
        .map(|(&xi, &ri)| (f64::from(xi) - c * f64::from(ri)) as f32)
        .collect())
}

/// `x + coeff * r`, exactly.
pub fn add_direction(x: &[f32], r: &[f32], coeff: f32) -> Result<Vec<f32>> {
    check_dims(x, r)?;
    Ok(x.iter()
        .zip(r.iter())
        .map(|(&xi, &ri)| xi + coeff * ri)
        .collect())
}

/// `x + coeff * r`, in place.
pub fn add_direction_in_place(x: &mut [f32], r: &[f32], coeff: f32) -> Result<()> {
    check_dims(x, r)?;
    for (xi, ri) in x.iter_mut().zip(r.iter()) {
        *xi += coeff * ri;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::{ABLATION_RESIDUAL_TOL, VECTOR_IDENTITY_TOL};
    use proptest::prelude::*;

    fn unit(v: &[f32]) -> Vec<f32> {
        let n = norm(v);
        v.iter().map(|&x| (f64::from(x) / n) as f32).collect()
    }

    #[test]
    fn parallel_vector_ablates_to_zero() {
        let r = [1.0f32, 0.0, 0.0];
        let x = [5.0f32, 0.0, 0.0];
        let out = ablate(&x, &r).unwrap();
        assert!(out.iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn orthogonal_vector_unchanged() {
        let r = [1.0f32, 0.0, 0.0];
        let x = [0.0f32, 2.0, -3.0];
        let out = ablate(&x, &r).unwrap();
        assert_eq!(out, vec![0.0, 2.0, -3.0]);
    }

    #[test]
    fn hand_projection_3_4() {
        // x = (3, 4), r = (1, 0) -> (0, 4)
        let out = ablate(&[3.0, 4.0], &[1.0, 0.0]).unwrap();
        assert!((out[0]).abs() < 1e-7);
        assert!((out[1] - 4.0).abs() < 1e-7);
    }

    #[test]
    fn add_direction_identities() {
        let x = [1.0f32, 2.0, 3.0];
        let r = unit(&[0.5, -0.5, 0.7]);
        assert_eq!(add_direction(&x, &r, 0.0).unwrap(), x.to_vec());
        let zero = [0.0f32; 3];
        let out = add_direction(&zero, &r, 1.0).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn dim_mismatch_rejected() {
        assert!(matches!(
            ablate(&[1.0, 2.0], &[1.0, 0.0, 0.0]),
            Err(Error::DimMismatch(_))
        ));
        assert!(matches!(
            add_direction(&[1.0], &[1.0, 0.0], 1.0),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn projection_op_rejects_non_unit() {
        assert!(ProjectionOp::new(vec![0.9, 0.0]).is_err());
        assert!(ProjectionOp::new(vec![1.0, 0.0]).is_ok());
        assert!(matches!(
            ProjectionOp::from_unnormalized(&[0.0, 0.0]),
            Err(Error::ZeroNormDirection)
        ));
    }

    proptest! {
        #[test]
        fn ablation_kills_component_and_shrinks_norm(
            x in proptest::collection::vec(-100.0f32..100.0, 8..64),
            raw in proptest::collection::vec(-1.0f32..1.0, 8..64),
        ) {
            let d = x.len().min(raw.len());
            let x = &x[..d];
            let raw = &raw[..d];
            prop_assume!(norm(raw) > 1e-3);
            let r = unit(raw);
            let out = ablate(x, &r).unwrap();
            let nx = norm(x).max(1e-12);
            prop_assert!(dot(&out, &r).abs() <= ABLATION_RESIDUAL_TOL * nx);
            prop_assert!(norm(&out) <= nx * (1.0 + 1e-6));
        }

        #[test]
        fn ablation_is_idempotent(
            x in proptest::collection::vec(-100.0f32..100.0, 8..64),
            raw in proptest::collection::vec(-1.0f32..1.0, 8..64),
        ) {
            let d = x.len().min(raw.len());
            let x = &x[..d];
            let raw = &raw[..d];
            prop_assume!(norm(raw) > 1e-3);
            let r = unit(raw);
            let once = ablate(x, &r).unwrap();
            let twice = ablate(&once, &r).unwrap();
            let scale = norm(x).max(1.0);
            for (a, b) in once.iter().zip(twice.iter()) {
                prop_assert!((f64::from(a - b)).abs() <= VECTOR_IDENTITY_TOL * scale);
            }
        }

        #[test]
        fn ablation_is_linear(
            x in proptest::collection::vec(-10.0f32..10.0, 16),
            y in proptest::collection::vec(-10.0f32..10.0, 16),
            raw in proptest::collection::vec(-1.0f32..1.0, 16),
            a in -3.0f32..3.0,
            b in -3.0f32..3.0,
        ) {
            prop_assume!(norm(&raw) > 1e-3);
            let r = unit(&raw);
            let combo: Vec<f32> = x.iter().zip(y.iter()).map(|(&u, &v)| a * u + b * v).collect();
            let lhs = ablate(&combo, &r).unwrap();
            let ax = ablate(&x, &r).unwrap();
            let by = ablate(&y, &r).unwrap();
            let scale = norm(&combo).max(1.0);
            for i in 0..16 {
                let rhs = f64::from(a) * f64::from(ax[i]) + f64::from(b) * f64::from(by[i]);
                prop_assert!((f64::from(lhs[i]) - rhs).abs() <= 10.0 * VECTOR_IDENTITY_TOL * scale);
            }
        }

        #[test]
        fn ablate_after_add_equals_ablate(
            x in proptest::collection::vec(-10.0f32..10.0, 16),
            raw in proptest::collection::vec(-1.0f32..1.0, 16),
            c in -5.0f32..5.0,
        ) {
            prop_assume!(norm(&raw) > 1e-3);
            let r = unit(&raw);
            let added = add_direction(&x, &r, c).unwrap();
            let lhs = ablate(&added, &r).unwrap();
            let rhs = ablate(&x, &r).unwrap();
            let scale = norm(&x).max(1.0) + f64::from(c.abs());
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((f64::from(a - b)).abs() <= 10.0 * VECTOR_IDENTITY_TOL * scale);
            }
        }
    }
}
