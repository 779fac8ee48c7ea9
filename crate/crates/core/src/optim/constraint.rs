use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::scalar::Scalar;

/// Feasible set with a Euclidean projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Constraint<T> {
    L2Ball {
        center: Vec<T>,
        radius: T,
    },
    LinfBall {
        center: Vec<T>,
        radius: T,
    },
    Box {
        lo: Vec<T>,
        hi: Vec<T>,
    },
    /// Coordinates where `mask` is false are pinned to `reference`; `inner`
    /// (full-dimensional) constrains the rest.
    Masked {
        inner: std::boxed::Box<Constraint<T>>,
        mask: Vec<bool>,
        reference: Vec<T>,
    },
    /// All parts at once; projected with Dykstra's alternating scheme.
    Intersection {
        parts: Vec<Constraint<T>>,
    },
}

const DYKSTRA_MAX_ITER: usize = 2000;

impl<T: Scalar> Constraint<T> {
    pub fn l2_ball(center: Vec<T>, radius: T) -> Self {
        Self::L2Ball { center, radius }
    }

    pub fn linf_ball(center: Vec<T>, radius: T) -> Self {
        Self::LinfBall { center, radius }
    }

    pub fn bounds(lo: Vec<T>, hi: Vec<T>) -> Self {
        Self::Box { lo, hi }
    }

    pub fn uniform_box(dim: usize, lo: T, hi: T) -> Self {
        Self::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn masked(inner: Self, mask: Vec<bool>, reference: Vec<T>) -> Self {
        Self::Masked {
            inner: std::boxed::Box::new(inner),
            mask,
            reference,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L2Ball { center, .. } | Self::LinfBall { center, .. } => center.len(),
            Self::Box { lo, .. } => lo.len(),
            Self::Masked { mask, .. } => mask.len(),
            Self::Intersection { parts } => parts.first().map_or(0, Self::dim),
        }
    }

    /// Checks internal consistency: non-negative radii, `lo ≤ hi`, matching
    /// dimensions, and a non-empty pinned slice for masks.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::L2Ball { radius, center } | Self::LinfBall { radius, center } => {
                if !(radius.is_finite() && *radius >= T::zero()) {
                    return Err(Error::InvalidArgument(
                        "ball radius must be finite and non-negative".into(),
                    ));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidValue("non-finite ball center".into()));
                }
                Ok(())
            }
            Self::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::Shape("box bounds differ in length".into()));
                }
                if let Some(j) = lo.iter().zip(hi).position(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidArgument(format!(
                        "box coordinate {j} has lo > hi"
                    )));
                }
                Ok(())
            }
            Self::Masked {
                inner,
                mask,
                reference,
            } => {
                inner.validate()?;
                if mask.len() != reference.len() || inner.dim() != mask.len() {
                    return Err(Error::Shape(
                        "mask, reference and inner constraint differ in dimension".into(),
                    ));
                }
                self.restricted().map(|_| ())
            }
            Self::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidArgument("empty intersection".into()));
                }
                let d = parts[0].dim();
                for p in parts {
                    p.validate()?;
                    if p.dim() != d {
                        return Err(Error::Shape(
                            "intersected constraints differ in dimension".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// For a masked constraint: the inner set restricted to the free
    /// coordinates with the pinned ones fixed at the reference.
    fn restricted(&self) -> Result<Self> {
        let Self::Masked {
            inner,
            mask,
            reference,
        } = self
        else {
            return Ok(self.clone());
        };
        let free: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        inner.restrict(&free, mask, reference)
    }

    fn restrict(&self, free: &[usize], mask: &[bool], reference: &[T]) -> Result<Self> {
        let pick = |v: &[T]| free.iter().map(|&i| v[i]).collect::<Vec<T>>();
        let empty = || {
            Error::InvalidArgument(
                "masked constraint is empty: reference violates the inner set".into(),
            )
        };
        Ok(match self {
            Self::L2Ball { center, radius } => {
                let pinned: T = (0..mask.len())
                    .filter(|&i| !mask[i])
                    .map(|i| (reference[i] - center[i]) * (reference[i] - center[i]))
                    .sum();
                let r2 = *radius * *radius - pinned;
                if r2 < T::zero() {
                    return Err(empty());
                }
                Self::L2Ball {
                    center: pick(center),
                    radius: r2.sqrt(),
                }
            }
            Self::LinfBall { center, radius } => {
                if (0..mask.len()).any(|i| !mask[i] && (reference[i] - center[i]).abs() > *radius) {
                    return Err(empty());
                }
                Self::LinfBall {
                    center: pick(center),
                    radius: *radius,
                }
            }
            Self::Box { lo, hi } => {
                if (0..mask.len())
                    .any(|i| !mask[i] && (reference[i] < lo[i] || reference[i] > hi[i]))
                {
                    return Err(empty());
                }
                Self::Box {
                    lo: pick(lo),
                    hi: pick(hi),
                }
            }
            Self::Masked {
                inner,
                mask: m2,
                reference: r2,
            } => {
                if (0..mask.len()).any(|i| !mask[i] && !m2[i] && reference[i] != r2[i]) {
                    return Err(empty());
                }
                Self::Masked {
                    inner: std::boxed::Box::new(inner.restrict(free, mask, reference)?),
                    mask: free.iter().map(|&i| m2[i]).collect(),
                    reference: pick(r2),
                }
            }
            Self::Intersection { parts } => Self::Intersection {
                parts: parts
                    .iter()
                    .map(|p| p.restrict(free, mask, reference))
                    .collect::<Result<_>>()?,
            },
        })
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "point of dimension {} against a {}-dimensional constraint",
                x.len(),
                self.dim()
            )))
        }
    }

    /// Euclidean projection of `x` onto the feasible set.
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        Ok(match self {
            Self::L2Ball { center, radius } => {
                let diff: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                let n = norm2(&diff);
                if n <= *radius {
                    x.to_vec()
                } else {
                    let s = *radius / n;
                    center.iter().zip(&diff).map(|(&c, &d)| c + s * d).collect()
                }
            }
            Self::LinfBall { center, radius } => x
                .iter()
                .zip(center)
                .map(|(&v, &c)| v.max(c - *radius).min(c + *radius))
                .collect(),
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| v.max(l).min(h))
                .collect(),
            Self::Masked {
                mask, reference, ..
            } => {
                let inner = self.restricted()?;
                let sub: Vec<T> = x
                    .iter()
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|(&v, _)| v)
                    .collect();
                let mut projected = inner.project(&sub)?.into_iter();
                mask.iter()
                    .zip(reference)
                    .map(|(&m, &r)| {
                        if m {
                            projected.next().expect("sized")
                        } else {
                            r
                        }
                    })
                    .collect()
            }
            Self::Intersection { parts } => dykstra(parts, x)?,
        })
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::L2Ball { center, radius } => {
                let diff: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                norm2(&diff) <= *radius + tol
            }
            Self::LinfBall { center, radius } => x
                .iter()
                .zip(center)
                .all(|(&v, &c)| (v - c).abs() <= *radius + tol),
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol),
            Self::Masked {
                inner,
                mask,
                reference,
            } => {
                x.iter()
                    .zip(mask)
                    .zip(reference)
                    .all(|((&v, &m), &r)| m || v == r)
                    && inner.contains(x, tol)
            }
            Self::Intersection { parts } => parts.iter().all(|p| p.contains(x, tol)),
        }
    }
}

/// Dykstra's alternating projections, finished with one sequential pass so
/// the last part is satisfied exactly.
fn dykstra<T: Scalar>(parts: &[Constraint<T>], x: &[T]) -> Result<Vec<T>> {
    // a projection onto one part that lands in all others is the answer
    for p in parts {
        let cand = p.project(x)?;
        if parts.iter().all(|q| q.contains(&cand, T::zero())) {
            return Ok(cand);
        }
    }
    let mut cur = x.to_vec();
    let mut incr = vec![vec![T::zero(); x.len()]; parts.len()];
    for _ in 0..DYKSTRA_MAX_ITER {
        let prev = cur.clone();
        for (p, inc) in parts.iter().zip(incr.iter_mut()) {
            let shifted: Vec<T> = cur.iter().zip(inc.iter()).map(|(&a, &b)| a + b).collect();
            let proj = p.project(&shifted)?;
            for ((i, &s), &q) in inc.iter_mut().zip(&shifted).zip(&proj) {
                *i = s - q;
            }
            cur = proj;
        }
        let moved = prev
            .iter()
            .zip(&cur)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        if moved <= T::epsilon() * T::lit(4.0) * (T::one() + crate::linalg::max_abs(&cur)) {
            break;
        }
    }
    for p in parts {
        cur = p.project(&cur)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_examples() {
        let c = Constraint::l2_ball(vec![0.0, 0.0], 5.0);
        assert_eq!(c.project(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        // scaled by 5/10 onto the boundary
        let p = c.project(&[6.0, 8.0]).unwrap();
        assert!(
            (p[0] - 3.0f64).abs() < 1e-12 && (p[1] - 4.0f64).abs() < 1e-12,
            "{p:?}"
        );
    }

    #[test]
    fn masked_box_example() {
        let c = Constraint::masked(
            Constraint::uniform_box(2, 0.0, 1.0),
            vec![true, false],
            vec![0.2, 0.9],
        );
        assert_eq!(c.project(&[1.7, 0.0]).unwrap(), vec![1.0, 0.9]);
        assert!(c.contains(&[1.0, 0.9], 0.0));
        assert!(!c.contains(&[1.0, 0.8], 0.0));
    }

    #[test]
    fn masked_ball_restricts_to_free_coordinates() {
        let c = Constraint::masked(
            Constraint::l2_ball(vec![0.0, 0.0, 0.0], 5.0),
            vec![true, false, true],
            vec![0.0, 3.0, 0.0],
        );
        // free sub-ball has radius 4
        let p = c.project(&[8.0, 0.0, 0.0]).unwrap();
        assert!((p[0] - 4.0f64).abs() < 1e-12);
        assert_eq!(p[1], 3.0);
        let bad = Constraint::masked(
            Constraint::l2_ball(vec![0.0, 0.0], 1.0),
            vec![true, false],
            vec![0.0, 3.0],
        );
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_radius_projects_to_center() {
        let c = Constraint::l2_ball(vec![1.0, 2.0], 0.0);
        assert_eq!(c.project(&[5.0, -1.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let c = Constraint::uniform_box(3, 0.0, 1.0);
        assert!(matches!(c.project(&[0.5]), Err(Error::Shape(_))));
    }

    #[test]
    fn ball_box_intersection_is_feasible() {
        let c = Constraint::Intersection {
            parts: vec![
                Constraint::l2_ball(vec![0.5, 0.5], 0.4),
                Constraint::uniform_box(2, 0.0, 0.6),
            ],
        };
        let p = c.project(&[2.0, -1.0]).unwrap();
        assert!(c.contains(&p, 1e-12));
    }

    #[test]
    fn validation() {
        assert!(Constraint::l2_ball(vec![0.0], -1.0).validate().is_err());
        assert!(Constraint::bounds(vec![1.0], vec![0.0]).validate().is_err());
        assert!(Constraint::<f64>::Intersection { parts: vec![] }
            .validate()
            .is_err());
    }
}
