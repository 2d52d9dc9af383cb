//! Vector fields used as "wind" in metric deformations, together with the
//! closed-form flows the bundled scenarios rely on.
//!
//! Three shapes cover the scenario set: constant translation fields, rigid
//! rotations of the first two coordinates, and the same rotation generator
//! read as an isometry of the stereographic sphere chart (rotating the
//! sphere about the axis through the projection poles acts on the chart as
//! an ordinary rotation about the origin).  A custom variant takes any
//! jet-evaluable closure; it has no closed-form flow and is integrated
//! instead.

use std::sync::Arc;

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::Real;

type WindEval<S> = Arc<dyn Fn(&[Jet<S>]) -> Result<Vec<Jet<S>>> + Send + Sync>;

#[derive(Clone)]
enum WindKind<S: Real> {
    Constant(Vec<S>),
    /// `v(x) = omega * (-x_2, x_1, 0, ...)`, the Euclidean rotation field.
    PlanarRotation { omega: S },
    /// Same formula as [`WindKind::PlanarRotation`], tagged separately
    /// because its natural habitat is the stereographic sphere chart, where
    /// `F(x, -v)` peaks at `omega` on the unit circle instead of growing
    /// without bound.
    StereographicRotation { omega: S },
    Custom { eval: WindEval<S> },
}

/// A tangent vector field `x -> v(x)`, evaluable on jets so the engine can
/// differentiate through it.
#[derive(Clone)]
pub struct WindField<S: Real> {
    dim: usize,
    kind: WindKind<S>,
}

impl<S: Real> WindField<S> {
    /// Constant field `v(x) = components`.
    pub fn constant(components: Vec<S>) -> WindField<S> {
        WindField {
            dim: components.len(),
            kind: WindKind::Constant(components),
        }
    }

    /// Rotation of the first two coordinates with angular speed `omega`.
    pub fn planar_rotation(dim: usize, omega: S) -> WindField<S> {
        assert!(dim >= 2, "a rotation field needs at least two coordinates");
        WindField {
            dim,
            kind: WindKind::PlanarRotation { omega },
        }
    }

    /// The rotation generator of the stereographic sphere chart.
    pub fn stereographic_rotation(dim: usize, omega: S) -> WindField<S> {
        assert!(dim >= 2, "a rotation field needs at least two coordinates");
        WindField {
            dim,
            kind: WindKind::StereographicRotation { omega },
        }
    }

    /// Arbitrary jet-evaluable field.  The closure must return `dim` jets of
    /// the same shape as its inputs.
    pub fn custom(
        dim: usize,
        eval: impl Fn(&[Jet<S>]) -> Result<Vec<Jet<S>>> + Send + Sync + 'static,
    ) -> WindField<S> {
        WindField {
            dim,
            kind: WindKind::Custom {
                eval: Arc::new(eval),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates the field on jet coordinates.
    pub fn eval_jets(&self, x: &[Jet<S>]) -> Result<Vec<Jet<S>>> {
        if x.len() != self.dim {
            return Err(FinslerError::invalid(format!(
                "wind field of dimension {} evaluated at a {}-dimensional point",
                self.dim,
                x.len()
            )));
        }
        match &self.kind {
            WindKind::Constant(v) => Ok(v.iter().map(|&c| x[0].same_shape(c)).collect()),
            WindKind::PlanarRotation { omega } | WindKind::StereographicRotation { omega } => {
                let mut out = Vec::with_capacity(self.dim);
                out.push((-&x[1]).scale(*omega));
                out.push(x[0].scale(*omega));
                for component in &x[2..] {
                    out.push(component.same_shape(S::zero()));
                }
                Ok(out)
            }
            WindKind::Custom { eval } => {
                let out = eval(x)?;
                if out.len() != self.dim {
                    return Err(FinslerError::invalid(
                        "custom wind returned the wrong number of components",
                    ));
                }
                Ok(out)
            }
        }
    }

    /// Evaluates the field at a plain point.
    pub fn eval(&self, x: &[S]) -> Result<Vec<S>> {
        let jets: Vec<Jet<S>> = x.iter().map(|&c| Jet::constant(x.len(), 0, c)).collect();
        Ok(self.eval_jets(&jets)?.into_iter().map(|j| j.value()).collect())
    }

    /// Whether [`WindField::closed_flow`] is available.
    pub fn has_closed_form_flow(&self) -> bool {
        !matches!(self.kind, WindKind::Custom { .. })
    }

    /// Time-`t` flow map, when a closed form exists.
    pub fn closed_flow(&self, x: &[S], t: S) -> Result<Vec<S>> {
        match &self.kind {
            WindKind::Constant(v) => Ok(x
                .iter()
                .zip(v)
                .map(|(&p, &c)| p + t * c)
                .collect()),
            WindKind::PlanarRotation { omega } | WindKind::StereographicRotation { omega } => {
                Ok(rotate_first_pair(x, *omega * t))
            }
            WindKind::Custom { .. } => Err(FinslerError::NoClosedFormFlow),
        }
    }

    /// Differential of the time-`t` flow applied to `xi`, when a closed form
    /// exists.  Translations have the identity differential; rotations act on
    /// vectors exactly as they act on points.
    pub fn closed_pushforward(&self, _x: &[S], t: S, xi: &[S]) -> Result<Vec<S>> {
        match &self.kind {
            WindKind::Constant(_) => Ok(xi.to_vec()),
            WindKind::PlanarRotation { omega } | WindKind::StereographicRotation { omega } => {
                Ok(rotate_first_pair(xi, *omega * t))
            }
            WindKind::Custom { .. } => Err(FinslerError::NoClosedFormFlow),
        }
    }
}

fn rotate_first_pair<S: Real>(v: &[S], angle: S) -> Vec<S> {
    let (s, c) = (angle.sin(), angle.cos());
    let mut out = v.to_vec();
    out[0] = c * v[0] - s * v[1];
    out[1] = s * v[0] + c * v[1];
    out
}
