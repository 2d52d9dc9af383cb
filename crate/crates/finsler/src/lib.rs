//! Numerical Finsler geometry with exact derivative propagation.
//!
//! The crate revolves around one idea: every differential-geometric object a
//! Finsler metric induces (fundamental tensor, geodesic spray, Berwald
//! connection, curvature operator) is a finite stack of partial derivatives
//! of the squared metric `F^2`, and truncated Taylor arithmetic delivers
//! those derivatives exactly.  On top of that sit fixed-step integrators for
//! geodesics, Jacobi fields and parallel frames, wind-field flows with their
//! pushforwards, and the Zermelo construction that deforms a metric by a
//! wind while preserving unit speed.
//!
//! Everything numeric is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the `*64` aliases below cover the
//! common case.

pub mod error;
pub mod curvature;
pub mod fd;
pub mod flow;
pub mod geodesic;
pub mod jacobi;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod oracles;
pub mod spray;
pub mod symmetry;
pub mod transport;
pub mod wind;
pub mod zermelo;

pub use error::{FinslerError, Result};

/// Scalar types the engine can run on.
///
/// `real` converts an `f64` constant (tolerances, stencil weights) into the
/// working scalar; the conversion is lossy for `f32` exactly as expected.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in this scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Double-precision aliases for the main vocabulary types.
pub type Jet64 = jet::Jet<f64>;
pub type MetricDescriptor64 = metric::MetricDescriptor<f64>;
pub type PointedVector64 = metric::PointedVector<f64>;
pub type FundamentalTensor64 = metric::FundamentalTensor<f64>;
pub type WindField64 = wind::WindField<f64>;
pub type GeodesicTrajectory64 = geodesic::GeodesicTrajectory<f64>;
