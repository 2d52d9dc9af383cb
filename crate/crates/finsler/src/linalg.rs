//! Dense linear algebra for the tiny systems this crate meets (n <= 3, plus
//! jet-valued variants of the same).
//!
//! The one non-obvious requirement is solving `g y = b` where the entries of
//! `g` are jets: inverting the fundamental tensor as a truncated Taylor
//! expansion is what turns a degree-4 jet of the squared metric into a
//! degree-2 jet of the spray.  A jet matrix is invertible in truncated
//! arithmetic exactly when its matrix of constant terms is invertible, so
//! partial pivoting keys on the constant-term magnitude.

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::Real;

/// The operations Gaussian elimination needs, implemented by plain scalars
/// and by jets.
pub trait SolveEntry: Clone {
    fn entry_sub(&self, other: &Self) -> Self;
    fn entry_mul(&self, other: &Self) -> Self;
    fn entry_div(&self, other: &Self) -> Result<Self>;
    /// Magnitude used for pivot selection (constant term for jets).
    fn pivot_magnitude(&self) -> f64;
}

impl<S: Real> SolveEntry for S {
    fn entry_sub(&self, other: &Self) -> Self {
        *self - *other
    }
    fn entry_mul(&self, other: &Self) -> Self {
        *self * *other
    }
    fn entry_div(&self, other: &Self) -> Result<Self> {
        if *other == S::zero() {
            return Err(FinslerError::SingularMatrix { pivot: 0.0 });
        }
        Ok(*self / *other)
    }
    fn pivot_magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::NAN)
    }
}

impl<S: Real> SolveEntry for Jet<S> {
    fn entry_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn entry_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn entry_div(&self, other: &Self) -> Result<Self> {
        self.try_div(other)
    }
    fn pivot_magnitude(&self) -> f64 {
        self.value().abs().to_f64().unwrap_or(f64::NAN)
    }
}

/// Solves `A X = B` in place by Gaussian elimination with partial pivoting.
///
/// `a` is `n x n` row major, `b` is `n x m` row major; the solution replaces
/// `b`.  Reports a singular matrix when the best available pivot is
/// negligible relative to the initial scale.
pub fn solve_in_place<T: SolveEntry>(a: &mut [T], b: &mut [T], n: usize, m: usize) -> Result<()> {
    assert_eq!(a.len(), n * n, "coefficient matrix shape");
    assert_eq!(b.len(), n * m, "right-hand side shape");
    let scale = a
        .iter()
        .map(|e| e.pivot_magnitude())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r * n + col].pivot_magnitude()))
            .fold((col, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best });
        if pivot_mag.is_nan() || pivot_mag <= scale * 1e-14 {
            return Err(FinslerError::SingularMatrix { pivot: pivot_mag });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, pivot_row * m + k);
            }
        }
        for row in (col + 1)..n {
            let factor = a[row * n + col].entry_div(&a[col * n + col])?;
            for k in col..n {
                let delta = factor.entry_mul(&a[col * n + k]);
                a[row * n + k] = a[row * n + k].entry_sub(&delta);
            }
            for k in 0..m {
                let delta = factor.entry_mul(&b[col * m + k]);
                b[row * m + k] = b[row * m + k].entry_sub(&delta);
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..m {
            let mut acc = b[col * m + k].clone();
            for j in (col + 1)..n {
                let delta = a[col * n + j].entry_mul(&b[j * m + k]);
                acc = acc.entry_sub(&delta);
            }
            b[col * m + k] = acc.entry_div(&a[col * n + col])?;
        }
    }
    Ok(())
}

/// Convenience wrapper: solves `A x = b` for a single right-hand side.
pub fn solve<T: SolveEntry>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let mut a = a.to_vec();
    let mut x = b.to_vec();
    solve_in_place(&mut a, &mut x, n, 1)?;
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// ascending.  Plenty for the convexity checks and curvature spectra here.
pub fn symmetric_eigenvalues<S: Real>(matrix: &[S], n: usize) -> Vec<S> {
    assert_eq!(matrix.len(), n * n, "matrix shape");
    let mut a = matrix.to_vec();
    let idx = |r: usize, c: usize| r * n + c;
    for _sweep in 0..64 {
        let mut off = S::zero();
        for r in 0..n {
            for c in (r + 1)..n {
                off = off + a[idx(r, c)] * a[idx(r, c)];
            }
        }
        let norm = (0..n * n).fold(S::zero(), |acc, k| acc + a[k] * a[k]);
        if off <= norm * S::real(1e-30) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == S::zero() {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (S::real(2.0) * apq);
                // Stable tangent of the rotation angle.
                let t = {
                    let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = (t * t + S::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<S> = (0..n).map(|k| a[idx(k, k)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalue comparison"));
    eig
}

/// Symmetric bilinear form `u^T M w` for a row-major `n x n` matrix.
pub fn bilinear<S: Real>(matrix: &[S], u: &[S], w: &[S]) -> S {
    let n = u.len();
    assert_eq!(matrix.len(), n * n, "matrix shape");
    assert_eq!(w.len(), n, "vector length");
    let mut acc = S::zero();
    for r in 0..n {
        for c in 0..n {
            acc = acc + u[r] * matrix[r * n + c] * w[c];
        }
    }
    acc
}

/// Matrix-vector product for a row-major `n x n` matrix.
pub fn mat_vec<S: Real>(matrix: &[S], v: &[S]) -> Vec<S> {
    let n = v.len();
    assert_eq!(matrix.len(), n * n, "matrix shape");
    (0..n)
        .map(|r| (0..n).fold(S::zero(), |acc, c| acc + matrix[r * n + c] * v[c]))
        .collect()
}
