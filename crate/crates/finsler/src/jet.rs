//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function at a point,
//! up to a fixed total degree, in a fixed number of variables.  Propagating
//! jets through arithmetic gives every partial derivative up to that degree
//! exactly (up to floating-point rounding), with none of the step-size
//! trade-offs of finite differencing.  This is the backbone of the whole
//! crate: fundamental tensors need degree 2, geodesic sprays degree 2, and
//! curvature operators degree 4 of the squared metric.
//!
//! Storage is dense over all multi-indices of total degree `<= order`,
//! enumerated in graded lexicographic order.  For the sizes this crate uses
//! (order up to 4 in up to 6 variables, 210 coefficients) dense storage wins
//! over anything sparse, and the multiplication pair table is precomputed
//! once per `(num_vars, order)` shape and shared behind an `Arc`.
//!
//! The usual composition trick handles analytic primitives: for `f(a)` with
//! `a = a0 + e` (where `e` has no constant term), Horner-evaluate the
//! univariate Taylor series of `f` at `a0` in the nilpotent part `e`.  Square
//! root, reciprocal, log and real powers therefore demand a valid constant
//! term and report a domain error otherwise.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{FinslerError, Result};
use crate::Real;

/// Hard cap on the number of independent variables (point + direction in
/// dimension 3 needs 6; a little headroom costs nothing).
pub const MAX_VARS: usize = 8;

/// Hard cap on the truncation order.  Nothing in the engine consumes
/// derivatives beyond total degree 4.
pub const MAX_ORDER: usize = 4;

type Exponents = [u8; MAX_VARS];

/// Enumeration tables for one `(num_vars, order)` shape: the multi-index
/// list, the position lookup, and the flattened multiplication table.
struct IndexTable {
    num_vars: usize,
    order: usize,
    exps: Vec<Exponents>,
    position: HashMap<Exponents, u32>,
    /// Triples `(i, j, k)` with `exps[i] + exps[j] = exps[k]`, covering every
    /// ordered pair whose degrees sum to at most `order`.
    prod: Vec<(u32, u32, u32)>,
}

impl IndexTable {
    fn build(num_vars: usize, order: usize) -> IndexTable {
        let mut exps: Vec<Exponents> = Vec::new();
        let mut stack = [0u8; MAX_VARS];
        enumerate(num_vars, 0, order, &mut stack, &mut exps);
        // Graded lexicographic: sort by total degree first, then lex.
        exps.sort_by_key(|e| {
            let deg: u8 = e[..num_vars].iter().sum();
            (deg, *e)
        });
        let degree: Vec<u8> = exps.iter().map(|e| e[..num_vars].iter().sum()).collect();
        let position: HashMap<Exponents, u32> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i as u32))
            .collect();
        let mut prod = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if (degree[i] + degree[j]) as usize > order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for v in 0..num_vars {
                    sum[v] = ei[v] + ej[v];
                }
                let k = position[&sum];
                prod.push((i as u32, j as u32, k));
            }
        }
        IndexTable {
            num_vars,
            order,
            exps,
            position,
            prod,
        }
    }

    fn len(&self) -> usize {
        self.exps.len()
    }

    fn index_of(&self, alpha: &[usize]) -> Option<u32> {
        if alpha.len() != self.num_vars {
            return None;
        }
        let mut key = [0u8; MAX_VARS];
        for (v, &a) in alpha.iter().enumerate() {
            if a > self.order {
                return None;
            }
            key[v] = a as u8;
        }
        self.position.get(&key).copied()
    }
}

fn enumerate(
    num_vars: usize,
    var: usize,
    remaining: usize,
    stack: &mut Exponents,
    out: &mut Vec<Exponents>,
) {
    if var == num_vars {
        out.push(*stack);
        return;
    }
    for e in 0..=remaining {
        stack[var] = e as u8;
        enumerate(num_vars, var + 1, remaining - e, stack, out);
    }
    stack[var] = 0;
}

type TableCache = Mutex<HashMap<(usize, usize), Arc<IndexTable>>>;

fn table(num_vars: usize, order: usize) -> Arc<IndexTable> {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet table cache poisoned");
    guard
        .entry((num_vars, order))
        .or_insert_with(|| Arc::new(IndexTable::build(num_vars, order)))
        .clone()
}

fn check_shape(num_vars: usize, order: usize) {
    assert!(
        (1..=MAX_VARS).contains(&num_vars),
        "jet variable count {num_vars} outside 1..={MAX_VARS}"
    );
    assert!(
        order <= MAX_ORDER,
        "jet order {order} exceeds supported maximum {MAX_ORDER}"
    );
}

/// Truncated Taylor expansion of a scalar function at a point.
///
/// `coeffs[k]` is the Taylor coefficient (derivative divided by the
/// multi-index factorial) for the `k`-th multi-index of the shape's graded
/// enumeration.  Two jets interoperate only if they share `num_vars` and
/// `order`; mixing shapes is a programming error and panics.
#[derive(Clone)]
pub struct Jet<S> {
    table: Arc<IndexTable>,
    coeffs: Vec<S>,
}

impl<S: Real> Jet<S> {
    /// Jet of the constant function `value`.
    pub fn constant(num_vars: usize, order: usize, value: S) -> Jet<S> {
        check_shape(num_vars, order);
        let table = table(num_vars, order);
        let mut coeffs = vec![S::zero(); table.len()];
        coeffs[0] = value;
        Jet { table, coeffs }
    }

    /// Jet of the coordinate function `x_index`, seeded at `value`.
    pub fn variable(num_vars: usize, order: usize, index: usize, value: S) -> Jet<S> {
        check_shape(num_vars, order);
        assert!(index < num_vars, "variable index {index} out of range");
        let table = table(num_vars, order);
        let mut coeffs = vec![S::zero(); table.len()];
        coeffs[0] = value;
        if order >= 1 {
            let mut alpha = [0u8; MAX_VARS];
            alpha[index] = 1;
            coeffs[table.position[&alpha] as usize] = S::one();
        }
        Jet { table, coeffs }
    }

    /// Seeds one variable per component of `point`.
    pub fn variables(point: &[S], order: usize) -> Vec<Jet<S>> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &p)| Jet::variable(n, order, i, p))
            .collect()
    }

    /// A constant jet with the same shape as `self`.
    pub fn same_shape(&self, value: S) -> Jet<S> {
        let mut coeffs = vec![S::zero(); self.table.len()];
        coeffs[0] = value;
        Jet {
            table: self.table.clone(),
            coeffs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.table.num_vars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> S {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient for a multi-index (zero if out of range).
    pub fn coefficient(&self, alpha: &[usize]) -> S {
        match self.table.index_of(alpha) {
            Some(k) => self.coeffs[k as usize],
            None => S::zero(),
        }
    }

    /// Partial derivative `∂^alpha` at the expansion point: the Taylor
    /// coefficient times the multi-index factorial.
    pub fn partial(&self, alpha: &[usize]) -> S {
        let mut fact = 1.0f64;
        for &a in alpha {
            for k in 2..=a {
                fact *= k as f64;
            }
        }
        self.coefficient(alpha) * S::real(fact)
    }

    /// The jet of `∂^alpha self`, as a jet of order `order - |alpha|`.
    ///
    /// Panics if `|alpha|` exceeds the order; the extraction is exact because
    /// the higher coefficients of the source already encode the expansion of
    /// the derivative.
    pub fn derivative(&self, alpha: &[usize]) -> Jet<S> {
        assert_eq!(alpha.len(), self.num_vars(), "derivative multi-index arity");
        let total: usize = alpha.iter().sum();
        assert!(total <= self.order(), "derivative order exceeds jet order");
        let new_order = self.order() - total;
        let out_table = table(self.num_vars(), new_order);
        let mut coeffs = vec![S::zero(); out_table.len()];
        for (k, exp) in out_table.exps.iter().enumerate() {
            let mut src = [0u8; MAX_VARS];
            let mut scale = 1.0f64;
            for v in 0..self.num_vars() {
                src[v] = exp[v] + alpha[v] as u8;
                // Falling factorial (gamma+alpha)! / gamma!
                for step in 0..alpha[v] {
                    scale *= (exp[v] as usize + alpha[v] - step) as f64;
                }
            }
            let idx = self.table.position[&src] as usize;
            coeffs[k] = self.coeffs[idx] * S::real(scale);
        }
        Jet {
            table: out_table,
            coeffs,
        }
    }

    /// Copy truncated to a lower order.
    pub fn truncated(&self, order: usize) -> Jet<S> {
        assert!(order <= self.order(), "cannot truncate upward");
        let out_table = table(self.num_vars(), order);
        let mut coeffs = vec![S::zero(); out_table.len()];
        for (k, exp) in out_table.exps.iter().enumerate() {
            coeffs[k] = self.coeffs[self.table.position[exp] as usize];
        }
        Jet {
            table: out_table,
            coeffs,
        }
    }

    /// All coefficients in the shape's enumeration order.
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Largest absolute coefficient, used for scale-aware tolerances.
    pub fn max_abs_coeff(&self) -> S {
        self.coeffs
            .iter()
            .fold(S::zero(), |acc, c| acc.max(c.abs()))
    }

    fn assert_same_shape(&self, other: &Jet<S>) {
        assert!(
            Arc::ptr_eq(&self.table, &other.table)
                || (self.num_vars() == other.num_vars() && self.order() == other.order()),
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.num_vars(),
            self.order(),
            other.num_vars(),
            other.order()
        );
    }

    /// Multiply by a plain scalar.
    pub fn scale(&self, s: S) -> Jet<S> {
        Jet {
            table: self.table.clone(),
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Add a plain scalar to the constant term.
    pub fn add_scalar(&self, s: S) -> Jet<S> {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + s;
        out
    }

    /// Horner evaluation of a univariate Taylor series in the nilpotent part.
    ///
    /// `series[k]` must be `f^(k)(a0) / k!` where `a0` is this jet's value.
    /// The result is the jet of `f ∘ self`, exact through the truncation
    /// order whenever `series` has `order + 1` entries.
    pub fn compose_univariate(&self, series: &[S]) -> Jet<S> {
        assert!(
            series.len() > self.order(),
            "composition series too short"
        );
        let mut delta = self.clone();
        delta.coeffs[0] = S::zero();
        let mut acc = self.same_shape(series[self.order()]);
        for k in (0..self.order()).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] = acc.coeffs[0] + series[k];
        }
        acc
    }

    /// Reciprocal; domain error when the constant term vanishes.
    pub fn recip(&self) -> Result<Jet<S>> {
        let a0 = self.value();
        if a0 == S::zero() {
            return Err(FinslerError::domain("reciprocal of a zero constant term"));
        }
        let mut series = vec![S::zero(); self.order() + 1];
        // c_k = (-1)^k / a0^{k+1}
        let mut c = a0.recip();
        for slot in series.iter_mut() {
            *slot = c;
            c = -c / a0;
        }
        Ok(self.compose_univariate(&series))
    }

    /// Checked division.
    pub fn try_div(&self, rhs: &Jet<S>) -> Result<Jet<S>> {
        self.assert_same_shape(rhs);
        Ok(self * &rhs.recip()?)
    }

    /// Square root; domain error for a non-positive constant term.
    pub fn sqrt(&self) -> Result<Jet<S>> {
        let a0 = self.value();
        if a0 <= S::zero() {
            return Err(FinslerError::domain(format!(
                "sqrt of non-positive constant term {:?}",
                a0.to_f64()
            )));
        }
        let r0 = a0.sqrt();
        let mut series = vec![S::zero(); self.order() + 1];
        // Binomial series: c_k = C(1/2, k) a0^{1/2 - k}.
        let mut c = r0;
        let mut p = S::real(0.5);
        for (k, slot) in series.iter_mut().enumerate() {
            *slot = c;
            c = c * p / (a0 * S::real((k + 1) as f64));
            p = p - S::one();
        }
        Ok(self.compose_univariate(&series))
    }

    /// Natural logarithm; domain error for a non-positive constant term.
    pub fn ln(&self) -> Result<Jet<S>> {
        let a0 = self.value();
        if a0 <= S::zero() {
            return Err(FinslerError::domain("log of a non-positive constant term"));
        }
        let mut series = vec![S::zero(); self.order() + 1];
        series[0] = a0.ln();
        let mut c = a0.recip();
        for (k, slot) in series.iter_mut().enumerate().skip(1) {
            *slot = c / S::real(k as f64);
            c = -c / a0;
        }
        Ok(self.compose_univariate(&series))
    }

    /// Exponential.
    pub fn exp(&self) -> Jet<S> {
        let e0 = self.value().exp();
        let mut series = vec![S::zero(); self.order() + 1];
        // c_k = e0 / k!
        let mut fact = 1.0f64;
        for (k, slot) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = e0 / S::real(fact);
        }
        self.compose_univariate(&series)
    }

    /// Sine.
    pub fn sin(&self) -> Jet<S> {
        let (s0, c0) = (self.value().sin(), self.value().cos());
        self.compose_univariate(&trig_series(s0, c0, self.order()))
    }

    /// Cosine.
    pub fn cos(&self) -> Jet<S> {
        let (s0, c0) = (self.value().cos(), -self.value().sin());
        self.compose_univariate(&trig_series(s0, c0, self.order()))
    }

    /// Integer power by repeated multiplication (exact for any constant term).
    pub fn powi(&self, n: u32) -> Jet<S> {
        let mut acc = self.same_shape(S::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Real power via the binomial series; domain error unless the constant
    /// term is strictly positive.
    pub fn powf(&self, p: S) -> Result<Jet<S>> {
        let a0 = self.value();
        if a0 <= S::zero() {
            return Err(FinslerError::domain(
                "real power of a non-positive constant term",
            ));
        }
        let mut series = vec![S::zero(); self.order() + 1];
        let mut c = a0.powf(p);
        let mut expo = p;
        for (k, slot) in series.iter_mut().enumerate() {
            *slot = c;
            c = c * expo / (a0 * S::real((k + 1) as f64));
            expo = expo - S::one();
        }
        Ok(self.compose_univariate(&series))
    }
}

/// Series for sin-like functions: value `f0`, first derivative `d0`, then the
/// cyclic pattern `-f, -d, f, d, ...`, divided by factorials.
fn trig_series<S: Real>(f0: S, d0: S, order: usize) -> Vec<S> {
    let cycle = [f0, d0, -f0, -d0];
    let mut series = vec![S::zero(); order + 1];
    let mut fact = 1.0f64;
    for (k, slot) in series.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        *slot = cycle[k % 4] / S::real(fact);
    }
    series
}

impl<S: Real> Neg for &Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        Jet {
            table: self.table.clone(),
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

impl<S: Real> Add for &Jet<S> {
    type Output = Jet<S>;
    fn add(self, rhs: &Jet<S>) -> Jet<S> {
        self.assert_same_shape(rhs);
        Jet {
            table: self.table.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<S: Real> Sub for &Jet<S> {
    type Output = Jet<S>;
    fn sub(self, rhs: &Jet<S>) -> Jet<S> {
        self.assert_same_shape(rhs);
        Jet {
            table: self.table.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<S: Real> Mul for &Jet<S> {
    type Output = Jet<S>;
    fn mul(self, rhs: &Jet<S>) -> Jet<S> {
        self.assert_same_shape(rhs);
        let mut coeffs = vec![S::zero(); self.table.len()];
        for &(i, j, k) in &self.table.prod {
            let a = self.coeffs[i as usize];
            if a == S::zero() {
                continue;
            }
            let b = rhs.coeffs[j as usize];
            coeffs[k as usize] = coeffs[k as usize] + a * b;
        }
        Jet {
            table: self.table.clone(),
            coeffs,
        }
    }
}

impl<S: Real> Div for &Jet<S> {
    type Output = Jet<S>;
    /// Panicking division for contexts where the denominator is structurally
    /// nonzero; use [`Jet::try_div`] when the error must propagate.
    fn div(self, rhs: &Jet<S>) -> Jet<S> {
        self.try_div(rhs).expect("jet division by zero constant term")
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl<S: Real> $trait for Jet<S> {
            type Output = Jet<S>;
            fn $method(self, rhs: Jet<S>) -> Jet<S> {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl<S: Real> Neg for Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        -(&self)
    }
}

impl<S: Real> std::fmt::Debug for Jet<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.num_vars())
            .field("order", &self.order())
            .field("value", &self.value())
            .finish()
    }
}

/// Expands `f` around `point` to the requested order by seeding one jet
/// variable per coordinate.
///
/// `order` must be at most [`MAX_ORDER`]; everything the engine consumes
/// stays within that bound.
pub fn eval_jet<S: Real>(
    f: impl Fn(&[Jet<S>]) -> Result<Jet<S>>,
    point: &[S],
    order: usize,
) -> Result<Jet<S>> {
    if point.is_empty() || point.len() > MAX_VARS {
        return Err(FinslerError::invalid(format!(
            "eval_jet needs between 1 and {MAX_VARS} variables, got {}",
            point.len()
        )));
    }
    if order > MAX_ORDER {
        return Err(FinslerError::invalid(format!(
            "eval_jet order {order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    let vars = Jet::variables(point, order);
    let out = f(&vars)?;
    if out.num_vars() != point.len() || out.order() != order {
        return Err(FinslerError::invalid(
            "evaluator returned a jet of unexpected shape",
        ));
    }
    Ok(out)
}
