//! Truncated multivariate Taylor arithmetic in four variables.
//!
//! A [`Jet`] of order `N` stores the Taylor coefficients of a scalar function
//! at a base point for every monomial of total degree `≤ N`. Coefficients are
//! kept densely in graded-lexicographic order, so the coefficients of a
//! lower-order truncation are always a prefix of the full vector.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Number of chart coordinates.
pub const NVARS: usize = 4;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet order {0} out of range 0..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("axis {0} out of range 0..4")]
    AxisOutOfRange(usize),
    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("division by a jet with zero constant term")]
    DivisionByZero,
    #[error("{func} is undefined at constant term {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("derivative of degree {degree} requested from a jet of order {order}")]
    DegreeExceedsOrder { degree: usize, order: usize },
}

/// Exponents of a monomial `∏ (x_i - p_i)^{α_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub [u8; NVARS]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; NVARS]);

    pub fn new(exponents: [u8; NVARS]) -> Self {
        MultiIndex(exponents)
    }

    /// Unit multi-index along `axis`.
    pub fn unit(axis: usize) -> Self {
        let mut e = [0u8; NVARS];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α! = ∏ α_i!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u32).product::<u32>() as f64)
            .product()
    }

    fn plus(&self, other: &MultiIndex) -> MultiIndex {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        MultiIndex(e)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.0;
        write!(f, "({},{},{},{})", e[0], e[1], e[2], e[3])
    }
}

struct Tables {
    monomials: Vec<MultiIndex>,
    lookup: Vec<u16>,
    /// `len[n]` = number of monomials of degree ≤ n.
    len: [usize; MAX_ORDER + 1],
    /// Cauchy-product triples `(i, j, k)` with `m_i + m_j = m_k`, one list per order.
    mul: Vec<Vec<(u16, u16, u16)>>,
    /// For each axis: `(target, source, factor)` with `∂_axis` sending coefficient
    /// `source` to `target` multiplied by `factor`.
    diff: Vec<Vec<(u16, u16, f64)>>,
}

const SIDE: usize = MAX_ORDER + 1;

fn lookup_slot(m: &MultiIndex) -> usize {
    let e = m.0;
    ((e[0] as usize * SIDE + e[1] as usize) * SIDE + e[2] as usize) * SIDE + e[3] as usize
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut monomials = Vec::new();
        let mut len = [0usize; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            // graded lexicographic: within a degree, larger leading exponents first
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    for c in (0..=deg - a - b).rev() {
                        let d = deg - a - b - c;
                        monomials.push(MultiIndex([a as u8, b as u8, c as u8, d as u8]));
                    }
                }
            }
            len[deg] = monomials.len();
        }
        let mut lookup = vec![u16::MAX; SIDE.pow(4)];
        for (i, m) in monomials.iter().enumerate() {
            lookup[lookup_slot(m)] = i as u16;
        }
        let mut mul = Vec::with_capacity(MAX_ORDER + 1);
        for n in 0..=MAX_ORDER {
            let mut triples = Vec::new();
            for i in 0..len[n] {
                for j in 0..len[n] {
                    let mi = monomials[i];
                    let mj = monomials[j];
                    if mi.degree() + mj.degree() <= n {
                        let k = lookup[lookup_slot(&mi.plus(&mj))];
                        triples.push((i as u16, j as u16, k));
                    }
                }
            }
            mul.push(triples);
        }
        let mut diff = Vec::with_capacity(NVARS);
        for axis in 0..NVARS {
            let mut entries = Vec::new();
            for (k, m) in monomials.iter().enumerate().take(len[MAX_ORDER - 1]) {
                let src = m.plus(&MultiIndex::unit(axis));
                let s = lookup[lookup_slot(&src)];
                entries.push((k as u16, s, (m.0[axis] + 1) as f64));
            }
            diff.push(entries);
        }
        Tables {
            monomials,
            lookup,
            len,
            mul,
            diff,
        }
    })
}

/// Number of coefficients of a jet of order `n`, `C(n+4, 4)`.
pub fn coeff_count(order: usize) -> usize {
    tables().len[order]
}

/// Position of a multi-index in the dense coefficient vector.
pub fn index_of(m: &MultiIndex) -> Option<usize> {
    if m.degree() > MAX_ORDER {
        return None;
    }
    let i = tables().lookup[lookup_slot(m)];
    (i != u16::MAX).then_some(i as usize)
}

/// Multi-index stored at position `i`.
pub fn monomial(i: usize) -> MultiIndex {
    tables().monomials[i]
}

fn check_order(order: usize) -> Result<(), JetError> {
    if order > MAX_ORDER {
        Err(JetError::OrderOutOfRange(order))
    } else {
        Ok(())
    }
}

/// Binary operations exposed through [`Jet::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Scalar functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetFn {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Pow(f64),
}

impl JetFn {
    pub fn name(&self) -> &'static str {
        match self {
            JetFn::Sqrt => "sqrt",
            JetFn::Exp => "exp",
            JetFn::Log => "log",
            JetFn::Sin => "sin",
            JetFn::Cos => "cos",
            JetFn::Sinh => "sinh",
            JetFn::Cosh => "cosh",
            JetFn::Tanh => "tanh",
            JetFn::Atan => "atan",
            JetFn::Pow(_) => "pow",
        }
    }

    /// Plain real evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            JetFn::Sqrt => x.sqrt(),
            JetFn::Exp => x.exp(),
            JetFn::Log => x.ln(),
            JetFn::Sin => x.sin(),
            JetFn::Cos => x.cos(),
            JetFn::Sinh => x.sinh(),
            JetFn::Cosh => x.cosh(),
            JetFn::Tanh => x.tanh(),
            JetFn::Atan => x.atan(),
            JetFn::Pow(r) => x.powf(r),
        }
    }

    /// Univariate Taylor coefficients `f^{(k)}(x0) / k!` for `k = 0..=n`.
    fn series(&self, x0: f64, n: usize) -> Result<Vec<f64>, JetError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(JetError::Domain {
                    func: self.name(),
                    value: x0,
                })
            }
        };
        let mut c = vec![0.0; n + 1];
        let mut fact = 1.0;
        match *self {
            JetFn::Exp => {
                let e = x0.exp();
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = e / fact;
                }
            }
            JetFn::Log => {
                domain(x0 > 0.0)?;
                c[0] = x0.ln();
                for (k, ck) in c.iter_mut().enumerate().skip(1) {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    *ck = sign / (k as f64 * x0.powi(k as i32));
                }
            }
            JetFn::Sqrt | JetFn::Pow(_) => {
                let r = if let JetFn::Pow(r) = *self { r } else { 0.5 };
                domain(x0 > 0.0)?;
                let mut binom = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        binom *= (r - (k as f64 - 1.0)) / k as f64;
                    }
                    *ck = binom * x0.powf(r - k as f64);
                }
            }
            JetFn::Sin | JetFn::Cos => {
                let (s, co) = x0.sin_cos();
                let cycle = if matches!(self, JetFn::Sin) {
                    [s, co, -s, -co]
                } else {
                    [co, -s, -co, s]
                };
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = cycle[k % 4] / fact;
                }
            }
            JetFn::Sinh | JetFn::Cosh => {
                let (sh, ch) = (x0.sinh(), x0.cosh());
                let cycle = if matches!(self, JetFn::Sinh) {
                    [sh, ch]
                } else {
                    [ch, sh]
                };
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = cycle[k % 2] / fact;
                }
            }
            JetFn::Tanh => {
                // t' = 1 - t^2
                c[0] = x0.tanh();
                for k in 0..n {
                    let mut sq = 0.0;
                    for i in 0..=k {
                        sq += c[i] * c[k - i];
                    }
                    let rhs = if k == 0 { 1.0 - sq } else { -sq };
                    c[k + 1] = rhs / (k as f64 + 1.0);
                }
            }
            JetFn::Atan => {
                // u' = 1 / (q0 + q1 h + h^2)
                let q0 = 1.0 + x0 * x0;
                let q1 = 2.0 * x0;
                let mut v = vec![0.0; n + 1];
                for k in 0..=n {
                    let mut num = if k == 0 { 1.0 } else { 0.0 };
                    if k >= 1 {
                        num -= q1 * v[k - 1];
                    }
                    if k >= 2 {
                        num -= v[k - 2];
                    }
                    v[k] = num / q0;
                }
                c[0] = x0.atan();
                for k in 0..n {
                    c[k + 1] = v[k] / (k as f64 + 1.0);
                }
            }
        }
        Ok(c)
    }
}

/// Truncated Taylor expansion of a scalar at a chart point.
#[derive(Clone, PartialEq)]
pub struct Jet {
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                map.entry(&monomial(i).to_string(), c);
            }
        }
        map.finish()
    }
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} out of range");
        let mut coeffs = vec![0.0; coeff_count(order)];
        coeffs[0] = value;
        Jet {
            order: order as u8,
            coeffs,
        }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// Jet of the coordinate function `x_axis` at a point whose `axis` coordinate is `value`.
    pub fn variable(axis: usize, value: f64, order: usize) -> Result<Self, JetError> {
        check_order(order)?;
        if axis >= NVARS {
            return Err(JetError::AxisOutOfRange(axis));
        }
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            j.coeffs[1 + axis] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from explicit coefficients in storage order.
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        check_order(order)?;
        assert_eq!(coeffs.len(), coeff_count(order));
        Ok(Jet {
            order: order as u8,
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Constant term, i.e. the value at the base point.
    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of `m`, zero when `m` exceeds the order.
    pub fn coeff(&self, m: &MultiIndex) -> f64 {
        if m.degree() > self.order() {
            return 0.0;
        }
        index_of(m).map_or(0.0, |i| self.coeffs[i])
    }

    /// `∂^α f` at the base point: `α! · coeff[α]`.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        let degree = alpha.degree();
        if degree > self.order() {
            return Err(JetError::DegreeExceedsOrder {
                degree,
                order: self.order(),
            });
        }
        Ok(alpha.factorial() * self.coeff(alpha))
    }

    /// First derivative along one axis; the result has order one less.
    ///
    /// Panics on an order-0 jet.
    pub fn diff(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.order() - 1;
        let len = coeff_count(n);
        let mut out = vec![0.0; len];
        for &(k, s, factor) in &tables().diff[axis][..len] {
            out[k as usize] = factor * self.coeffs[s as usize];
        }
        Jet {
            order: n as u8,
            coeffs: out,
        }
    }

    /// All four first derivatives.
    pub fn gradient(&self) -> [Jet; NVARS] {
        std::array::from_fn(|i| self.diff(i))
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        Jet {
            order: order as u8,
            coeffs: self.coeffs[..coeff_count(order)].to_vec(),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// `self += k * other`, truncated to the order of `self`.
    pub fn add_scaled(&mut self, other: &Jet, k: f64) {
        let n = coeff_count(self.order().min(other.order()));
        for (a, b) in self.coeffs[..n].iter_mut().zip(&other.coeffs[..n]) {
            *a += k * b;
        }
        if other.order < self.order {
            self.truncate_in_place(other.order());
        }
    }

    fn truncate_in_place(&mut self, order: usize) {
        self.coeffs.truncate(coeff_count(order));
        self.order = order as u8;
    }

    /// Truncated product at an explicit order (at most the smaller operand order).
    pub fn mul_to(&self, other: &Jet, order: usize) -> Jet {
        let n = order.min(self.order()).min(other.order());
        let mut out = vec![0.0; coeff_count(n)];
        for &(i, j, k) in &tables().mul[n] {
            out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            order: n as u8,
            coeffs: out,
        }
    }

    /// `self += a * b`, truncated to the order of `self`.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        let n = self.order().min(a.order()).min(b.order());
        if n < self.order() {
            self.truncate_in_place(n);
        }
        for &(i, j, k) in &tables().mul[n] {
            self.coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    /// `self -= a * b`, truncated to the order of `self`.
    pub fn sub_product(&mut self, a: &Jet, b: &Jet) {
        let n = self.order().min(a.order()).min(b.order());
        if n < self.order() {
            self.truncate_in_place(n);
        }
        for &(i, j, k) in &tables().mul[n] {
            self.coeffs[k as usize] -= a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x0 = self.value();
        if x0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let n = self.order();
        let mut c = Vec::with_capacity(n + 1);
        let inv = 1.0 / x0;
        let mut p = inv;
        for k in 0..=n {
            c.push(if k % 2 == 0 { p } else { -p });
            p *= inv;
        }
        Ok(self.compose_series(&c))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self * &other.recip()?)
    }

    /// Integer power by repeated squaring; negative exponents go through [`Jet::recip`].
    pub fn powi(&self, e: i32) -> Result<Jet, JetError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Jet::constant(1.0, self.order());
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &sq;
            }
            k >>= 1;
            if k > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Composition `f ∘ self` through the univariate Taylor series of `f`.
    pub fn apply(&self, f: JetFn) -> Result<Jet, JetError> {
        let c = f.series(self.value(), self.order())?;
        Ok(self.compose_series(&c))
    }

    /// Strict binary arithmetic: operand orders must match.
    pub fn arith(&self, other: &Jet, op: ArithOp) -> Result<Jet, JetError> {
        if self.order != other.order {
            return Err(JetError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
            ArithOp::Div => self.checked_div(other)?,
        })
    }

    /// Evaluates `Σ c_k (self - self(p))^k` by Horner's rule.
    fn compose_series(&self, c: &[f64]) -> Jet {
        let n = self.order();
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(c[n], n);
        for k in (0..n).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += c[k];
        }
        acc
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let len = coeff_count(n);
        Jet {
            order: n as u8,
            coeffs: self.coeffs[..len]
                .iter()
                .zip(&rhs.coeffs[..len])
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let len = coeff_count(n);
        Jet {
            order: n as u8,
            coeffs: self.coeffs[..len]
                .iter()
                .zip(&rhs.coeffs[..len])
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_to(rhs, MAX_ORDER)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.add_scaled(rhs, 1.0);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.add_scaled(rhs, -1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: [u8; 4]) -> MultiIndex {
        MultiIndex(e)
    }

    #[test]
    fn coefficient_counts() {
        for n in 0..=MAX_ORDER {
            let expected = (1..=4).fold(1usize, |acc, k| acc * (n + k) / k);
            assert_eq!(coeff_count(n), expected);
        }
        assert_eq!(coeff_count(5), 126);
    }

    #[test]
    fn variable_jets() {
        let x = Jet::variable(0, 2.0, 2).unwrap();
        assert_eq!(x.coeff(&MultiIndex::ZERO), 2.0);
        assert_eq!(x.coeff(&mi([1, 0, 0, 0])), 1.0);
        assert_eq!(x.coeffs().iter().filter(|c| **c != 0.0).count(), 2);

        let w = Jet::variable(3, 0.0, 0).unwrap();
        assert_eq!(w.coeffs(), &[0.0]);

        let x = Jet::variable(0, 3.0, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeff(&MultiIndex::ZERO), 9.0);
        assert_eq!(sq.coeff(&mi([1, 0, 0, 0])), 6.0);
        assert_eq!(sq.coeff(&mi([2, 0, 0, 0])), 1.0);

        assert_eq!(Jet::variable(4, 0.0, 2), Err(JetError::AxisOutOfRange(4)));
        assert_eq!(Jet::variable(0, 0.0, 6), Err(JetError::OrderOutOfRange(6)));
    }

    #[test]
    fn arithmetic_examples() {
        let x = Jet::variable(0, 0.0, 2).unwrap();
        let one_plus = &x + 1.0;
        let one_minus = &(-&x) + 1.0;
        let p = &one_plus * &one_minus;
        assert_eq!(p.coeff(&MultiIndex::ZERO), 1.0);
        assert_eq!(p.coeff(&mi([1, 0, 0, 0])), 0.0);
        assert_eq!(p.coeff(&mi([2, 0, 0, 0])), -1.0);

        let x = Jet::variable(0, 0.0, 3).unwrap();
        let q = x.arith(&(&x + 1.0), ArithOp::Div).unwrap();
        for (k, want) in [(0u8, 0.0), (1, 1.0), (2, -1.0), (3, 1.0)] {
            assert!((q.coeff(&mi([k, 0, 0, 0])) - want).abs() < 1e-15);
        }

        let zero = Jet::zero(3);
        assert_eq!(x.arith(&zero, ArithOp::Div), Err(JetError::DivisionByZero));
        assert!(matches!(
            x.arith(&Jet::zero(2), ArithOp::Add),
            Err(JetError::OrderMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn function_examples() {
        let x = Jet::variable(0, 0.0, 4).unwrap();
        let e = x.apply(JetFn::Exp).unwrap();
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for k in 0..=4u8 {
            assert!((e.coeff(&mi([k, 0, 0, 0])) - 1.0 / fact[k as usize]).abs() < 1e-15);
        }
        let x = Jet::variable(0, 0.0, 2).unwrap();
        let s = (&x + 1.0).apply(JetFn::Sqrt).unwrap();
        assert!((s.coeff(&mi([0, 0, 0, 0])) - 1.0).abs() < 1e-15);
        assert!((s.coeff(&mi([1, 0, 0, 0])) - 0.5).abs() < 1e-15);
        assert!((s.coeff(&mi([2, 0, 0, 0])) + 0.125).abs() < 1e-15);

        let err = (&x + -1.0).apply(JetFn::Log).unwrap_err();
        assert_eq!(
            err,
            JetError::Domain {
                func: "log",
                value: -1.0
            }
        );
        assert!(err.to_string().contains("log"));
    }

    #[test]
    fn partial_examples() {
        let x = Jet::variable(0, 0.0, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.partial(&mi([2, 0, 0, 0])).unwrap(), 2.0);
        let c = Jet::constant(3.5, 3);
        for i in 1..coeff_count(3) {
            assert_eq!(c.partial(&monomial(i)).unwrap(), 0.0);
        }
        let x = Jet::variable(0, 0.0, 2).unwrap();
        let y = Jet::variable(1, 0.0, 2).unwrap();
        let e = (&x + &(&y * 2.0)).apply(JetFn::Exp).unwrap();
        assert!((e.partial(&mi([1, 1, 0, 0])).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            e.partial(&mi([3, 0, 0, 0])),
            Err(JetError::DegreeExceedsOrder {
                degree: 3,
                order: 2
            })
        );
    }

    #[test]
    fn derivative_lowers_order() {
        // f = x^2 y at (1, 2): ∂x f = 2xy → 4, ∂x∂y f = 2x → 2
        let x = Jet::variable(0, 1.0, 3).unwrap();
        let y = Jet::variable(1, 2.0, 3).unwrap();
        let f = &(&x * &x) * &y;
        let fx = f.diff(0);
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 4.0).abs() < 1e-15);
        assert!((fx.diff(1).value() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn integer_powers() {
        let x = Jet::variable(0, 2.0, 3).unwrap();
        let p = x.powi(-2).unwrap();
        // d/dx x^-2 = -2 x^-3 = -1/4
        assert!((p.value() - 0.25).abs() < 1e-15);
        assert!((p.partial(&mi([1, 0, 0, 0])).unwrap() + 0.25).abs() < 1e-15);
        let q = x.powi(3).unwrap();
        assert!((q.partial(&mi([3, 0, 0, 0])).unwrap() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_and_atan_series() {
        let x = Jet::variable(0, 0.4, 5).unwrap();
        let t = x.apply(JetFn::Tanh).unwrap();
        let th = 0.4f64.tanh();
        let sech2 = 1.0 - th * th;
        assert!((t.partial(&mi([1, 0, 0, 0])).unwrap() - sech2).abs() < 1e-14);
        assert!((t.partial(&mi([2, 0, 0, 0])).unwrap() + 2.0 * th * sech2).abs() < 1e-14);
        let a = x.apply(JetFn::Atan).unwrap();
        let d1 = 1.0 / (1.0 + 0.16);
        assert!((a.partial(&mi([1, 0, 0, 0])).unwrap() - d1).abs() < 1e-14);
        assert!((a.partial(&mi([2, 0, 0, 0])).unwrap() + 0.8 * d1 * d1).abs() < 1e-14);
    }
}
