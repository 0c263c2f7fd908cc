//! Scalars over Q or F_p and homogeneous polynomials in x, y.
//!
//! A [`HomPoly`] of order `n` stores `a_0..a_n` where `a_i` multiplies
//! `x^(n-i) y^i`. Binary forms and covariant values share this type.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Prime used throughout unless configured otherwise.
pub const DEFAULT_PRIME: u32 = 65521;

/// Initial size of the factorial tables kept per prime.
pub const DEFAULT_FACTORIAL_BOUND: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ring {
    Rational,
    ModP(u32),
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Rational => write!(f, "Q"),
            Ring::ModP(p) => write!(f, "F_{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(Ring, Ring),
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("modulus {p} too small for operands of order {order}")]
    ModulusTooSmall { p: u32, order: usize },
    #[error("{0} is not a prime modulus")]
    InvalidModulus(u32),
    #[error("division by zero")]
    DivisionByZero,
}

pub type Result<T> = std::result::Result<T, ScalarError>;

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2u32;
    while (q as u64) * (q as u64) <= p as u64 {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

pub fn mod_pow(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo the prime `p`, or `None` for zero.
pub fn mod_inv(a: u32, p: u32) -> Option<u32> {
    let a = a % p;
    if a == 0 {
        None
    } else {
        Some(mod_pow(a as u64, p as u64 - 2, p as u64) as u32)
    }
}

/// Reduce a signed integer into `[0, p)`.
pub fn reduce_i64(v: i64, p: u32) -> u32 {
    v.rem_euclid(p as i64) as u32
}

pub fn reduce_bigint(v: &BigInt, p: u32) -> u32 {
    let r = v % BigInt::from(p);
    let r = if r.is_negative() { r + BigInt::from(p) } else { r };
    r.to_u32().expect("residue fits in u32")
}

/// Factorials and inverse factorials modulo a prime, extended on demand.
#[derive(Clone, Debug)]
pub struct FactorialTable {
    p: u32,
    fact: Vec<u32>,
    inv_fact: Vec<u32>,
}

impl FactorialTable {
    pub fn new(p: u32, bound: usize) -> Self {
        let mut t = FactorialTable { p, fact: vec![1], inv_fact: vec![1] };
        t.extend_to(bound.min(p as usize - 1));
        t
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.fact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fact.is_empty()
    }

    fn extend_to(&mut self, n: usize) {
        let old = self.fact.len();
        if n < old {
            return;
        }
        let p = self.p as u64;
        for i in old..=n {
            let prev = *self.fact.last().unwrap() as u64;
            self.fact.push((prev * i as u64 % p) as u32);
        }
        self.inv_fact.resize(n + 1, 0);
        self.inv_fact[n] = mod_inv(self.fact[n], self.p).expect("n < p");
        for i in (old..n).rev() {
            self.inv_fact[i] = (self.inv_fact[i + 1] as u64 * (i as u64 + 1) % p) as u32;
        }
    }

    /// Make `0!..=n!` available; fails when `n >= p`.
    pub fn ensure(&mut self, n: usize) -> Result<()> {
        if n >= self.p as usize {
            return Err(ScalarError::ModulusTooSmall { p: self.p, order: n });
        }
        if n >= self.fact.len() {
            let target = (n + 1).max(2 * self.fact.len()).min(self.p as usize - 1);
            self.extend_to(target);
        }
        Ok(())
    }

    pub fn factorial(&mut self, n: usize) -> Result<u32> {
        self.ensure(n)?;
        Ok(self.fact[n])
    }

    pub fn binomial(&mut self, n: usize, k: usize) -> Result<u32> {
        if k > n {
            return Ok(0);
        }
        self.ensure(n)?;
        let p = self.p as u64;
        Ok((self.fact[n] as u64 * self.inv_fact[k] as u64 % p * self.inv_fact[n - k] as u64 % p) as u32)
    }

    /// Row `C(n, 0..=n)` modulo p.
    pub fn binomial_row(&mut self, n: usize) -> Result<Vec<u32>> {
        (0..=n).map(|k| self.binomial(n, k)).collect()
    }
}

thread_local! {
    static TABLES: RefCell<HashMap<u32, FactorialTable>> = RefCell::new(HashMap::new());
}

/// Run `f` with this thread's factorial table for `p`.
pub fn with_factorials<T>(p: u32, f: impl FnOnce(&mut FactorialTable) -> T) -> T {
    TABLES.with(|cell| {
        let mut map = cell.borrow_mut();
        let table = map.entry(p).or_insert_with(|| FactorialTable::new(p, DEFAULT_FACTORIAL_BOUND));
        f(table)
    })
}

pub fn binomial_big(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// A single coefficient together with its ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Rational(BigRational),
    ModP { value: u32, p: u32 },
}

impl Scalar {
    pub fn from_i64(ring: Ring, v: i64) -> Self {
        match ring {
            Ring::Rational => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            Ring::ModP(p) => Scalar::ModP { value: reduce_i64(v, p), p },
        }
    }

    pub fn zero(ring: Ring) -> Self {
        Self::from_i64(ring, 0)
    }

    pub fn one(ring: Ring) -> Self {
        Self::from_i64(ring, 1)
    }

    pub fn ring(&self) -> Ring {
        match self {
            Scalar::Rational(_) => Ring::Rational,
            Scalar::ModP { p, .. } => Ring::ModP(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(q) => q.is_zero(),
            Scalar::ModP { value, .. } => *value == 0,
        }
    }

    fn check(&self, other: &Scalar) -> Result<()> {
        if self.ring() != other.ring() {
            Err(ScalarError::RingMismatch(self.ring(), other.ring()))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (Scalar::ModP { value: a, p }, Scalar::ModP { value: b, .. }) => {
                Scalar::ModP { value: ((*a as u64 + *b as u64) % *p as u64) as u32, p: *p }
            }
            _ => unreachable!(),
        })
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::ModP { value, p } => Scalar::ModP { value: (*p - *value) % *p, p: *p },
        }
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            (Scalar::ModP { value: a, p }, Scalar::ModP { value: b, .. }) => {
                Scalar::ModP { value: ((*a as u64 * *b as u64) % *p as u64) as u32, p: *p }
            }
            _ => unreachable!(),
        })
    }

    pub fn inv(&self) -> Result<Scalar> {
        match self {
            Scalar::Rational(a) if a.is_zero() => Err(ScalarError::DivisionByZero),
            Scalar::Rational(a) => Ok(Scalar::Rational(a.recip())),
            Scalar::ModP { value, p } => {
                mod_inv(*value, *p).map(|v| Scalar::ModP { value: v, p: *p }).ok_or(ScalarError::DivisionByZero)
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(q) => write!(f, "{q}"),
            Scalar::ModP { value, .. } => write!(f, "{value}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coeffs {
    Rational(Vec<BigRational>),
    ModP { p: u32, values: Vec<u32> },
}

/// Homogeneous polynomial of a declared order; also used for binary forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomPoly {
    order: usize,
    coeffs: Coeffs,
}

pub type BinaryForm = HomPoly;

impl HomPoly {
    pub fn zero(ring: Ring, order: usize) -> Self {
        let coeffs = match ring {
            Ring::Rational => Coeffs::Rational(vec![BigRational::zero(); order + 1]),
            Ring::ModP(p) => Coeffs::ModP { p, values: vec![0; order + 1] },
        };
        HomPoly { order, coeffs }
    }

    /// Constant polynomial 1 (order 0).
    pub fn one(ring: Ring) -> Self {
        let mut z = Self::zero(ring, 0);
        match &mut z.coeffs {
            Coeffs::Rational(v) => v[0] = BigRational::one(),
            Coeffs::ModP { values, .. } => values[0] = 1,
        }
        z
    }

    /// Coefficients `a_0..a_n` modulo `p`; the order is `values.len() - 1`.
    pub fn from_mod_p(p: u32, values: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(ScalarError::InvalidModulus(p));
        }
        assert!(!values.is_empty(), "a form needs at least one coefficient");
        let values = values.into_iter().map(|v| v % p).collect::<Vec<_>>();
        Ok(HomPoly { order: values.len() - 1, coeffs: Coeffs::ModP { p, values } })
    }

    pub fn from_rationals(values: Vec<BigRational>) -> Self {
        assert!(!values.is_empty(), "a form needs at least one coefficient");
        HomPoly { order: values.len() - 1, coeffs: Coeffs::Rational(values) }
    }

    pub fn from_integers(ring: Ring, values: &[i64]) -> Result<Self> {
        match ring {
            Ring::Rational => {
                Ok(Self::from_rationals(values.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()))
            }
            Ring::ModP(p) => Self::from_mod_p(p, values.iter().map(|&v| reduce_i64(v, p)).collect()),
        }
    }

    pub fn from_scalars(ring: Ring, values: &[Scalar]) -> Result<Self> {
        for v in values {
            if v.ring() != ring {
                return Err(ScalarError::RingMismatch(ring, v.ring()));
            }
        }
        match ring {
            Ring::Rational => Ok(Self::from_rationals(
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::Rational(q) => q.clone(),
                        _ => unreachable!(),
                    })
                    .collect(),
            )),
            Ring::ModP(p) => Self::from_mod_p(
                p,
                values
                    .iter()
                    .map(|v| match v {
                        Scalar::ModP { value, .. } => *value,
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
        }
    }

    /// Uniformly random form of order `n` over `F_p`.
    pub fn random_mod_p<R: Rng + ?Sized>(p: u32, n: usize, rng: &mut R) -> Self {
        let values = (0..=n).map(|_| rng.gen_range(0..p)).collect();
        HomPoly { order: n, coeffs: Coeffs::ModP { p, values } }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ring(&self) -> Ring {
        match &self.coeffs {
            Coeffs::Rational(_) => Ring::Rational,
            Coeffs::ModP { p, .. } => Ring::ModP(*p),
        }
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        match &self.coeffs {
            Coeffs::Rational(v) => Scalar::Rational(v[i].clone()),
            Coeffs::ModP { p, values } => Scalar::ModP { value: values[i], p: *p },
        }
    }

    pub fn mod_p_values(&self) -> Option<&[u32]> {
        match &self.coeffs {
            Coeffs::ModP { values, .. } => Some(values),
            _ => None,
        }
    }

    pub fn rational_values(&self) -> Option<&[BigRational]> {
        match &self.coeffs {
            Coeffs::Rational(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.coeffs {
            Coeffs::Rational(v) => v.iter().all(|c| c.is_zero()),
            Coeffs::ModP { values, .. } => values.iter().all(|&c| c == 0),
        }
    }

    fn same_ring(&self, other: &HomPoly) -> Result<()> {
        if self.ring() != other.ring() {
            Err(ScalarError::RingMismatch(self.ring(), other.ring()))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &HomPoly) -> Result<HomPoly> {
        self.same_ring(other)?;
        if self.order != other.order {
            return Err(ScalarError::OrderMismatch(self.order, other.order));
        }
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Rational(a), Coeffs::Rational(b)) => {
                Coeffs::Rational(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Coeffs::ModP { p, values: a }, Coeffs::ModP { values: b, .. }) => Coeffs::ModP {
                p: *p,
                values: a.iter().zip(b).map(|(&x, &y)| ((x as u64 + y as u64) % *p as u64) as u32).collect(),
            },
            _ => unreachable!(),
        };
        Ok(HomPoly { order: self.order, coeffs })
    }

    pub fn neg(&self) -> HomPoly {
        let coeffs = match &self.coeffs {
            Coeffs::Rational(a) => Coeffs::Rational(a.iter().map(|x| -x).collect()),
            Coeffs::ModP { p, values } => {
                Coeffs::ModP { p: *p, values: values.iter().map(|&x| (*p - x) % *p).collect() }
            }
        };
        HomPoly { order: self.order, coeffs }
    }

    pub fn sub(&self, other: &HomPoly) -> Result<HomPoly> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Result<HomPoly> {
        if s.ring() != self.ring() {
            return Err(ScalarError::RingMismatch(self.ring(), s.ring()));
        }
        let coeffs = match (&self.coeffs, s) {
            (Coeffs::Rational(a), Scalar::Rational(q)) => Coeffs::Rational(a.iter().map(|x| x * q).collect()),
            (Coeffs::ModP { p, values }, Scalar::ModP { value, .. }) => Coeffs::ModP {
                p: *p,
                values: values.iter().map(|&x| (x as u64 * *value as u64 % *p as u64) as u32).collect(),
            },
            _ => unreachable!(),
        };
        Ok(HomPoly { order: self.order, coeffs })
    }

    pub fn mul(&self, other: &HomPoly) -> Result<HomPoly> {
        self.same_ring(other)?;
        let order = self.order + other.order;
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Rational(a), Coeffs::Rational(b)) => {
                let mut out = vec![BigRational::zero(); order + 1];
                for (i, x) in a.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                Coeffs::Rational(out)
            }
            (Coeffs::ModP { p, values: a }, Coeffs::ModP { values: b, .. }) => {
                Coeffs::ModP { p: *p, values: mul_mod_p(*p, a, b) }
            }
            _ => unreachable!(),
        };
        Ok(HomPoly { order, coeffs })
    }

    pub fn pow(&self, e: u32) -> Result<HomPoly> {
        let mut acc = HomPoly::one(self.ring());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Transvectant `(self, other)_r` of order `n + m - 2r`. For `r > min(n, m)`
    /// the result is the zero polynomial of order 0.
    pub fn transvectant(&self, other: &HomPoly, r: usize) -> Result<HomPoly> {
        self.same_ring(other)?;
        let (n, m) = (self.order, other.order);
        if r > n.min(m) {
            return Ok(HomPoly::zero(self.ring(), 0));
        }
        let order = n + m - 2 * r;
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Rational(a), Coeffs::Rational(b)) => Coeffs::Rational(transvectant_q(a, b, r)),
            (Coeffs::ModP { p, values: a }, Coeffs::ModP { values: b, .. }) => {
                Coeffs::ModP { p: *p, values: transvectant_mod_p(*p, a, b, r)? }
            }
            _ => unreachable!(),
        };
        Ok(HomPoly { order, coeffs })
    }

    /// Reduce rational coefficients modulo `p`.
    pub fn reduce_mod(&self, p: u32) -> Result<HomPoly> {
        match &self.coeffs {
            Coeffs::ModP { p: q, .. } if *q == p => Ok(self.clone()),
            Coeffs::ModP { p: q, .. } => Err(ScalarError::RingMismatch(Ring::ModP(*q), Ring::ModP(p))),
            Coeffs::Rational(v) => {
                let mut out = Vec::with_capacity(v.len());
                for c in v {
                    let den = reduce_bigint(c.denom(), p);
                    let inv = mod_inv(den, p).ok_or(ScalarError::DivisionByZero)?;
                    out.push((reduce_bigint(c.numer(), p) as u64 * inv as u64 % p as u64) as u32);
                }
                HomPoly::from_mod_p(p, out)
            }
        }
    }

    /// `f(a x + b y, c x + d y)`.
    pub fn substitute(&self, a: &Scalar, b: &Scalar, c: &Scalar, d: &Scalar) -> Result<HomPoly> {
        let ring = self.ring();
        let l1 = HomPoly::from_scalars(ring, &[a.clone(), b.clone()])?;
        let l2 = HomPoly::from_scalars(ring, &[c.clone(), d.clone()])?;
        let n = self.order;
        let mut p1 = vec![HomPoly::one(ring)];
        let mut p2 = vec![HomPoly::one(ring)];
        for k in 1..=n {
            p1.push(p1[k - 1].mul(&l1)?);
            p2.push(p2[k - 1].mul(&l2)?);
        }
        let mut acc = HomPoly::zero(ring, n);
        for i in 0..=n {
            let coeff = self.coeff(i);
            if coeff.is_zero() {
                continue;
            }
            let term = p1[n - i].mul(&p2[i])?.scale(&coeff)?;
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// `(g . f)(x, y) = f(g^{-1} (x, y))`.
    pub fn act(&self, g: &Sl2) -> Result<HomPoly> {
        let (a, b, c, d) = g.inverse_entries();
        self.substitute(&a, &b, &c, &d)
    }
}

impl fmt::Display for HomPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.order;
        let mut first = true;
        for i in 0..=n {
            let c = self.coeff(i);
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            match n - i {
                0 => {}
                1 => write!(f, "*x")?,
                e => write!(f, "*x^{e}")?,
            }
            match i {
                0 => {}
                1 => write!(f, "*y")?,
                e => write!(f, "*y^{e}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub(crate) fn mul_mod_p(p: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    let p64 = p as u64;
    let mut acc = vec![0u64; a.len() + b.len() - 1];
    // Each partial sum stays below 2^63 for inputs shorter than 2^30.
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let x = x as u64;
        for (j, &y) in b.iter().enumerate() {
            acc[i + j] += x * y as u64;
        }
        if i % 1024 == 1023 {
            for v in acc.iter_mut() {
                *v %= p64;
            }
        }
    }
    acc.into_iter().map(|v| (v % p64) as u32).collect()
}

// With A_i = a_i / C(n, i), the normalizing factorials cancel and
//   c_s = sum_{k+l=s} C(n-r,k) C(m-r,l) sum_j (-1)^j C(r,j) A_{k+j} B_{l+r-j}.
fn transvectant_mod_p(p: u32, a: &[u32], b: &[u32], r: usize) -> Result<Vec<u32>> {
    let (n, m) = (a.len() - 1, b.len() - 1);
    let p64 = p as u64;
    with_factorials(p, |t| {
        t.ensure(n.max(m))?;
        let norm = |v: &[u32], deg: usize, t: &mut FactorialTable| -> Result<Vec<u64>> {
            let row = t.binomial_row(deg)?;
            Ok(v.iter()
                .zip(row)
                .map(|(&x, c)| x as u64 * mod_inv(c, p).expect("binomial below p") as u64 % p64)
                .collect())
        };
        let an = norm(a, n, t)?;
        let bn = norm(b, m, t)?;
        let rn = t.binomial_row(r)?;
        let cn = t.binomial_row(n - r)?;
        let cm = t.binomial_row(m - r)?;
        let (kk, ll) = (n - r + 1, m - r + 1);
        let mut tkl = vec![0u64; kk * ll];
        for j in 0..=r {
            let sign = if j % 2 == 0 { rn[j] as u64 } else { (p64 - rn[j] as u64) % p64 };
            if sign == 0 {
                continue;
            }
            for k in 0..kk {
                let ak = sign * an[k + j] % p64;
                if ak == 0 {
                    continue;
                }
                let row = &mut tkl[k * ll..(k + 1) * ll];
                let bs = &bn[r - j..r - j + ll];
                for (slot, &bv) in row.iter_mut().zip(bs) {
                    *slot += ak * bv;
                }
            }
            if j % 512 == 511 {
                for v in tkl.iter_mut() {
                    *v %= p64;
                }
            }
        }
        let mut out = vec![0u64; kk + ll - 1];
        for k in 0..kk {
            let ck = cn[k] as u64;
            for l in 0..ll {
                let v = tkl[k * ll + l] % p64 * ck % p64 * cm[l] as u64 % p64;
                out[k + l] += v;
            }
        }
        Ok(out.into_iter().map(|v| (v % p64) as u32).collect())
    })
}

fn transvectant_q(a: &[BigRational], b: &[BigRational], r: usize) -> Vec<BigRational> {
    let (n, m) = (a.len() - 1, b.len() - 1);
    let big = |x: BigInt| BigRational::from_integer(x);
    let an: Vec<BigRational> = a.iter().enumerate().map(|(i, x)| x / big(binomial_big(n, i))).collect();
    let bn: Vec<BigRational> = b.iter().enumerate().map(|(i, x)| x / big(binomial_big(m, i))).collect();
    let mut out = vec![BigRational::zero(); n + m - 2 * r + 1];
    for k in 0..=n - r {
        for l in 0..=m - r {
            let mut inner = BigRational::zero();
            for j in 0..=r {
                let term = big(binomial_big(r, j)) * &an[k + j] * &bn[l + r - j];
                if j % 2 == 0 {
                    inner += term;
                } else {
                    inner -= term;
                }
            }
            if inner.is_zero() {
                continue;
            }
            out[k + l] += inner * big(binomial_big(n - r, k) * binomial_big(m - r, l));
        }
    }
    out
}

/// Element of SL2 over a ring, acting on forms by `f -> f o g^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sl2 {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
}

impl Sl2 {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<Self> {
        let det = a.mul(&d)?.sub(&b.mul(&c)?)?;
        if det != Scalar::one(a.ring()) {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Sl2 { a, b, c, d })
    }

    pub fn random_mod_p<R: Rng + ?Sized>(p: u32, rng: &mut R) -> Self {
        let a = rng.gen_range(1..p);
        let b = rng.gen_range(0..p);
        let c = rng.gen_range(0..p);
        let p64 = p as u64;
        let d = (1 + b as u64 * c as u64 % p64) % p64 * mod_inv(a, p).unwrap() as u64 % p64;
        let s = |v: u64| Scalar::ModP { value: v as u32, p };
        Sl2 { a: s(a as u64), b: s(b as u64), c: s(c as u64), d: s(d) }
    }

    fn inverse_entries(&self) -> (Scalar, Scalar, Scalar, Scalar) {
        (self.d.clone(), self.b.neg(), self.c.neg(), self.a.clone())
    }
}
