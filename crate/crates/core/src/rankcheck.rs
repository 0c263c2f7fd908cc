//! Mod-p rank verification of covariant spaces.
//!
//! Covariants are compared through their values at a pool of random forms
//! over `F_p`: each covariant of order `m` contributes the concatenated
//! `m + 1` coefficients of its values. An [`EvalMatrix`] keeps a basis of
//! the vectors orthogonal to every accepted row, so testing a new row and
//! accepting it both cost `O(D²)`.
//!
//! Independence found this way is exact; only "in the span" verdicts can be
//! wrong (unlucky evaluation points).

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::program::{CovariantProgram, Family, NodeId, ProgramError};
use crate::scalar_forms::{mod_inv, HomPoly, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RankError {
    #[error("no product of the generators has degree {d} and order at least {m}")]
    Unreachable { d: usize, m: usize },
    #[error("no form annihilating the constraints after {0} attempts")]
    ConstraintBudget(usize),
    #[error("constraint {0} is not an invariant")]
    NotInvariant(String),
    #[error("pool holds {have} forms, cell needs {need}")]
    PoolTooSmall { have: usize, need: usize },
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

pub type Result<T> = std::result::Result<T, RankError>;

/// Extra rows drawn beyond the target, and extra forms beyond the minimum.
pub const ROW_SLACK: usize = 16;
pub const FORM_SLACK: usize = 4;
/// Default candidate draws per unit of target dimension.
pub const BUDGET_FACTOR: usize = 200;

/// Forms needed for a cell of order `m` and dimension `target`.
pub fn forms_needed(target: usize, m: usize) -> usize {
    target.div_ceil(m + 1) + FORM_SLACK
}

/// Deterministic per-cell seed.
pub fn cell_seed(seed: u64, d: usize, m: usize) -> u64 {
    let mut z = seed ^ ((d as u64) << 32 | m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rows over `F_p` with an incrementally maintained parity-check basis.
#[derive(Clone, Debug)]
pub struct EvalMatrix {
    p: u32,
    cols: usize,
    rows: Vec<Vec<u32>>,
    parity: Vec<Vec<u32>>,
}

impl EvalMatrix {
    pub fn new(p: u32, cols: usize) -> Self {
        let parity = (0..cols)
            .map(|i| {
                let mut e = vec![0; cols];
                e[i] = 1;
                e
            })
            .collect();
        EvalMatrix { p, cols, rows: Vec::new(), parity }
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn parity(&self) -> &[Vec<u32>] {
        &self.parity
    }

    fn dot(&self, a: &[u32], b: &[u32]) -> u32 {
        let p = self.p as u64;
        let mut acc = 0u64;
        for (chunk_a, chunk_b) in a.chunks(1 << 16).zip(b.chunks(1 << 16)) {
            let s: u64 = chunk_a.iter().zip(chunk_b).map(|(&x, &y)| x as u64 * y as u64).sum();
            acc = (acc + s % p) % p;
        }
        acc as u32
    }

    /// Products of the parity rows with `v`; all zero iff `v` is in the row span.
    pub fn syndrome(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols, "row length");
        self.parity.iter().map(|h| self.dot(h, v)).collect()
    }

    pub fn in_span(&self, v: &[u32]) -> bool {
        self.parity.iter().all(|h| self.dot(h, v) == 0)
    }

    /// Add `v` if it is independent of the current rows.
    pub fn try_insert(&mut self, v: Vec<u32>) -> bool {
        let syn = self.syndrome(&v);
        let Some(k) = syn.iter().position(|&s| s != 0) else {
            return false;
        };
        let p = self.p as u64;
        let inv = mod_inv(syn[k], self.p).expect("nonzero mod p") as u64;
        let pivot = self.parity.swap_remove(k);
        let mut syn = syn;
        syn.swap_remove(k);
        for (h, &s) in self.parity.iter_mut().zip(&syn) {
            if s == 0 {
                continue;
            }
            let f = (s as u64 * inv) % p;
            let nf = p - f;
            for (x, &y) in h.iter_mut().zip(&pivot) {
                *x = ((*x as u64 + nf * y as u64) % p) as u32;
            }
        }
        self.rows.push(v);
        true
    }
}

/// Basis of `{x : r·x = 0 for every row r}` by Gaussian elimination.
pub fn kernel_from_scratch(p: u32, cols: usize, rows: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let pp = p as u64;
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(i) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, i);
        let inv = mod_inv(m[r][c], p).unwrap() as u64;
        for x in m[r].iter_mut() {
            *x = (*x as u64 * inv % pp) as u32;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c] as u64;
                let pivot = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot) {
                    *x = ((*x as u64 + (pp - f) * *y as u64) % pp) as u32;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut x = vec![0u32; cols];
            x[fc] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = ((pp - m[row][fc] as u64) % pp) as u32;
            }
            x
        })
        .collect()
}

/// Rank of a list of vectors over `F_p`.
pub fn rank_of(p: u32, rows: &[Vec<u32>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut m = EvalMatrix::new(p, first.len());
    rows.iter().filter(|r| m.try_insert((*r).clone())).count()
}

/// Univariate polynomials over `F_p`, coefficients in increasing degree.
pub(crate) mod fp {
    use crate::scalar_forms::{mod_inv, mod_pow};

    pub fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn eval(a: &[u32], x: u32, p: u32) -> u32 {
        let (p, x) = (p as u64, x as u64);
        a.iter().rev().fold(0u64, |acc, &c| (acc * x + c as u64) % p) as u32
    }

    /// Interpolating polynomial through `(xs[i], ys[i])` (distinct `xs`).
    pub fn interpolate(xs: &[u32], ys: &[u32], p: u32) -> Vec<u32> {
        let pp = p as u64;
        let n = xs.len();
        // Newton divided differences.
        let mut dd: Vec<u64> = ys.iter().map(|&y| y as u64).collect();
        for j in 1..n {
            for i in (j..n).rev() {
                let num = (dd[i] + pp - dd[i - 1]) % pp;
                let den = (xs[i] as u64 + pp - xs[i - j] as u64) % pp;
                dd[i] = num * mod_inv(den as u32, p).expect("distinct nodes") as u64 % pp;
            }
        }
        let mut out = vec![0u64; n];
        for k in (0..n).rev() {
            // out = out * (x - xs[k]) + dd[k]
            let mut next = vec![0u64; n];
            for i in 0..n {
                if out[i] == 0 {
                    continue;
                }
                if i + 1 < n {
                    next[i + 1] = (next[i + 1] + out[i]) % pp;
                }
                next[i] = (next[i] + out[i] * (pp - xs[k] as u64)) % pp;
            }
            next[0] = (next[0] + dd[k]) % pp;
            out = next;
        }
        trim(out.into_iter().map(|v| v as u32).collect())
    }

    pub fn rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let pp = p as u64;
        let b = trim(b.to_vec());
        let db = b.len() - 1;
        let inv = mod_inv(b[db], p).unwrap() as u64;
        let mut a = trim(a.to_vec());
        while a.len() > db && !a.is_empty() {
            let da = a.len() - 1;
            let f = a[da] as u64 * inv % pp;
            for i in 0..=db {
                let idx = da - db + i;
                a[idx] = ((a[idx] as u64 + (pp - f) * b[i] as u64) % pp) as u32;
            }
            a = trim(a);
        }
        a
    }

    pub fn mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let pp = p as u64;
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut c = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                c[i + j] = (c[i + j] + x as u64 * y as u64) % pp;
            }
        }
        rem(&c.into_iter().map(|v| v as u32).collect::<Vec<_>>(), m, p)
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        if let Some(&lead) = a.last() {
            let inv = mod_inv(lead, p).unwrap() as u64;
            for x in a.iter_mut() {
                *x = (*x as u64 * inv % p as u64) as u32;
            }
        }
        a
    }

    /// Roots in `F_p` of a nonzero polynomial.
    pub fn roots(a: &[u32], p: u32) -> Vec<u32> {
        let a = trim(a.to_vec());
        if a.len() <= 1 {
            return Vec::new();
        }
        // Split off the part with roots in F_p: gcd(a, x^p - x).
        let mut acc = vec![1u32];
        let mut base = rem(&[0, 1], &a, p);
        let mut e = p as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(&acc, &base, &a, p);
            }
            base = mul_mod(&base, &base, &a, p);
            e >>= 1;
        }
        let mut xp_minus_x = acc;
        xp_minus_x.resize(xp_minus_x.len().max(2), 0);
        xp_minus_x[1] = ((xp_minus_x[1] as u64 + p as u64 - 1) % p as u64) as u32;
        let g = gcd(&a, &xp_minus_x, p);
        if g.len() <= 1 {
            return Vec::new();
        }
        (0..p).filter(|&x| eval(&g, x, p) == 0).collect()
    }

    /// Resultant of `a` and `b` taken with formal degrees `da`, `db`.
    pub fn resultant(a: &[u32], da: usize, b: &[u32], db: usize, p: u32) -> u32 {
        let pp = p as u64;
        let size = da + db;
        if size == 0 {
            return 1;
        }
        let coef = |v: &[u32], i: usize| v.get(i).copied().unwrap_or(0);
        // Rows hold coefficients from the top degree down.
        let mut m = vec![vec![0u64; size]; size];
        for r in 0..db {
            for k in 0..=da {
                m[r][r + k] = coef(a, da - k) as u64;
            }
        }
        for r in 0..da {
            for k in 0..=db {
                m[db + r][r + k] = coef(b, db - k) as u64;
            }
        }
        let mut det = 1u64;
        for c in 0..size {
            let Some(piv) = (c..size).find(|&r| m[r][c] != 0) else { return 0 };
            if piv != c {
                m.swap(piv, c);
                det = (pp - det) % pp;
            }
            det = det * m[c][c] % pp;
            let inv = mod_pow(m[c][c], pp - 2, pp);
            for r in c + 1..size {
                if m[r][c] == 0 {
                    continue;
                }
                let f = m[r][c] * inv % pp;
                for k in c..size {
                    m[r][k] = (m[r][k] + (pp - f) * m[c][k]) % pp;
                }
            }
        }
        det as u32
    }
}

type BlackBox = Arc<dyn Fn(&[u32]) -> u32 + Send + Sync>;

/// Cap on the degree of any eliminant in one variable.
const MAX_ELIMINATION_DEGREE: usize = 4096;

fn restrict(f: &BlackBox, point: &[u32], var: usize, deg: usize, p: u32) -> Vec<u32> {
    let xs: Vec<u32> = (0..=deg as u32).collect();
    let ys: Vec<u32> = xs
        .iter()
        .map(|&x| {
            let mut q = point.to_vec();
            q[var] = x;
            f(&q)
        })
        .collect();
    fp::interpolate(&xs, &ys, p)
}

/// Restriction of `f` to the line through `point` along `var`, with the
/// degree found on the fly: nodes are added until three consecutive Newton
/// coefficients vanish.
fn restrict_adaptive(f: &BlackBox, point: &[u32], var: usize, p: u32) -> Option<Vec<u32>> {
    let pp = p as u64;
    let (mut xs, mut ys, mut dd) = (Vec::<u32>::new(), Vec::<u32>::new(), Vec::<u64>::new());
    let mut zeros = 0;
    let mut q = point.to_vec();
    for x in 0..(MAX_ELIMINATION_DEGREE as u32 + 4).min(p) {
        q[var] = x;
        let y = f(&q) as u64;
        // Newton form at x and the product of (x - x_i).
        let (mut acc, mut prod) = (0u64, 1u64);
        for (i, &c) in dd.iter().enumerate().rev() {
            acc = (acc * ((x as u64 + pp - xs[i] as u64) % pp) + c) % pp;
        }
        for &xi in &xs {
            prod = prod * ((x as u64 + pp - xi as u64) % pp) % pp;
        }
        let c = (y + pp - acc) % pp * mod_inv(prod as u32, p).expect("distinct nodes") as u64 % pp;
        xs.push(x);
        ys.push(y as u32);
        dd.push(c);
        zeros = if c == 0 { zeros + 1 } else { 0 };
        if zeros == 3 {
            let len = xs.len() - 3;
            return Some(fp::interpolate(&xs[..len], &ys[..len], p));
        }
    }
    None
}

/// Degree of `f` in `var` at a random point.
fn probe_degree(f: &BlackBox, arity: usize, var: usize, p: u32, rng: &mut ChaCha8Rng) -> Option<usize> {
    let point: Vec<u32> = (0..arity).map(|_| rng.gen_range(0..p)).collect();
    Some(restrict_adaptive(f, &point, var, p)?.len().saturating_sub(1))
}

/// A common zero of `fs` (as many functions as unknowns), by successive
/// resultants on the last unknown followed by back-substitution.
fn common_zero(fs: &[BlackBox], p: u32, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let k = fs.len();
    if k == 0 {
        return Some(Vec::new());
    }
    if k == 1 {
        let g = restrict_adaptive(&fs[0], &[0], 0, p)?;
        // A constant eliminant: every value works if it vanishes, none otherwise.
        let roots = match g.len() {
            0 => vec![rng.gen_range(0..p)],
            1 => Vec::new(),
            _ => fp::roots(&g, p),
        };
        return roots.choose(rng).map(|&x| vec![x]);
    }
    let last = k - 1;
    let degs: Vec<usize> = fs.iter().map(|f| probe_degree(f, k, last, p, rng)).collect::<Option<_>>()?;
    let pivot = (0..k).filter(|&i| degs[i] > 0).min_by_key(|&i| degs[i])?;
    let reduced: Vec<BlackBox> = (0..k)
        .filter(|&i| i != pivot)
        .map(|i| {
            let (f, g) = (fs[pivot].clone(), fs[i].clone());
            let (df, dg) = (degs[pivot], degs[i]);
            let bb: BlackBox = if dg == 0 {
                Arc::new(move |x: &[u32]| {
                    let mut q = x.to_vec();
                    q.push(0);
                    g(&q)
                })
            } else {
                Arc::new(move |x: &[u32]| {
                    let mut q = x.to_vec();
                    q.push(0);
                    let a = restrict(&f, &q, last, df, p);
                    let b = restrict(&g, &q, last, dg, p);
                    fp::resultant(&a, df, &b, dg, p)
                })
            };
            bb
        })
        .collect();
    let head = if reduced.is_empty() { Vec::new() } else { common_zero(&reduced, p, rng)? };
    let mut point = head.clone();
    point.push(0);
    let mut g: Vec<u32> = Vec::new();
    for (f, &d) in fs.iter().zip(&degs) {
        let u = restrict(f, &point, last, d.max(1), p);
        g = if g.is_empty() { u } else { fp::gcd(&g, &u, p) };
    }
    let roots = if g.is_empty() { vec![rng.gen_range(0..p)] } else { fp::roots(&g, p) };
    let root = *roots.choose(rng)?;
    point[last] = root;
    Some(point)
}

/// Coefficient positions solved for, alternating between the leading and
/// the trailing ones; both give eliminants of low degree.
fn solve_positions(n: usize, k: usize, attempt: usize) -> Vec<usize> {
    if attempt.is_multiple_of(2) {
        (0..k).collect()
    } else {
        (n + 1 - k..=n).rev().collect()
    }
}

/// A random form over `F_p` at which every invariant of `zeroify` vanishes.
pub fn sample_constrained_form(
    n: usize,
    p: u32,
    zeroify: &Family,
    rng: &mut ChaCha8Rng,
    attempts: usize,
) -> Result<HomPoly> {
    for (i, (label, _)) in zeroify.members.iter().enumerate() {
        if zeroify.bidegree(i).1 != 0 {
            return Err(RankError::NotInvariant(label.clone()));
        }
    }
    if zeroify.is_empty() {
        return Ok(HomPoly::random_mod_p(p, n, rng));
    }
    let k = zeroify.len();
    assert!(k <= n + 1, "more constraints than coefficients");
    let program = Arc::new(zeroify.program.clone());
    for attempt in 0..attempts {
        let positions = solve_positions(n, k, attempt);
        let base: Vec<u32> = (0..=n).map(|_| rng.gen_range(0..p)).collect();
        let fs: Vec<BlackBox> = zeroify
            .members
            .iter()
            .map(|(_, node)| {
                let (program, base, positions, node) = (program.clone(), base.clone(), positions.clone(), *node);
                let bb: BlackBox = Arc::new(move |x: &[u32]| {
                    let mut c = base.clone();
                    for (&pos, &v) in positions.iter().zip(x) {
                        c[pos] = v;
                    }
                    let form = HomPoly::from_mod_p(p, c).expect("prime modulus");
                    let v = program.evaluate_nodes(&form, &[node]).expect("invariant evaluates");
                    v[0].mod_p_values().expect("mod p values")[0]
                });
                bb
            })
            .collect();
        let Some(sol) = common_zero(&fs, p, rng) else { continue };
        let mut c = base.clone();
        for (&pos, &v) in positions.iter().zip(&sol) {
            c[pos] = v;
        }
        let form = HomPoly::from_mod_p(p, c)?;
        let values = zeroify.evaluate(&form)?;
        if values.iter().all(|v| v.is_zero()) {
            return Ok(form);
        }
    }
    Err(RankError::ConstraintBudget(attempts))
}

/// Description of the quotient a verification works in.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionInfo {
    pub prime: u32,
    pub hsop_degrees: Vec<usize>,
    pub zeroified: Vec<String>,
}

/// Random forms shared by all cells of a run.
#[derive(Clone, Debug)]
pub struct FormPool {
    pub n: usize,
    pub forms: Vec<HomPoly>,
    pub reductions: ReductionInfo,
    pub seed: u64,
}

impl FormPool {
    pub fn generic(n: usize, p: u32, count: usize, seed: u64) -> Self {
        let forms = (0..count)
            .map(|i| HomPoly::random_mod_p(p, n, &mut ChaCha8Rng::seed_from_u64(cell_seed(seed, i, 0))))
            .collect();
        FormPool { n, forms, reductions: ReductionInfo { prime: p, ..Default::default() }, seed }
    }

    /// Forms annihilating the invariants of `zeroify` (of degrees `hsop_degrees`).
    pub fn constrained(n: usize, p: u32, zeroify: &Family, count: usize, seed: u64) -> Result<Self> {
        let forms = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, i, 1));
                sample_constrained_form(n, p, zeroify, &mut rng, 64)
            })
            .collect::<Result<Vec<_>>>()?;
        let reductions = ReductionInfo {
            prime: p,
            hsop_degrees: (0..zeroify.len()).map(|i| zeroify.bidegree(i).0).collect(),
            zeroified: zeroify.members.iter().map(|(l, _)| l.clone()).collect(),
        };
        Ok(FormPool { n, forms, reductions, seed })
    }

    pub fn prime(&self) -> u32 {
        self.reductions.prime
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

/// A family together with its values at every form of a pool.
pub struct EvaluatedFamily<'a> {
    pub family: &'a Family,
    pub pool: &'a FormPool,
    /// `values[form][member]`.
    pub values: Vec<Vec<HomPoly>>,
    /// Members vanishing at every form of the pool.
    pub vanishing: Vec<bool>,
}

impl<'a> EvaluatedFamily<'a> {
    pub fn new(family: &'a Family, pool: &'a FormPool) -> Result<Self> {
        let values = pool.forms.par_iter().map(|f| family.evaluate(f)).collect::<std::result::Result<Vec<_>, _>>()?;
        let vanishing = (0..family.len()).map(|i| values.iter().all(|row| row[i].is_zero())).collect();
        Ok(EvaluatedFamily { family, pool, values, vanishing })
    }
}

/// A monomial in family members: `(member index, exponent)`, sorted.
pub type Monomial = Vec<(usize, u32)>;

pub fn render_monomial(family: &Family, mono: &Monomial) -> String {
    let parts: Vec<String> = mono
        .iter()
        .map(|&(i, e)| if e == 1 { family.label(i).to_string() } else { format!("pow({}, {e})", family.label(i)) })
        .collect();
    match parts.len() {
        0 => "1".to_string(),
        _ => parts.into_iter().reduce(|a, b| format!("mul({a}, {b})")).unwrap(),
    }
}

/// Counts of monomials in the given bidegrees by suffix of the generator
/// list: `table[k][d][m]` counts monomials of bidegree `(d, m)` in
/// generators `k..`.
pub struct MonomialTable {
    gens: Vec<(usize, usize, usize)>,
    d: usize,
    m: usize,
    table: Vec<f64>,
}

impl MonomialTable {
    /// `gens`: `(member index, degree, order)` with positive degrees.
    pub fn new(gens: Vec<(usize, usize, usize)>, d: usize, m: usize) -> Self {
        let g = gens.len();
        let stride = (d + 1) * (m + 1);
        let mut table = vec![0f64; (g + 1) * stride];
        table[g * stride] = 1.0;
        for k in (0..g).rev() {
            let (_, gd, gm) = gens[k];
            for dd in 0..=d {
                for mm in 0..=m {
                    let mut v = table[(k + 1) * stride + dd * (m + 1) + mm];
                    if gd <= dd && gm <= mm {
                        v += table[k * stride + (dd - gd) * (m + 1) + (mm - gm)];
                    }
                    table[k * stride + dd * (m + 1) + mm] = v;
                }
            }
        }
        MonomialTable { gens, d, m, table }
    }

    fn at(&self, k: usize, d: usize, m: usize) -> f64 {
        self.table[k * (self.d + 1) * (self.m + 1) + d * (self.m + 1) + m]
    }

    /// Number of monomials of bidegree `(d, m)` (as a float; may be huge).
    pub fn count(&self, d: usize, m: usize) -> f64 {
        self.at(0, d, m)
    }

    pub fn sample(&self, d: usize, m: usize, rng: &mut impl Rng) -> Option<Monomial> {
        if self.count(d, m) == 0.0 {
            return None;
        }
        let (mut k, mut dd, mut mm) = (0, d, m);
        let mut out: Monomial = Vec::new();
        while dd > 0 || mm > 0 {
            let total = self.at(k, dd, mm);
            let skip = self.at(k + 1, dd, mm);
            if rng.gen::<f64>() * total < skip {
                k += 1;
                continue;
            }
            let (idx, gd, gm) = self.gens[k];
            match out.last_mut() {
                Some((i, e)) if *i == idx => *e += 1,
                _ => out.push((idx, 1)),
            }
            dd -= gd;
            mm -= gm;
        }
        Some(out)
    }

    /// Every monomial of bidegree `(d, m)`.
    pub fn enumerate(&self, d: usize, m: usize) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur: Monomial = Vec::new();
        self.walk(0, d, m, &mut cur, &mut out);
        out
    }

    fn walk(&self, k: usize, d: usize, m: usize, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if d == 0 && m == 0 {
            out.push(cur.clone());
            return;
        }
        if k == self.gens.len() || self.at(k, d, m) == 0.0 {
            return;
        }
        self.walk(k + 1, d, m, cur, out);
        let (idx, gd, gm) = self.gens[k];
        let mut e = 0u32;
        let (mut dd, mut mm) = (d, m);
        while gd <= dd && gm <= mm {
            dd -= gd;
            mm -= gm;
            e += 1;
            cur.push((idx, e));
            self.walk(k + 1, dd, mm, cur, out);
            cur.pop();
        }
    }
}

/// Outcome of a dimension check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCertificate {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub target_dim: usize,
    pub achieved_rank: usize,
    pub complete: bool,
    pub witnesses: Vec<String>,
    pub reductions: ReductionInfo,
    pub seed: u64,
    pub forms: usize,
    pub draws: usize,
}

/// Evaluation matrix of one cell against a form pool.
pub struct SpanSession<'a> {
    pub d: usize,
    pub m: usize,
    pub target: usize,
    pool: &'a FormPool,
    forms: usize,
    matrix: EvalMatrix,
    witnesses: Vec<String>,
    draws: usize,
    seed: u64,
}

impl<'a> SpanSession<'a> {
    pub fn new(pool: &'a FormPool, d: usize, m: usize, target: usize, seed: u64) -> Result<Self> {
        let forms = forms_needed(target, m);
        if pool.len() < forms {
            return Err(RankError::PoolTooSmall { have: pool.len(), need: forms });
        }
        Ok(SpanSession {
            d,
            m,
            target,
            pool,
            forms,
            matrix: EvalMatrix::new(pool.prime(), forms * (m + 1)),
            witnesses: Vec::new(),
            draws: 0,
            seed,
        })
    }

    pub fn forms(&self) -> &[HomPoly] {
        &self.pool.forms[..self.forms]
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn is_complete(&self) -> bool {
        self.matrix.rank() >= self.target
    }

    pub fn matrix(&self) -> &EvalMatrix {
        &self.matrix
    }

    pub fn witnesses(&self) -> &[String] {
        &self.witnesses
    }

    /// Row vector from the values at the session's forms.
    pub fn row(&self, values: &[HomPoly]) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.matrix.cols());
        for h in values.iter().take(self.forms) {
            assert_eq!(h.order(), self.m, "value of the wrong order");
            v.extend_from_slice(h.mod_p_values().expect("mod p values"));
        }
        v
    }

    pub fn in_span(&self, values: &[HomPoly]) -> bool {
        self.matrix.in_span(&self.row(values))
    }

    /// Record `label` as a witness if its values raise the rank.
    pub fn offer(&mut self, label: impl Into<String>, values: &[HomPoly]) -> bool {
        self.draws += 1;
        let row = self.row(values);
        let accepted = self.matrix.try_insert(row);
        if accepted {
            self.witnesses.push(label.into());
        }
        accepted
    }

    pub fn certificate(&self) -> SpanCertificate {
        SpanCertificate {
            n: self.pool.n,
            d: self.d,
            m: self.m,
            target_dim: self.target,
            achieved_rank: self.matrix.rank(),
            complete: self.is_complete(),
            witnesses: self.witnesses.clone(),
            reductions: self.pool.reductions.clone(),
            seed: self.seed,
            forms: self.forms,
            draws: self.draws,
        }
    }
}

/// Values of a monomial at the first `forms` forms.
pub fn monomial_values(ev: &EvaluatedFamily<'_>, mono: &Monomial, forms: usize) -> Result<Vec<HomPoly>> {
    ev.values[..forms]
        .iter()
        .map(|vals| {
            let mut acc = HomPoly::one(vals[0].ring());
            for &(i, e) in mono {
                acc = acc.mul(&vals[i].pow(e)?)?;
            }
            Ok(acc)
        })
        .collect()
}

/// How candidate covariants of a cell are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Monomials in the members: they span the cell when the family
    /// generates the algebra.
    #[default]
    Monomials,
    /// Random transvectants `(U, V)_r` of products of non-invariant members.
    Transvectants,
}

/// Spanning check: candidates of bidegree `(d, m)` are evaluated at
/// pool forms until the rank reaches `target` or `budget` draws are spent.
/// In monomial mode, a cell with at most `budget` monomials has all of them
/// tried, in random order.
pub fn verify_dimension<'a>(
    ev: &EvaluatedFamily<'a>,
    d: usize,
    m: usize,
    target: usize,
    budget: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<(SpanCertificate, SpanSession<'a>)> {
    let mut session = SpanSession::new(ev.pool, d, m, target, seed)?;
    if target == 0 {
        return Ok((session.certificate(), session));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forms = session.forms;
    let batch = rayon::current_num_threads().max(1) * 4;
    if sampling == Sampling::Transvectants {
        let sampler = TransvectantSampler::new(ev.family, d, m, &ev.vanishing);
        let mut seen: HashSet<TransvectantShape> = HashSet::new();
        let mut spent = 0;
        while sampler.is_feasible() && !session.is_complete() && spent < budget {
            let mut shapes = Vec::new();
            while shapes.len() < batch && spent < budget {
                spent += 1;
                let Some(mut shape) = sampler.sample(&mut rng) else { continue };
                shape.0.sort();
                shape.1.sort();
                if seen.insert(shape.clone()) {
                    shapes.push(shape);
                }
            }
            let vals: Vec<Vec<HomPoly>> =
                shapes.par_iter().map(|sh| shape_values(ev, sh, forms)).collect::<Result<_>>()?;
            for (sh, v) in shapes.iter().zip(&vals) {
                if session.is_complete() {
                    break;
                }
                session.offer(render_shape(ev.family, sh), v);
            }
        }
        session.draws = spent;
        return Ok((session.certificate(), session));
    }
    let gens: Vec<(usize, usize, usize)> = (0..ev.family.len())
        .filter(|&i| !ev.vanishing[i])
        .map(|i| {
            let (gd, gm) = ev.family.bidegree(i);
            (i, gd, gm)
        })
        .filter(|&(_, gd, gm)| gd > 0 && gd <= d && gm <= m)
        .collect();
    let table = MonomialTable::new(gens, d, m);
    let total = table.count(d, m);
    let try_batch = |session: &mut SpanSession<'_>, monos: &[Monomial]| -> Result<()> {
        let vals: Vec<Vec<HomPoly>> =
            monos.par_iter().map(|mo| monomial_values(ev, mo, forms)).collect::<Result<_>>()?;
        for (mo, v) in monos.iter().zip(&vals) {
            if session.is_complete() {
                break;
            }
            session.offer(render_monomial(ev.family, mo), v);
        }
        Ok(())
    };
    if total <= budget as f64 {
        let mut all = table.enumerate(d, m);
        all.shuffle(&mut rng);
        for chunk in all.chunks(batch) {
            if session.is_complete() {
                break;
            }
            try_batch(&mut session, chunk)?;
        }
    } else {
        let mut seen: HashSet<Monomial> = HashSet::new();
        let mut spent = 0;
        while !session.is_complete() && spent < budget {
            let mut monos = Vec::new();
            while monos.len() < batch && spent < budget {
                spent += 1;
                let mo = table.sample(d, m, &mut rng).expect("nonempty cell");
                if seen.insert(mo.clone()) {
                    monos.push(mo);
                }
            }
            try_batch(&mut session, &monos)?;
        }
        session.draws = spent;
    }
    Ok((session.certificate(), session))
}

/// Offer each candidate to the session; returns the indices that raised
/// the rank, stopping once the target is reached.
pub fn find_missing_from(candidates: &Family, session: &mut SpanSession<'_>) -> Result<Vec<usize>> {
    let mut added = Vec::new();
    let forms = session.forms().to_vec();
    for i in 0..candidates.len() {
        if session.is_complete() {
            break;
        }
        let node = candidates.members[i].1;
        let values = forms
            .par_iter()
            .map(|f| Ok(candidates.program.evaluate_nodes(f, &[node])?.remove(0)))
            .collect::<Result<Vec<_>>>()?;
        if session.offer(candidates.label(i), &values) {
            added.push(i);
        }
    }
    Ok(added)
}

/// Shape `(U, V, r)` of a random transvectant `(U, V)_r`, with `U` and `V`
/// given as lists of member indices (with repetition).
pub type TransvectantShape = (Vec<usize>, Vec<usize>, usize);

/// Sampler of covariants of one bidegree `(d, m)`: a product of
/// non-invariant members of total degree `d` and order `m' ≥ m` (same
/// parity) is split in two factors `U`, `V` transvected with index
/// `(m' - m) / 2`.
pub struct TransvectantSampler {
    orders: Vec<usize>,
    member_orders: Vec<usize>,
    table: MonomialTable,
    d: usize,
    m: usize,
}

impl TransvectantSampler {
    pub fn new(family: &Family, d: usize, m: usize, exclude: &[bool]) -> Self {
        let gens: Vec<(usize, usize, usize)> = (0..family.len())
            .filter(|&i| !exclude.get(i).copied().unwrap_or(false))
            .map(|i| {
                let (gd, gm) = family.bidegree(i);
                (i, gd, gm)
            })
            .filter(|&(_, gd, gm)| gm > 0 && gd > 0 && gd <= d)
            .collect();
        let max_order = gens.iter().map(|g| g.2).max().unwrap_or(0) * d;
        let table = MonomialTable::new(gens, d, max_order.max(m));
        let orders = (m..=max_order).step_by(2).filter(|&mp| table.count(d, mp) > 0.0).collect();
        let member_orders = (0..family.len()).map(|i| family.bidegree(i).1).collect();
        TransvectantSampler { orders, member_orders, table, d, m }
    }

    pub fn is_feasible(&self) -> bool {
        !self.orders.is_empty()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Option<TransvectantShape> {
        for _ in 0..64 {
            let &mp = self.orders.choose(rng)?;
            let mono = self.table.sample(self.d, mp, rng)?;
            let r = (mp - self.m) / 2;
            let mut factors: Vec<usize> = mono.iter().flat_map(|&(i, e)| std::iter::repeat_n(i, e as usize)).collect();
            for _ in 0..16 {
                factors.shuffle(rng);
                let cut = if factors.len() == 1 { 1 } else { rng.gen_range(1..factors.len()) };
                let (u, v) = factors.split_at(cut);
                let order = |xs: &[usize]| xs.iter().map(|&i| self.member_orders[i]).sum::<usize>();
                if r > 0 && (v.is_empty() || r > order(u).min(order(v))) {
                    continue;
                }
                return Some((u.to_vec(), v.to_vec(), r));
            }
        }
        None
    }
}

fn product_of(
    family: &Family,
    program: &mut CovariantProgram,
    xs: &[usize],
) -> std::result::Result<NodeId, ProgramError> {
    if xs.is_empty() {
        return Ok(program.unit());
    }
    let f: Vec<(NodeId, u32)> = xs.iter().map(|&i| (family.members[i].1, 1)).collect();
    program.product(&f)
}

/// Build `(U, V)_r` inside `program` (which must contain the family's nodes).
pub fn build_shape(family: &Family, program: &mut CovariantProgram, shape: &TransvectantShape) -> Result<NodeId> {
    let a = product_of(family, program, &shape.0)?;
    let b = product_of(family, program, &shape.1)?;
    Ok(program.transvect(a, b, shape.2)?)
}

pub fn render_shape(family: &Family, shape: &TransvectantShape) -> String {
    let mono = |xs: &[usize]| {
        let mut m: Monomial = Vec::new();
        let mut sorted = xs.to_vec();
        sorted.sort();
        for i in sorted {
            match m.last_mut() {
                Some((j, e)) if *j == i => *e += 1,
                _ => m.push((i, 1)),
            }
        }
        render_monomial(family, &m)
    };
    if shape.1.is_empty() && shape.2 == 0 {
        return mono(&shape.0);
    }
    format!("tr({}, {}, {})", mono(&shape.0), mono(&shape.1), shape.2)
}

/// Values of `(U, V)_r` at the first `forms` forms of an evaluated family.
pub fn shape_values(ev: &EvaluatedFamily<'_>, shape: &TransvectantShape, forms: usize) -> Result<Vec<HomPoly>> {
    ev.values[..forms]
        .iter()
        .map(|vals| {
            let prod = |xs: &[usize]| -> Result<HomPoly> {
                let mut acc = HomPoly::one(vals[0].ring());
                for &i in xs {
                    acc = acc.mul(&vals[i])?;
                }
                Ok(acc)
            };
            Ok(prod(&shape.0)?.transvectant(&prod(&shape.1)?, shape.2)?)
        })
        .collect()
}

/// A random covariant of bidegree `(d, m)` built from non-invariant members
/// of `family`, as a standalone program.
pub fn sample_covariant(family: &Family, d: usize, m: usize, rng: &mut impl Rng) -> Result<CovariantProgram> {
    let sampler = TransvectantSampler::new(family, d, m, &[]);
    let shape = sampler.sample(rng).ok_or(RankError::Unreachable { d, m })?;
    let mut program = family.program.clone();
    let root = build_shape(family, &mut program, &shape)?;
    Ok(program.extract(root)?)
}
