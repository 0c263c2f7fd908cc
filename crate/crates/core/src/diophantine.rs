//! Hilbert bases of the two-equation systems
//! `Σ a_i α_i = u + r`, `Σ b_j β_j = v + r` in nonnegative integers.
//!
//! Solutions are enumerated by a depth-first walk that adds `a`-units while
//! the running balance `Σ a α − Σ b β` is nonpositive and `b`-units
//! otherwise. A minimal solution never repeats a partial balance (the
//! segment in between would be a smaller solution), which bounds the depth
//! by `max a + max b`. Each visited `(α, β)` is then tested against all its
//! sub-multisets through a subset-balance table.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::program::{CovariantProgram, NodeId, ProgramError};
use crate::scalar_forms::binomial_big;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiophError {
    #[error("coefficients must be positive")]
    NonPositive,
    #[error("system needs coefficients on both sides")]
    EmptySide,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophSystem {
    pub lhs1: Vec<u64>,
    pub lhs2: Vec<u64>,
}

impl DiophSystem {
    pub fn new(lhs1: Vec<u64>, lhs2: Vec<u64>) -> Result<Self, DiophError> {
        if lhs1.is_empty() || lhs2.is_empty() {
            return Err(DiophError::EmptySide);
        }
        if lhs1.iter().chain(&lhs2).any(|&c| c == 0) {
            return Err(DiophError::NonPositive);
        }
        Ok(DiophSystem { lhs1, lhs2 })
    }

    /// Whether `sol` satisfies both equations.
    pub fn satisfies(&self, sol: &MinimalSolution) -> bool {
        sol.alpha.len() == self.lhs1.len()
            && sol.beta.len() == self.lhs2.len()
            && dot(&self.lhs1, &sol.alpha) == sol.u + sol.r
            && dot(&self.lhs2, &sol.beta) == sol.v + sol.r
    }
}

fn dot(a: &[u64], x: &[u64]) -> u64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MinimalSolution {
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub u: u64,
    pub v: u64,
    pub r: u64,
}

impl MinimalSolution {
    fn components(&self) -> impl Iterator<Item = u64> + '_ {
        self.alpha.iter().chain(&self.beta).copied().chain([self.u, self.v, self.r])
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MinimalSolution) -> bool {
        self.components().zip(other.components()).all(|(a, b)| a <= b)
    }

    pub fn norm(&self) -> u64 {
        self.components().sum()
    }
}

/// Deduplicated system with the multiplicity of each coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Companion {
    pub system: DiophSystem,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    /// Original indices grouped under each companion variable.
    pub groups1: Vec<Vec<usize>>,
    pub groups2: Vec<Vec<usize>>,
}

fn group(coeffs: &[u64]) -> (Vec<u64>, Vec<Vec<usize>>) {
    let mut distinct: Vec<u64> = coeffs.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let groups = distinct.iter().map(|c| (0..coeffs.len()).filter(|&i| coeffs[i] == *c).collect()).collect();
    (distinct, groups)
}

pub fn companion(sys: &DiophSystem) -> Companion {
    let (lhs1, groups1) = group(&sys.lhs1);
    let (lhs2, groups2) = group(&sys.lhs2);
    Companion {
        s: groups1.iter().map(Vec::len).collect(),
        t: groups2.iter().map(Vec::len).collect(),
        system: DiophSystem { lhs1, lhs2 },
        groups1,
        groups2,
    }
}

/// The Hilbert basis, sorted lexicographically by `(α, β, u, v, r)`.
pub fn hilbert_basis(sys: &DiophSystem) -> Vec<MinimalSolution> {
    let mut search = Search::new(sys);
    let mut out = Vec::new();
    for (i, &a) in sys.lhs1.iter().enumerate() {
        let mut alpha = vec![0; sys.lhs1.len()];
        alpha[i] = 1;
        out.push(MinimalSolution { alpha, beta: vec![0; sys.lhs2.len()], u: a, v: 0, r: 0 });
    }
    for (j, &b) in sys.lhs2.iter().enumerate() {
        let mut beta = vec![0; sys.lhs2.len()];
        beta[j] = 1;
        out.push(MinimalSolution { alpha: vec![0; sys.lhs1.len()], beta, u: 0, v: b, r: 0 });
    }
    search.dfs(0, 0, 0, &mut out);
    out.sort();
    out
}

struct Search<'a> {
    sys: &'a DiophSystem,
    alpha: Vec<u64>,
    beta: Vec<u64>,
    /// Balances along the current path, starting with 0.
    path: Vec<i64>,
    /// `tables[k][d + offset]`: bitmask of sub-multiset sizes of the first
    /// `k` units with balance `d`.
    tables: Vec<Vec<u64>>,
    offset: i64,
}

impl<'a> Search<'a> {
    fn new(sys: &'a DiophSystem) -> Self {
        let amax = *sys.lhs1.iter().max().unwrap() as i64;
        let bmax = *sys.lhs2.iter().max().unwrap() as i64;
        let depth = amax + bmax;
        assert!(depth < 64, "coefficients too large for the size bitmask");
        let offset = depth * bmax;
        let width = (offset + depth * amax + 1) as usize;
        let mut first = vec![0u64; width];
        first[offset as usize] = 1;
        Search {
            sys,
            alpha: vec![0; sys.lhs1.len()],
            beta: vec![0; sys.lhs2.len()],
            path: vec![0],
            tables: vec![first],
            offset,
        }
    }

    fn push_unit(&mut self, value: i64) {
        let prev = self.tables.last().unwrap();
        let mut next = prev.clone();
        let w = next.len() as i64;
        for (idx, &mask) in prev.iter().enumerate() {
            if mask != 0 {
                let to = idx as i64 + value;
                if (0..w).contains(&to) {
                    next[to as usize] |= mask << 1;
                }
            }
        }
        self.tables.push(next);
    }

    /// Range of `u` for which the current `(α, β)` is minimal.
    fn admissible_u(&self, a_total: i64, units: usize) -> Option<(i64, i64)> {
        let delta = self.path.last().copied().unwrap();
        let table = self.tables.last().unwrap();
        let proper = !(1u64 | (1u64 << units));
        let (lo, hi) = (delta.min(0), delta.max(0));
        let mut mm = i64::MAX;
        for (idx, &mask) in table.iter().enumerate() {
            if mask & proper == 0 {
                continue;
            }
            let d = idx as i64 - self.offset;
            if (lo..=hi).contains(&d) {
                return None;
            }
            mm = mm.min(d.max(delta - d));
        }
        let umin = delta.max(0);
        let umax = a_total.min(mm - 1);
        (umin <= umax).then_some((umin, umax))
    }

    fn dfs(&mut self, a_from: usize, b_from: usize, a_total: i64, out: &mut Vec<MinimalSolution>) {
        let units = self.path.len() - 1;
        let s = *self.path.last().unwrap();
        let has_a = self.alpha.iter().any(|&x| x > 0);
        let has_b = self.beta.iter().any(|&x| x > 0);
        if has_a && has_b {
            if let Some((umin, umax)) = self.admissible_u(a_total, units) {
                let b_total = a_total - s;
                for u in umin..=umax {
                    let r = a_total - u;
                    out.push(MinimalSolution {
                        alpha: self.alpha.clone(),
                        beta: self.beta.clone(),
                        u: u as u64,
                        v: (b_total - r) as u64,
                        r: r as u64,
                    });
                }
            }
        }
        if s == 0 && units > 0 {
            return;
        }
        if s <= 0 {
            for i in a_from..self.sys.lhs1.len() {
                let a = self.sys.lhs1[i] as i64;
                let ns = s + a;
                if ns != 0 && self.path.contains(&ns) {
                    continue;
                }
                self.alpha[i] += 1;
                self.path.push(ns);
                self.push_unit(a);
                self.dfs(i, b_from, a_total + a, out);
                self.tables.pop();
                self.path.pop();
                self.alpha[i] -= 1;
            }
        } else {
            for j in b_from..self.sys.lhs2.len() {
                let b = self.sys.lhs2[j] as i64;
                let ns = s - b;
                if ns != 0 && self.path.contains(&ns) {
                    continue;
                }
                self.beta[j] += 1;
                self.path.push(ns);
                self.push_unit(-b);
                self.dfs(a_from, j, a_total, out);
                self.tables.pop();
                self.path.pop();
                self.beta[j] -= 1;
            }
        }
    }
}

/// Minimal solutions by exhaustive search over all `(α, β)` with at most
/// `max a + max b` units. Exponential; meant as a cross-check on small systems.
pub fn hilbert_basis_exhaustive(sys: &DiophSystem) -> Vec<MinimalSolution> {
    let amax = *sys.lhs1.iter().max().unwrap();
    let bmax = *sys.lhs2.iter().max().unwrap();
    let budget = (amax + bmax) as usize;
    let (p, q) = (sys.lhs1.len(), sys.lhs2.len());
    let mut all = Vec::new();
    let mut x = vec![0u64; p + q];
    fn rec(k: usize, left: usize, x: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if k == x.len() {
            f(x);
            return;
        }
        for v in 0..=left {
            x[k] = v as u64;
            rec(k + 1, left - v, x, f);
        }
        x[k] = 0;
    }
    rec(0, budget, &mut x, &mut |x: &[u64]| {
        let (alpha, beta) = x.split_at(p);
        let a = dot(&sys.lhs1, alpha);
        let b = dot(&sys.lhs2, beta);
        // r ranges over 0..=min(a, b); u = a - r, v = b - r.
        for r in 0..=a.min(b) {
            let sol = MinimalSolution { alpha: alpha.to_vec(), beta: beta.to_vec(), u: a - r, v: b - r, r };
            if sol.norm() > 0 {
                all.push(sol);
            }
        }
    });
    minimize(all)
}

/// Keep the componentwise-minimal elements, sorted lexicographically.
pub fn minimize(mut sols: Vec<MinimalSolution>) -> Vec<MinimalSolution> {
    sols.sort_by_key(|s| s.norm());
    sols.dedup();
    let mut kept: Vec<MinimalSolution> = Vec::new();
    for s in sols {
        if !kept.iter().any(|k| k.le(&s)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// Number of solutions of the original system lying over `solutions`
/// (minimal solutions of its companion): compositions of each `α_i` into
/// `s(i)` parts and of each `β_j` into `t(j)` parts.
pub fn expansion_count(solutions: &[MinimalSolution], s: &[usize], t: &[usize]) -> BigUint {
    let mut total = BigUint::zero();
    for sol in solutions {
        let mut x = BigUint::one();
        for (&a, &m) in sol.alpha.iter().zip(s) {
            x *= compositions(a, m);
        }
        for (&b, &m) in sol.beta.iter().zip(t) {
            x *= compositions(b, m);
        }
        total += x;
    }
    total
}

fn compositions(k: u64, parts: usize) -> BigUint {
    if parts == 0 {
        return if k == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial_big(k as usize + parts - 1, parts - 1).to_biguint().expect("binomials are nonnegative")
}

/// All weak compositions of `k` into `parts` parts.
fn each_composition(k: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in each_composition(k - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Lift companion solutions to solutions of the original system.
pub fn expand_companion(comp: &Companion, solutions: &[MinimalSolution]) -> Vec<MinimalSolution> {
    let p: usize = comp.s.iter().sum();
    let q: usize = comp.t.iter().sum();
    let mut out = Vec::new();
    for sol in solutions {
        let mut partial = vec![(vec![0u64; p], vec![0u64; q])];
        for (k, g) in comp.groups1.iter().enumerate() {
            let comps = each_composition(sol.alpha[k], g.len());
            partial = partial
                .into_iter()
                .flat_map(|(a, b)| {
                    comps.iter().map(move |c| {
                        let mut a = a.clone();
                        for (idx, v) in g.iter().zip(c) {
                            a[*idx] = *v;
                        }
                        (a, b.clone())
                    })
                })
                .collect();
        }
        for (k, g) in comp.groups2.iter().enumerate() {
            let comps = each_composition(sol.beta[k], g.len());
            partial = partial
                .into_iter()
                .flat_map(|(a, b)| {
                    comps.iter().map(move |c| {
                        let mut b = b.clone();
                        for (idx, v) in g.iter().zip(c) {
                            b[*idx] = *v;
                        }
                        (a.clone(), b)
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|(alpha, beta)| MinimalSolution {
            alpha,
            beta,
            u: sol.u,
            v: sol.v,
            r: sol.r,
        }));
    }
    out.sort();
    out
}

/// `(Π a_i^{α_i}, Π b_j^{β_j})_r` built inside `program`, where `a` and `b`
/// are the nodes of the two families in system order.
pub fn expand_to_transvectants(
    sol: &MinimalSolution,
    program: &mut CovariantProgram,
    a: &[NodeId],
    b: &[NodeId],
) -> Result<NodeId, ProgramError> {
    assert_eq!(sol.alpha.len(), a.len(), "family size does not match the solution");
    assert_eq!(sol.beta.len(), b.len(), "family size does not match the solution");
    let mut build = |fam: &[NodeId], exps: &[u64]| {
        let f: Vec<(NodeId, u32)> =
            fam.iter().zip(exps).filter(|(_, &e)| e > 0).map(|(&n, &e)| (n, e as u32)).collect();
        if f.is_empty() {
            Ok(program.unit())
        } else {
            program.product(&f)
        }
    };
    let u = build(a, &sol.alpha)?;
    let v = build(b, &sol.beta)?;
    program.transvect(u, v, sol.r as usize)
}
