//! Monomial relations among the members of a covariant basis, used to
//! prune the `V` side of Gordan transvectants.
//!
//! The basis is totally ordered (see [`order_basis`]). A power relation
//! says that `x^e` lies in the algebra generated by the members below `x`
//! and the lower powers of `x`; a pair relation says that `x^a y^b`, for
//! `x > y`, lies in the algebra generated by the members below `y`.
//! Relations are detected by span membership over `F_p` at random forms:
//! a found relation is certified modulo `p` only.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::MinimalSolution;
use crate::hilbert::springer_dim_u64;
use crate::program::Family;
use crate::rankcheck::{cell_seed, forms_needed, FormPool, Monomial, MonomialTable, RankError, SpanSession};
use crate::scalar_forms::{HomPoly, DEFAULT_PRIME};

pub type Result<T> = std::result::Result<T, RankError>;

/// Order of the invariants of the sextic basis, by degree, largest first.
const SEXTIC_INVARIANT_ORDER: &[usize] = &[15, 10, 6, 4, 2];

/// Data-given order of the invariants of the basis for forms of degree `n`.
pub fn invariant_order(n: usize) -> Option<&'static [usize]> {
    match n {
        6 => Some(SEXTIC_INVARIANT_ORDER),
        _ => None,
    }
}

/// Member indices from largest to smallest: non-invariants by decreasing
/// degree then increasing order, then invariants, either in the order of
/// degrees given by `invariants` or by decreasing degree. Ties keep the
/// family order.
pub fn order_basis(family: &Family, invariants: Option<&[usize]>) -> Vec<usize> {
    let bd = family.bidegrees();
    let mut covs: Vec<usize> = (0..family.len()).filter(|&i| bd[i].1 > 0).collect();
    covs.sort_by_key(|&i| (std::cmp::Reverse(bd[i].0), bd[i].1, i));
    let mut invs: Vec<usize> = (0..family.len()).filter(|&i| bd[i].1 == 0).collect();
    let rank = |d: usize| -> (usize, std::cmp::Reverse<usize>) {
        let pos = invariants.and_then(|o| o.iter().position(|&x| x == d)).unwrap_or(usize::MAX);
        (pos, std::cmp::Reverse(d))
    };
    invs.sort_by_key(|&i| (rank(bd[i].0), i));
    covs.extend(invs);
    covs
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    /// `x^e` in the algebra of the members below `x`, lower powers of `x` allowed.
    Power { x: String, e: u32 },
    /// `x^a y^b` with `x > y` in the algebra of the members below `y`.
    Pair { x: String, a: u32, y: String, b: u32 },
}

/// Evidence for a relation: the cell tested and the draw that found it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCertificate {
    pub d: usize,
    pub m: usize,
    pub prime: u32,
    pub seed: u64,
    pub forms: usize,
    /// Rank of the span the monomial was found in.
    pub span_rank: usize,
    pub cell_dim: usize,
    /// Membership holds modulo `prime` at the drawn forms; not a proof over Q.
    pub mod_p_only: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialRelation {
    pub kind: RelationKind,
    pub certificate: RelationCertificate,
}

impl MonomialRelation {
    /// The forbidden monomial as `(label, exponent)` pairs.
    pub fn monomial(&self) -> Vec<(&str, u32)> {
        match &self.kind {
            RelationKind::Power { x, e } => vec![(x.as_str(), *e)],
            RelationKind::Pair { x, a, y, b } => vec![(x.as_str(), *a), (y.as_str(), *b)],
        }
    }
}

/// A relation set with the basis order it refers to.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSet {
    pub n: usize,
    /// Labels, largest first.
    pub basis_order: Vec<String>,
    pub relations: Vec<MonomialRelation>,
}

impl RelationSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("relations serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn powers(&self) -> usize {
        self.relations.iter().filter(|r| matches!(r.kind, RelationKind::Power { .. })).count()
    }

    pub fn pairs(&self) -> usize {
        self.relations.len() - self.powers()
    }

    /// Forbidden monomials over positions of `labels` (relations naming
    /// other labels are skipped).
    pub fn forbidden(&self, labels: &[String]) -> Vec<Vec<(usize, u32)>> {
        self.relations
            .iter()
            .filter_map(|r| {
                r.monomial()
                    .into_iter()
                    .map(|(l, e)| labels.iter().position(|x| x == l).map(|i| (i, e)))
                    .collect::<Option<Vec<_>>>()
            })
            .collect()
    }
}

/// Shipped relation set among the generators of `Cov(S_k)`, for the
/// bases used as `B` families.
pub fn builtin_relations(k: usize) -> Option<RelationSet> {
    let text = match k {
        6 => include_str!("../data/relations_s6.json"),
        _ => return None,
    };
    Some(RelationSet::from_json(text).expect("shipped relation data parses"))
}

/// Drops every solution whose `β` is a multiple of a forbidden monomial.
pub fn filter_solutions(solutions: &[MinimalSolution], forbidden: &[Vec<(usize, u32)>]) -> Vec<MinimalSolution> {
    solutions
        .iter()
        .filter(|s| !forbidden.iter().any(|f| f.iter().all(|&(i, e)| s.beta[i] >= e as u64)))
        .cloned()
        .collect()
}

/// Search limits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationLimits {
    pub max_power: u32,
    pub max_pair_sum: u32,
    /// Cells of larger dimension are skipped (no verdict).
    pub max_cell_dim: usize,
    /// Above this many candidate monomials a cell is sampled.
    pub product_budget: usize,
}

impl Default for RelationLimits {
    fn default() -> Self {
        RelationLimits { max_power: 12, max_pair_sum: 12, max_cell_dim: 4000, product_budget: 50_000 }
    }
}

/// Which monomials are worth testing; positions are family indices.
pub trait Relevance: Sync {
    fn power(&self, x: usize, e: u32) -> bool;
    fn pair(&self, x: usize, a: u32, y: usize, b: u32) -> bool;
}

/// Every monomial is relevant.
pub struct AllRelevant;

impl Relevance for AllRelevant {
    fn power(&self, _: usize, _: u32) -> bool {
        true
    }

    fn pair(&self, _: usize, _: u32, _: usize, _: u32) -> bool {
        true
    }
}

/// A basis, its order and its values at a pool of random forms.
pub struct RelationContext<'a> {
    pub family: &'a Family,
    /// Family indices, largest first.
    pub order: Vec<usize>,
    rank_of: Vec<usize>,
    pool: FormPool,
    values: Vec<Vec<HomPoly>>,
    pub seed: u64,
    pub limits: RelationLimits,
}

impl<'a> RelationContext<'a> {
    pub fn new(family: &'a Family, order: Vec<usize>, seed: u64, limits: RelationLimits) -> Result<Self> {
        let mut rank_of = vec![0; family.len()];
        for (r, &i) in order.iter().enumerate() {
            rank_of[i] = r;
        }
        let mut ctx = RelationContext {
            family,
            order,
            rank_of,
            pool: FormPool::generic(family.n(), DEFAULT_PRIME, 0, seed),
            values: Vec::new(),
            seed,
            limits,
        };
        ctx.ensure_forms(8)?;
        Ok(ctx)
    }

    fn ensure_forms(&mut self, count: usize) -> Result<()> {
        if self.pool.len() >= count {
            return Ok(());
        }
        let pool = FormPool::generic(self.family.n(), DEFAULT_PRIME, count, self.seed);
        let fresh: Vec<Vec<HomPoly>> = pool.forms[self.values.len()..]
            .par_iter()
            .map(|f| self.family.evaluate(f))
            .collect::<std::result::Result<_, _>>()?;
        self.values.extend(fresh);
        self.pool = pool;
        Ok(())
    }

    fn label(&self, i: usize) -> String {
        self.family.label(i).to_string()
    }

    fn mono_values(&self, mono: &Monomial, forms: usize) -> Result<Vec<HomPoly>> {
        (0..forms)
            .map(|j| {
                let vals = &self.values[j];
                let mut acc = HomPoly::one(vals[0].ring());
                for &(i, e) in mono {
                    acc = acc.mul(&vals[i].pow(e)?)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Whether `target` lies in the span of `prefix · M` over monomials
    /// `M` in the members ranked strictly below `rank`, for each prefix.
    /// `None` when the cell is too large to decide.
    fn in_span(
        &mut self,
        target: &Monomial,
        prefixes: &[Monomial],
        rank: usize,
    ) -> Result<Option<RelationCertificate>> {
        let n = self.family.n();
        let bd = self.family.bidegrees();
        let bideg = |mono: &Monomial| {
            mono.iter().fold((0, 0), |(d, m), &(i, e)| (d + bd[i].0 * e as usize, m + bd[i].1 * e as usize))
        };
        let (d, m) = bideg(target);
        let dim = springer_dim_u64(n, d, m) as usize;
        if dim > self.limits.max_cell_dim {
            return Ok(None);
        }
        let forms = forms_needed(dim, m);
        self.ensure_forms(forms)?;
        let seed = cell_seed(self.seed, d, m);
        let mut session = SpanSession::new(&self.pool, d, m, dim, seed)?;
        let row = session.row(&self.mono_values(target, forms)?);
        let below: Vec<(usize, usize, usize)> =
            self.order.iter().skip(rank + 1).map(|&i| (i, bd[i].0, bd[i].1)).filter(|&(_, gd, _)| gd > 0).collect();
        let certificate = |session: &SpanSession<'_>| RelationCertificate {
            d,
            m,
            prime: self.pool.prime(),
            seed,
            forms,
            span_rank: session.rank(),
            cell_dim: dim,
            mod_p_only: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = rayon::current_num_threads().max(1) * 8;
        for prefix in prefixes {
            let (pd, pm) = bideg(prefix);
            if pd > d || pm > m {
                continue;
            }
            let (rd, rm) = (d - pd, m - pm);
            let table = MonomialTable::new(below.clone(), rd, rm);
            let count = table.count(rd, rm);
            if count == 0.0 {
                continue;
            }
            let join = |mono: Monomial| -> Monomial {
                let mut out = prefix.clone();
                out.extend(mono);
                out
            };
            let offer = |session: &mut SpanSession<'_>, monos: Vec<Monomial>| -> Result<usize> {
                let vals: Vec<Vec<HomPoly>> =
                    monos.par_iter().map(|mo| self.mono_values(mo, forms)).collect::<Result<_>>()?;
                Ok(vals.iter().map(|v| session.offer("", v) as usize).sum())
            };
            if count <= self.limits.product_budget as f64 {
                let mut all = table.enumerate(rd, rm);
                all.shuffle(&mut rng);
                for chunk in all.chunks(batch) {
                    offer(&mut session, chunk.iter().cloned().map(join).collect())?;
                    if session.is_complete() || session.matrix().in_span(&row) {
                        return Ok(Some(certificate(&session)));
                    }
                }
            } else {
                let mut seen: HashSet<Monomial> = HashSet::new();
                let mut stall = 0;
                while stall < 4 * dim + 256 {
                    let monos: Vec<Monomial> = (0..batch)
                        .filter_map(|_| table.sample(rd, rm, &mut rng))
                        .filter(|mo| seen.insert(mo.clone()))
                        .map(join)
                        .collect();
                    let tried = monos.len().max(1);
                    let got = offer(&mut session, monos)?;
                    if session.is_complete() || session.matrix().in_span(&row) {
                        return Ok(Some(certificate(&session)));
                    }
                    stall = if got > 0 { 0 } else { stall + tried };
                }
            }
        }
        Ok(session.matrix().in_span(&row).then(|| certificate(&session)))
    }

    /// The least `e` in `2..=e_max` with `x^e` in the algebra of the
    /// members below `x` and lower powers of `x`.
    pub fn power_relation(
        &mut self,
        x: usize,
        e_max: u32,
        relevance: &dyn Relevance,
    ) -> Result<Option<MonomialRelation>> {
        if self.family.bidegree(x).0 == 0 {
            return Ok(None);
        }
        let rank = self.rank_of[x];
        for e in 2..=e_max {
            if !relevance.power(x, e) {
                break;
            }
            let prefixes: Vec<Monomial> = (0..e).map(|k| if k == 0 { Vec::new() } else { vec![(x, k)] }).collect();
            if let Some(certificate) = self.in_span(&vec![(x, e)], &prefixes, rank)? {
                return Ok(Some(MonomialRelation { kind: RelationKind::Power { x: self.label(x), e }, certificate }));
            }
        }
        Ok(None)
    }

    /// Whether `x^a y^b` (with `x` ranked above `y`) lies in the algebra of
    /// the members below `y`.
    pub fn pair_relation(&mut self, x: usize, a: u32, y: usize, b: u32) -> Result<Option<MonomialRelation>> {
        assert!(self.rank_of[x] < self.rank_of[y], "x must rank above y");
        let target: Monomial = if x < y { vec![(x, a), (y, b)] } else { vec![(y, b), (x, a)] };
        let found = self.in_span(&target, &[Vec::new()], self.rank_of[y])?;
        Ok(found.map(|certificate| MonomialRelation {
            kind: RelationKind::Pair { x: self.label(x), a, y: self.label(y), b },
            certificate,
        }))
    }

    /// All power relations, then the minimal pair relations not implied by
    /// them, within the limits; `relevance` restricts the pair search.
    pub fn find_all(&mut self, relevance: &dyn Relevance) -> Result<RelationSet> {
        let mut relations = Vec::new();
        let mut power_exp = vec![u32::MAX; self.family.len()];
        for k in 0..self.order.len() {
            let x = self.order[k];
            if let Some(r) = self.power_relation(x, self.limits.max_power, &AllRelevant)? {
                if let RelationKind::Power { e, .. } = r.kind {
                    power_exp[x] = e;
                }
                relations.push(r);
            }
        }
        for kx in 0..self.order.len() {
            for ky in kx + 1..self.order.len() {
                let (x, y) = (self.order[kx], self.order[ky]);
                if self.family.bidegree(x).0 == 0 || self.family.bidegree(y).0 == 0 {
                    continue;
                }
                // Minimal exponent pairs: for each a, the least b.
                let mut b_cap = power_exp[y].min(self.limits.max_pair_sum);
                for a in 1..power_exp[x].min(self.limits.max_pair_sum) {
                    let mut found = None;
                    for b in 1..b_cap.min(self.limits.max_pair_sum + 1 - a) {
                        if !relevance.pair(x, a, y, b) {
                            break;
                        }
                        if let Some(r) = self.pair_relation(x, a, y, b)? {
                            found = Some((b, r));
                            break;
                        }
                    }
                    if let Some((b, r)) = found {
                        relations.push(r);
                        b_cap = b;
                        if b == 1 {
                            break;
                        }
                    }
                }
            }
        }
        Ok(RelationSet {
            n: self.family.n(),
            basis_order: self.order.iter().map(|&i| self.label(i)).collect(),
            relations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::Family;

    #[test]
    fn single_member_orders_to_itself() {
        let mut fam = Family::new(4);
        let f = fam.program.leaf();
        fam.push("f", f);
        assert_eq!(order_basis(&fam, None), vec![0]);
    }

    #[test]
    fn invariants_follow_the_given_order() {
        let mut fam = Family::new(4);
        let f = fam.program.leaf();
        let i2 = fam.program.transvect(f, f, 4).unwrap();
        let h = fam.program.transvect(f, f, 2).unwrap();
        let i3 = fam.program.transvect(h, f, 4).unwrap();
        fam.push("i2", i2);
        fam.push("i3", i3);
        assert_eq!(order_basis(&fam, None), vec![1, 0]);
        assert_eq!(order_basis(&fam, Some(&[2, 3])), vec![0, 1]);
    }

    #[test]
    fn free_generator_has_no_power_relation() {
        let mut fam = Family::new(2);
        let f = fam.program.leaf();
        fam.push("f", f);
        let order = order_basis(&fam, None);
        let mut ctx = RelationContext::new(&fam, order, 3, RelationLimits::default()).unwrap();
        assert!(ctx.power_relation(0, 6, &AllRelevant).unwrap().is_none());
    }

    #[test]
    fn filter_drops_multiples() {
        let sol = |beta: Vec<u64>| MinimalSolution { alpha: vec![1], beta, u: 0, v: 0, r: 0 };
        let sols = vec![sol(vec![21, 0]), sol(vec![1, 3]), sol(vec![0, 5])];
        let kept = filter_solutions(&sols, &[vec![(0, 2)]]);
        assert_eq!(kept, sols[1..].to_vec());
        assert_eq!(filter_solutions(&sols, &[]), sols);
    }
}
