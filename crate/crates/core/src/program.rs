//! Covariants as evaluation programs.
//!
//! A [`CovariantProgram`] is an append-only DAG over the generic form `f`.
//! Nodes are hash-consed, so a program doubles as an arena shared by many
//! covariants (a whole catalog lives in one program).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scalar_forms::{HomPoly, Ring, Scalar, ScalarError};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    Leaf,
    Transvect {
        left: NodeId,
        right: NodeId,
        index: usize,
    },
    /// Factors sorted by node id with positive exponents; empty means 1.
    Product(Vec<(NodeId, u32)>),
    /// Children share one bidegree.
    Sum(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("transvectant index {index} exceeds orders {left} and {right}")]
    IndexTooLarge { index: usize, left: usize, right: usize },
    #[error("sum of covariants with different bidegrees {0:?} and {1:?}")]
    BidegreeMismatch((usize, usize), (usize, usize)),
    #[error("form has degree {got}, program expects {expected}")]
    FormDegree { expected: usize, got: usize },
    #[error("programs over forms of degree {0} and {1} cannot be combined")]
    AmbientMismatch(usize, usize),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

pub type Result<T> = std::result::Result<T, ProgramError>;

#[derive(Clone, Debug)]
pub struct CovariantProgram {
    n: usize,
    nodes: Vec<Node>,
    bideg: Vec<(usize, usize)>,
    index: HashMap<Node, NodeId>,
    root: NodeId,
}

impl CovariantProgram {
    /// The program `f` for forms of degree `n`.
    pub fn new(n: usize) -> Self {
        let mut index = HashMap::new();
        index.insert(Node::Leaf, 0);
        CovariantProgram { n, nodes: vec![Node::Leaf], bideg: vec![(1, n)], index, root: 0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn set_root(&mut self, id: NodeId) -> Result<()> {
        self.check(id)?;
        self.root = id;
        Ok(())
    }

    pub fn with_root(mut self, id: NodeId) -> Result<Self> {
        self.set_root(id)?;
        Ok(self)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn leaf(&self) -> NodeId {
        0
    }

    /// `(degree, order)` of the root.
    pub fn degree_order(&self) -> (usize, usize) {
        self.bideg[self.root]
    }

    pub fn bidegree(&self, id: NodeId) -> (usize, usize) {
        self.bideg[id]
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(ProgramError::UnknownNode(id))
        }
    }

    fn push(&mut self, node: Node, bideg: (usize, usize)) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.bideg.push(bideg);
        id
    }

    pub fn transvect(&mut self, left: NodeId, right: NodeId, index: usize) -> Result<NodeId> {
        self.check(left)?;
        self.check(right)?;
        let (dl, ml) = self.bideg[left];
        let (dr, mr) = self.bideg[right];
        if index > ml.min(mr) {
            return Err(ProgramError::IndexTooLarge { index, left: ml, right: mr });
        }
        if index == 0 {
            return self.product(&[(left, 1), (right, 1)]);
        }
        Ok(self.push(Node::Transvect { left, right, index }, (dl + dr, ml + mr - 2 * index)))
    }

    /// Product of powers; merges repeated factors and flattens nested products.
    pub fn product(&mut self, factors: &[(NodeId, u32)]) -> Result<NodeId> {
        let mut merged: Vec<(NodeId, u32)> = Vec::new();
        let add = |id: NodeId, e: u32, merged: &mut Vec<(NodeId, u32)>| {
            if e == 0 {
                return;
            }
            match merged.iter_mut().find(|(i, _)| *i == id) {
                Some(slot) => slot.1 += e,
                None => merged.push((id, e)),
            }
        };
        for &(id, e) in factors {
            self.check(id)?;
            match &self.nodes[id] {
                Node::Product(inner) => {
                    for &(j, f) in inner {
                        add(j, f * e, &mut merged);
                    }
                }
                _ => add(id, e, &mut merged),
            }
        }
        merged.sort_unstable();
        if merged.len() == 1 && merged[0].1 == 1 {
            return Ok(merged[0].0);
        }
        let (mut d, mut m) = (0, 0);
        for &(id, e) in &merged {
            let (di, mi) = self.bideg[id];
            d += di * e as usize;
            m += mi * e as usize;
        }
        Ok(self.push(Node::Product(merged), (d, m)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.product(&[(a, 1), (b, 1)])
    }

    pub fn pow(&mut self, a: NodeId, e: u32) -> Result<NodeId> {
        self.product(&[(a, e)])
    }

    /// The constant 1, an empty product of bidegree (0, 0).
    pub fn unit(&mut self) -> NodeId {
        self.push(Node::Product(Vec::new()), (0, 0))
    }

    pub fn sum(&mut self, children: &[NodeId]) -> Result<NodeId> {
        for &c in children {
            self.check(c)?;
        }
        let first = *children.first().ok_or(ProgramError::UnknownNode(usize::MAX))?;
        let bd = self.bideg[first];
        for &c in children {
            if self.bideg[c] != bd {
                return Err(ProgramError::BidegreeMismatch(bd, self.bideg[c]));
            }
        }
        if children.len() == 1 {
            return Ok(first);
        }
        Ok(self.push(Node::Sum(children.to_vec()), bd))
    }

    /// Copy the sub-DAG below `id` of `other` into `self`.
    pub fn import(&mut self, other: &CovariantProgram, id: NodeId) -> Result<NodeId> {
        if other.n != self.n {
            return Err(ProgramError::AmbientMismatch(self.n, other.n));
        }
        self.compose(other, id, 0)
    }

    /// Copy the sub-DAG below `id` of `other`, replacing its form by the
    /// covariant `leaf` of `self` (whose order must be `other.n()`).
    pub fn compose(&mut self, other: &CovariantProgram, id: NodeId, leaf: NodeId) -> Result<NodeId> {
        self.check(leaf)?;
        if self.bideg[leaf].1 != other.n {
            return Err(ProgramError::AmbientMismatch(self.bideg[leaf].1, other.n));
        }
        other.check(id)?;
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        for k in other.reachable(&[id]) {
            let new = match &other.nodes[k] {
                Node::Leaf => leaf,
                Node::Transvect { left, right, index } => self.transvect(map[left], map[right], *index)?,
                Node::Product(f) => {
                    let f: Vec<_> = f.iter().map(|(j, e)| (map[j], *e)).collect();
                    if f.is_empty() {
                        self.unit()
                    } else {
                        self.product(&f)?
                    }
                }
                Node::Sum(c) => {
                    let c: Vec<_> = c.iter().map(|j| map[j]).collect();
                    self.sum(&c)?
                }
            };
            map.insert(k, new);
        }
        Ok(map[&id])
    }

    /// Standalone program rooted at `id`.
    pub fn extract(&self, id: NodeId) -> Result<CovariantProgram> {
        let mut out = CovariantProgram::new(self.n);
        let root = out.import(self, id)?;
        out.with_root(root)
    }

    /// Nodes reachable from `targets`, in increasing (topological) order.
    pub fn reachable(&self, targets: &[NodeId]) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = targets.to_vec();
        while let Some(k) = stack.pop() {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            match &self.nodes[k] {
                Node::Leaf => {}
                Node::Transvect { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
                Node::Product(f) => stack.extend(f.iter().map(|(j, _)| *j)),
                Node::Sum(c) => stack.extend(c.iter().copied()),
            }
        }
        (0..self.nodes.len()).filter(|&k| seen[k]).collect()
    }

    /// Value of the root at `form`.
    pub fn evaluate(&self, form: &HomPoly) -> Result<HomPoly> {
        Ok(self.evaluate_nodes(form, &[self.root])?.remove(0))
    }

    pub fn evaluate_nodes(&self, form: &HomPoly, ids: &[NodeId]) -> Result<Vec<HomPoly>> {
        let mut ev = Evaluator::new(self, form)?;
        ids.iter().map(|&id| ev.value(id).cloned()).collect()
    }

    /// DSL text for node `id`, naming nodes through `label` where possible.
    pub fn render(&self, id: NodeId, label: &dyn Fn(NodeId) -> Option<String>) -> String {
        if let Some(l) = label(id) {
            return l;
        }
        match &self.nodes[id] {
            Node::Leaf => "f".to_string(),
            Node::Transvect { left, right, index } => {
                format!("tr({}, {}, {})", self.render(*left, label), self.render(*right, label), index)
            }
            Node::Product(f) => {
                let parts: Vec<String> = f
                    .iter()
                    .map(|&(j, e)| {
                        let base = self.render(j, label);
                        if e == 1 {
                            base
                        } else {
                            format!("pow({base}, {e})")
                        }
                    })
                    .collect();
                match parts.len() {
                    0 => "pow(f, 0)".to_string(),
                    _ => parts.into_iter().reduce(|acc, p| format!("mul({acc}, {p})")).unwrap(),
                }
            }
            Node::Sum(c) => {
                c.iter().map(|&j| self.render(j, label)).reduce(|acc, p| format!("sum({acc}, {p})")).unwrap()
            }
        }
    }

    pub fn to_expr(&self) -> String {
        self.render(self.root, &|_| None)
    }
}

/// Labelled covariants sharing one program.
#[derive(Clone, Debug)]
pub struct Family {
    pub program: CovariantProgram,
    pub members: Vec<(String, NodeId)>,
}

impl Family {
    pub fn new(n: usize) -> Self {
        Family { program: CovariantProgram::new(n), members: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.program.n()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, label: impl Into<String>, node: NodeId) {
        self.members.push((label.into(), node));
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.members.iter().map(|(_, id)| *id).collect()
    }

    pub fn bidegree(&self, i: usize) -> (usize, usize) {
        self.program.bidegree(self.members[i].1)
    }

    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        (0..self.len()).map(|i| self.bidegree(i)).collect()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.members[i].0
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.members.iter().position(|(l, _)| l == label)
    }

    /// Members selected by index, keeping the shared program.
    pub fn subset(&self, keep: &[usize]) -> Family {
        Family { program: self.program.clone(), members: keep.iter().map(|&i| self.members[i].clone()).collect() }
    }

    /// Values of all members at `form`.
    pub fn evaluate(&self, form: &HomPoly) -> Result<Vec<HomPoly>> {
        self.program.evaluate_nodes(form, &self.nodes())
    }

    /// DSL text of member `i`, naming earlier members by label.
    pub fn render(&self, i: usize) -> String {
        let node = self.members[i].1;
        let names: HashMap<NodeId, &str> = self.members[..i].iter().map(|(l, id)| (*id, l.as_str())).collect();
        self.program.render(node, &|id| if id == node { None } else { names.get(&id).map(|s| s.to_string()) })
    }
}

/// Memoized evaluation of one program at one form.
pub struct Evaluator<'a> {
    program: &'a CovariantProgram,
    form: HomPoly,
    memo: Vec<Option<HomPoly>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a CovariantProgram, form: &HomPoly) -> Result<Self> {
        if form.order() != program.n {
            return Err(ProgramError::FormDegree { expected: program.n, got: form.order() });
        }
        Ok(Evaluator { program, form: form.clone(), memo: vec![None; program.len()] })
    }

    pub fn ring(&self) -> Ring {
        self.form.ring()
    }

    pub fn value(&mut self, id: NodeId) -> Result<&HomPoly> {
        self.program.check(id)?;
        if self.memo.len() < self.program.len() {
            self.memo.resize(self.program.len(), None);
        }
        if self.memo[id].is_none() {
            for k in self.program.reachable(&[id]) {
                if self.memo[k].is_some() {
                    continue;
                }
                let v = self.compute(k)?;
                self.memo[k] = Some(v);
            }
        }
        Ok(self.memo[id].as_ref().unwrap())
    }

    fn get(&self, k: NodeId) -> &HomPoly {
        self.memo[k].as_ref().expect("dependencies evaluated first")
    }

    fn compute(&self, k: NodeId) -> Result<HomPoly> {
        Ok(match self.program.node(k) {
            Node::Leaf => self.form.clone(),
            Node::Transvect { left, right, index } => self.get(*left).transvectant(self.get(*right), *index)?,
            Node::Product(f) => {
                let mut acc = HomPoly::one(self.ring());
                for &(j, e) in f {
                    acc = acc.mul(&self.get(j).pow(e)?)?;
                }
                acc
            }
            Node::Sum(c) => {
                let mut acc = self.get(c[0]).clone();
                for &j in &c[1..] {
                    acc = acc.add(self.get(j))?;
                }
                acc
            }
        })
    }
}

/// True iff `a = lambda b` for some nonzero scalar `lambda`.
pub fn scale_free_compare(a: &HomPoly, b: &HomPoly) -> bool {
    if a.order() != b.order() || a.ring() != b.ring() {
        return false;
    }
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return true,
        (true, false) | (false, true) => return false,
        _ => {}
    }
    let pivot = (0..=a.order()).find(|&i| !a.coeff(i).is_zero()).unwrap();
    let (ap, bp) = (a.coeff(pivot), b.coeff(pivot));
    if bp.is_zero() {
        return false;
    }
    // a == (a_k / b_k) b
    let lambda = match ap.mul(&bp.inv().expect("nonzero")) {
        Ok(l) => l,
        Err(_) => return false,
    };
    match b.scale(&lambda) {
        Ok(scaled) => &scaled == a,
        Err(_) => false,
    }
}

/// Nonzero scalar `lambda` with `a = lambda b`, if any.
pub fn scale_factor(a: &HomPoly, b: &HomPoly) -> Option<Scalar> {
    if !scale_free_compare(a, b) || a.is_zero() {
        return None;
    }
    let pivot = (0..=a.order()).find(|&i| !a.coeff(i).is_zero())?;
    a.coeff(pivot).mul(&b.coeff(pivot).inv().ok()?).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_forms::{Sl2, DEFAULT_PRIME};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bidegrees_follow_composition_rules() {
        let mut p = CovariantProgram::new(9);
        assert_eq!(p.degree_order(), (1, 9));
        let f = p.leaf();
        let c5 = p.transvect(f, f, 2).unwrap();
        assert_eq!(p.bidegree(c5), (2, 14));
        let c15 = p.transvect(f, c5, 5).unwrap();
        let sq = p.pow(c15, 2).unwrap();
        assert_eq!(p.bidegree(c15), (3, 13));
        assert_eq!(p.bidegree(sq), (6, 26));
        assert!(matches!(p.transvect(f, f, 10), Err(ProgramError::IndexTooLarge { .. })));
    }

    #[test]
    fn products_are_normalized() {
        let mut p = CovariantProgram::new(4);
        let f = p.leaf();
        let h = p.transvect(f, f, 2).unwrap();
        let a = p.product(&[(f, 1), (h, 2)]).unwrap();
        let b = p.product(&[(h, 1), (f, 1), (h, 1)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.product(&[(f, 1)]).unwrap(), f);
        let nested = p.mul(a, f).unwrap();
        assert_eq!(p.node(nested), &Node::Product(vec![(f, 2), (h, 2)]));
    }

    #[test]
    fn leaf_evaluates_to_form() {
        let p = CovariantProgram::new(3);
        let f = HomPoly::from_integers(Ring::Rational, &[1, 2, 3, 4]).unwrap();
        assert_eq!(p.evaluate(&f).unwrap(), f);
    }

    #[test]
    fn odd_self_transvectant_evaluates_to_zero() {
        let mut p = CovariantProgram::new(5);
        let t = p.transvect(0, 0, 1).unwrap();
        p.set_root(t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = HomPoly::random_mod_p(DEFAULT_PRIME, 5, &mut rng);
        assert!(p.evaluate(&f).unwrap().is_zero());
    }

    #[test]
    fn c2_of_x9_plus_y9() {
        // (f, f)_8 for f = x^9 + y^9: only the j = 0, 8 cross terms survive,
        // giving 2 x y after normalization.
        let mut p = CovariantProgram::new(9);
        let c2 = p.transvect(0, 0, 8).unwrap();
        p.set_root(c2).unwrap();
        let mut coeffs = vec![0i64; 10];
        coeffs[0] = 1;
        coeffs[9] = 1;
        let f = HomPoly::from_integers(Ring::Rational, &coeffs).unwrap();
        let v = p.evaluate(&f).unwrap();
        let int = |k: i64| BigRational::from_integer(BigInt::from(k));
        assert_eq!(v.rational_values().unwrap(), &[int(0), int(2), int(0)]);
    }

    #[test]
    fn evaluation_is_pure_and_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = CovariantProgram::new(6);
        let f = p.leaf();
        let h = p.transvect(f, f, 4).unwrap();
        let t = p.transvect(h, f, 2).unwrap();
        let sq = p.pow(t, 2).unwrap();
        let top = p.transvect(sq, h, 4).unwrap();
        p.set_root(top).unwrap();
        for _ in 0..10 {
            let form = HomPoly::random_mod_p(DEFAULT_PRIME, 6, &mut rng);
            let g = Sl2::random_mod_p(DEFAULT_PRIME, &mut rng);
            let a = p.evaluate(&form).unwrap();
            assert_eq!(a, p.evaluate(&form).unwrap());
            assert_eq!(p.evaluate(&form.act(&g).unwrap()).unwrap(), a.act(&g).unwrap());
        }
    }

    #[test]
    fn sums_need_equal_bidegrees() {
        let mut p = CovariantProgram::new(6);
        let a = p.transvect(0, 0, 6).unwrap();
        let h = p.transvect(0, 0, 4).unwrap();
        let b = p.transvect(h, h, 4).unwrap();
        assert!(matches!(p.sum(&[a, b]), Err(ProgramError::BidegreeMismatch(..))));
        let sq = p.pow(a, 2).unwrap();
        let s = p.sum(&[sq, b]).unwrap();
        assert_eq!(p.bidegree(s), (4, 0));
    }

    #[test]
    fn extract_and_render_round_trip() {
        let mut p = CovariantProgram::new(9);
        let c2 = p.transvect(0, 0, 8).unwrap();
        let c3 = p.transvect(0, 0, 6).unwrap();
        let cube = p.pow(c2, 3).unwrap();
        let c121 = p.transvect(cube, c3, 6).unwrap();
        let q = p.extract(c121).unwrap();
        assert_eq!(q.degree_order(), (8, 0));
        assert_eq!(q.to_expr(), "tr(pow(tr(f, f, 8), 3), tr(f, f, 6), 6)");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let form = HomPoly::random_mod_p(DEFAULT_PRIME, 9, &mut rng);
        assert_eq!(q.evaluate(&form).unwrap(), p.evaluate_nodes(&form, &[c121]).unwrap()[0]);
    }

    #[test]
    fn scale_free_examples() {
        let q = |v: &[i64]| HomPoly::from_integers(Ring::Rational, v).unwrap();
        assert!(scale_free_compare(&q(&[1, 0, 0]), &q(&[3, 0, 0])));
        assert!(!scale_free_compare(&q(&[1, 0, 0]), &q(&[0, 1, 0])));
        assert!(scale_free_compare(&q(&[0, 0]), &q(&[0, 0])));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = HomPoly::random_mod_p(DEFAULT_PRIME, 4, &mut rng);
        let s = Scalar::from_i64(Ring::ModP(DEFAULT_PRIME), rng.gen_range(1..1000));
        let b = a.scale(&s).unwrap();
        assert!(scale_free_compare(&a, &b));
        assert_eq!(scale_factor(&b, &a), Some(s));
    }

    #[test]
    fn compose_substitutes_the_form() {
        let mut sextic = CovariantProgram::new(6);
        let h = sextic.transvect(0, 0, 2).unwrap();
        let mut p = CovariantProgram::new(9);
        let c3 = p.transvect(0, 0, 6).unwrap();
        let id = p.compose(&sextic, h, c3).unwrap();
        assert_eq!(p.bidegree(id), (4, 8));
        assert!(p.compose(&sextic, h, 0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let form = HomPoly::random_mod_p(DEFAULT_PRIME, 9, &mut rng);
        let v = p.evaluate_nodes(&form, &[c3, id]).unwrap();
        assert_eq!(sextic.evaluate_nodes(&v[0], &[h]).unwrap()[0], v[1]);
    }
}
