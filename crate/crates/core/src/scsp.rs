//! Soft constraints over named variables: combination, projection and
//! solution for any semiring, plus the protocol SCSP and its per-principal
//! level maps.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::message::{Message, MessageUniverse, TermId};
use crate::semiring::{Level, Semiring, SecuritySemiring};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScspError {
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` appears twice in one constraint")]
    RepeatedVariable(String),
    #[error("tuple of arity {found} for a constraint over {expected} variables")]
    Arity { expected: usize, found: usize },
    #[error("tuple component outside the domain")]
    OutsideDomain,
    #[error("operands come from different message universes")]
    UniverseMismatch,
    #[error("message `{0}` is not in the universe")]
    UnknownMessage(String),
}

/// Values for tuples over `con`; unmentioned tuples take `default`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint<D, V> {
    con: Vec<String>,
    table: BTreeMap<Vec<D>, V>,
    default: V,
}

impl<D: Clone + Ord, V: Clone + PartialEq> Constraint<D, V> {
    pub fn new<S: Into<String>>(con: Vec<S>, default: V) -> Result<Self, ScspError> {
        let con: Vec<String> = con.into_iter().map(Into::into).collect();
        for (i, v) in con.iter().enumerate() {
            if con[..i].contains(v) {
                return Err(ScspError::RepeatedVariable(v.clone()));
            }
        }
        Ok(Constraint {
            con,
            table: BTreeMap::new(),
            default,
        })
    }

    pub fn con(&self) -> &[String] {
        &self.con
    }

    pub fn default_value(&self) -> &V {
        &self.default
    }

    pub fn set(&mut self, tuple: Vec<D>, value: V) -> Result<(), ScspError> {
        if tuple.len() != self.con.len() {
            return Err(ScspError::Arity {
                expected: self.con.len(),
                found: tuple.len(),
            });
        }
        if value == self.default {
            self.table.remove(&tuple);
        } else {
            self.table.insert(tuple, value);
        }
        Ok(())
    }

    pub fn get(&self, tuple: &[D]) -> &V {
        self.table.get(tuple).unwrap_or(&self.default)
    }

    /// Explicit (non-default) entries in tuple order.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<D>, &V)> {
        self.table.iter()
    }

    /// Value under a variable assignment; variables missing from it are an
    /// error.
    pub fn eval(&self, assignment: &dyn Fn(&str) -> Option<D>) -> Result<&V, ScspError> {
        let tuple = self
            .con
            .iter()
            .map(|v| assignment(v).ok_or_else(|| ScspError::UnknownVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.get(&tuple))
    }

    fn check_domain(&self, domain: &[D]) -> Result<(), ScspError> {
        let ok = self
            .table
            .keys()
            .all(|t| t.iter().all(|d| domain.binary_search(d).is_ok()));
        if ok {
            Ok(())
        } else {
            Err(ScspError::OutsideDomain)
        }
    }

    /// Equal at every tuple over `domain`, regardless of representation.
    pub fn equivalent(&self, other: &Self, domain: &[D]) -> bool {
        if self.con.len() != other.con.len() || !self.con.iter().all(|v| other.con.contains(v)) {
            return false;
        }
        let perm: Vec<usize> = other
            .con
            .iter()
            .map(|v| self.con.iter().position(|w| w == v).unwrap())
            .collect();
        tuples(domain, self.con.len()).all(|t| {
            let t2: Vec<D> = perm.iter().map(|&i| t[i].clone()).collect();
            self.get(&t) == other.get(&t2)
        })
    }
}

/// Every tuple of length `arity` over `domain`, lexicographically.
pub fn tuples<D: Clone>(domain: &[D], arity: usize) -> impl Iterator<Item = Vec<D>> + '_ {
    let total = if domain.is_empty() && arity > 0 {
        0
    } else {
        domain.len().pow(arity as u32)
    };
    (0..total).map(move |mut k| {
        let mut t = vec![domain[0].clone(); arity];
        for slot in t.iter_mut().rev() {
            *slot = domain[k % domain.len()].clone();
            k /= domain.len();
        }
        t
    })
}

fn sorted_domain<D: Clone + Ord>(domain: &[D]) -> Vec<D> {
    let mut d = domain.to_vec();
    d.sort();
    d.dedup();
    d
}

fn positions(of: &[String], within: &[String]) -> Vec<usize> {
    of.iter()
        .map(|v| within.iter().position(|w| w == v).expect("variable present"))
        .collect()
}

/// Times-combination; `con` is `c1.con` followed by the new variables of `c2`.
pub fn combine<S, D>(
    s: &S,
    domain: &[D],
    c1: &Constraint<D, S::Value>,
    c2: &Constraint<D, S::Value>,
) -> Result<Constraint<D, S::Value>, ScspError>
where
    S: Semiring,
    D: Clone + Ord,
{
    let domain = sorted_domain(domain);
    c1.check_domain(&domain)?;
    c2.check_domain(&domain)?;
    let mut con = c1.con.clone();
    con.extend(c2.con.iter().filter(|v| !c1.con.contains(v)).cloned());
    let p1 = positions(&c1.con, &con);
    let p2 = positions(&c2.con, &con);
    let mut out = Constraint::new(con, s.times(&c1.default, &c2.default))?;
    for t in tuples(&domain, out.con.len()) {
        let t1: Vec<D> = p1.iter().map(|&i| t[i].clone()).collect();
        let t2: Vec<D> = p2.iter().map(|&i| t[i].clone()).collect();
        let v = s.times(c1.get(&t1), c2.get(&t2));
        out.set(t, v)?;
    }
    Ok(out)
}

/// Plus-projection onto `vars ∩ con`, summing over every extension in
/// `domain`.
pub fn project<S, D>(
    s: &S,
    domain: &[D],
    c: &Constraint<D, S::Value>,
    vars: &[&str],
) -> Result<Constraint<D, S::Value>, ScspError>
where
    S: Semiring,
    D: Clone + Ord,
{
    let domain = sorted_domain(domain);
    c.check_domain(&domain)?;
    let kept: Vec<String> = c
        .con
        .iter()
        .filter(|v| vars.contains(&v.as_str()))
        .cloned()
        .collect();
    let keep = positions(&kept, &c.con);
    let mut sums: BTreeMap<Vec<D>, S::Value> = BTreeMap::new();
    for t in tuples(&domain, c.con.len()) {
        let reduced: Vec<D> = keep.iter().map(|&i| t[i].clone()).collect();
        let v = c.get(&t).clone();
        let acc = sums.entry(reduced).or_insert_with(|| s.zero());
        *acc = s.plus(acc, &v);
    }
    let mut out = Constraint::new(kept, c.default.clone())?;
    for (t, v) in sums {
        out.set(t, v)?;
    }
    Ok(out)
}

/// A soft constraint problem: constraints plus variables of interest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scsp<D, V> {
    variables: Vec<String>,
    interest: Vec<String>,
    constraints: Vec<Constraint<D, V>>,
}

impl<D: Clone + Ord, V: Clone + PartialEq> Scsp<D, V> {
    pub fn new<S: Into<String>>(variables: Vec<S>, interest: Vec<S>) -> Result<Self, ScspError> {
        let variables: Vec<String> = variables.into_iter().map(Into::into).collect();
        let interest: Vec<String> = interest.into_iter().map(Into::into).collect();
        if let Some(v) = interest.iter().find(|v| !variables.contains(v)) {
            return Err(ScspError::UnknownVariable(v.clone()));
        }
        Ok(Scsp {
            variables,
            interest,
            constraints: Vec::new(),
        })
    }

    pub fn add(&mut self, c: Constraint<D, V>) -> Result<(), ScspError> {
        if let Some(v) = c.con.iter().find(|v| !self.variables.contains(v)) {
            return Err(ScspError::UnknownVariable(v.clone()));
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn interest(&self) -> &[String] {
        &self.interest
    }

    pub fn constraints(&self) -> &[Constraint<D, V>] {
        &self.constraints
    }
}

/// Combination of every constraint projected onto the variables of interest.
pub fn solution<S, D>(
    s: &S,
    domain: &[D],
    p: &Scsp<D, S::Value>,
) -> Result<Constraint<D, S::Value>, ScspError>
where
    S: Semiring,
    D: Clone + Ord,
{
    let mut acc: Constraint<D, S::Value> = Constraint::new(Vec::<String>::new(), s.one())?;
    for c in &p.constraints {
        acc = combine(s, domain, &acc, c)?;
    }
    let vars: Vec<&str> = p.interest.iter().map(String::as_str).collect();
    let projected = project(s, domain, &acc, &vars)?;
    // Present the result in the order the interest list gives.
    reorder(projected, &p.interest)
}

fn reorder<D: Clone + Ord, V: Clone + PartialEq>(
    c: Constraint<D, V>,
    order: &[String],
) -> Result<Constraint<D, V>, ScspError> {
    let con: Vec<String> = order.iter().filter(|v| c.con.contains(v)).cloned().collect();
    if con == c.con {
        return Ok(c);
    }
    let p = positions(&c.con, &con);
    let mut out = Constraint::new(con, c.default.clone())?;
    for (t, v) in &c.table {
        let mut nt = t.clone();
        for (src, &dst) in p.iter().enumerate() {
            nt[dst] = t[src].clone();
        }
        out.set(nt, v.clone())?;
    }
    Ok(out)
}

/// What produced a protocol constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintOrigin {
    Initial { principal: String },
    Invent { event: usize },
    Send { event: usize, addressee: String },
    Cryptanalyse { event: usize },
}

impl ConstraintOrigin {
    pub fn event(&self) -> Option<usize> {
        match self {
            ConstraintOrigin::Initial { .. } => None,
            ConstraintOrigin::Invent { event }
            | ConstraintOrigin::Send { event, .. }
            | ConstraintOrigin::Cryptanalyse { event } => Some(*event),
        }
    }
}

pub type ProtocolConstraint = Constraint<TermId, Level>;

/// The protocol SCSP over principals and the scenario's message universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolScsp {
    semiring: SecuritySemiring,
    universe: Arc<MessageUniverse>,
    problem: Scsp<TermId, Level>,
    origins: Vec<ConstraintOrigin>,
}

impl ProtocolScsp {
    pub fn new(
        semiring: SecuritySemiring,
        universe: Arc<MessageUniverse>,
        principals: &[String],
    ) -> Self {
        let problem = Scsp::new(principals.to_vec(), principals.to_vec()).expect("interest = variables");
        ProtocolScsp {
            semiring,
            universe,
            problem,
            origins: Vec::new(),
        }
    }

    pub fn semiring(&self) -> &SecuritySemiring {
        &self.semiring
    }

    pub fn universe(&self) -> &Arc<MessageUniverse> {
        &self.universe
    }

    pub fn principals(&self) -> &[String] {
        self.problem.variables()
    }

    pub fn constraints(&self) -> &[ProtocolConstraint] {
        self.problem.constraints()
    }

    pub fn problem(&self) -> &Scsp<TermId, Level> {
        &self.problem
    }

    /// Constraints with their origins, in insertion order.
    pub fn tagged(&self) -> impl Iterator<Item = (&ProtocolConstraint, &ConstraintOrigin)> {
        self.problem.constraints().iter().zip(&self.origins)
    }

    /// The constraint appended for event `event`, if any.
    pub fn constraint_for_event(&self, event: usize) -> Option<&ProtocolConstraint> {
        self.tagged()
            .find(|(_, o)| o.event() == Some(event))
            .map(|(c, _)| c)
    }

    pub fn push(&mut self, c: ProtocolConstraint, origin: ConstraintOrigin) -> Result<(), ScspError> {
        for t in c.entries().map(|(t, _)| t) {
            if t.iter().any(|id| id.0 >= self.universe.len()) {
                return Err(ScspError::OutsideDomain);
            }
        }
        self.problem.add(c)?;
        self.origins.push(origin);
        Ok(())
    }

    pub fn same_universe(&self, other: &ProtocolScsp) -> bool {
        Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe
    }

    pub fn check_principal(&self, a: &str) -> Result<(), ScspError> {
        if self.principals().iter().any(|p| p == a) {
            Ok(())
        } else {
            Err(ScspError::UnknownPrincipal(a.to_string()))
        }
    }

    /// `a`'s levels before closure: every constraint evaluated with `a`
    /// bound to the message and every other principal bound to `<>`.
    pub fn principal_view(&self, a: &str) -> Result<LevelMap, ScspError> {
        self.check_principal(a)?;
        let empty = self.universe.empty();
        let mut levels = vec![self.semiring.one(); self.universe.len()];
        for c in self.constraints() {
            if !c.con().iter().any(|v| v == a) {
                // Every coordinate is pinned to <>, so this factor is constant.
                let tuple = vec![empty; c.con().len()];
                let v = *c.get(&tuple);
                for l in levels.iter_mut() {
                    *l = self.semiring.times(l, &v);
                }
                continue;
            }
            // Only explicit entries with every other coordinate at <> differ
            // from the default.
            let at = c.con().iter().position(|v| v == a).expect("a is in con");
            let mut factor = vec![*c.default_value(); levels.len()];
            for (t, v) in c.entries() {
                if t.iter().enumerate().all(|(i, d)| i == at || *d == empty) {
                    factor[t[at].0] = *v;
                }
            }
            for (slot, f) in levels.iter_mut().zip(&factor) {
                *slot = self.semiring.times(slot, f);
            }
        }
        Ok(LevelMap {
            owner: a.to_string(),
            universe: Arc::clone(&self.universe),
            levels,
        })
    }
}

/// One principal's level on every universe message.
#[derive(Clone, PartialEq, Eq)]
pub struct LevelMap {
    owner: String,
    universe: Arc<MessageUniverse>,
    levels: Vec<Level>,
}

impl LevelMap {
    /// Every message at `fill`.
    pub fn uniform(owner: &str, universe: Arc<MessageUniverse>, fill: Level) -> Self {
        LevelMap {
            owner: owner.to_string(),
            levels: vec![fill; universe.len()],
            universe,
        }
    }

    pub fn from_levels(owner: &str, universe: Arc<MessageUniverse>, levels: Vec<Level>) -> Self {
        assert_eq!(levels.len(), universe.len(), "one level per universe term");
        LevelMap {
            owner: owner.to_string(),
            universe,
            levels,
        }
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn universe(&self) -> &Arc<MessageUniverse> {
        &self.universe
    }

    pub fn get(&self, id: TermId) -> Level {
        self.levels[id.0]
    }

    pub fn set(&mut self, id: TermId, level: Level) {
        self.levels[id.0] = level;
    }

    pub fn level_of(&self, m: &Message) -> Result<Level, ScspError> {
        self.universe
            .id(m)
            .map(|id| self.get(id))
            .ok_or_else(|| ScspError::UnknownMessage(m.to_string()))
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, Level)> + '_ {
        self.levels.iter().enumerate().map(|(i, l)| (TermId(i), *l))
    }

    pub fn compatible(&self, other: &LevelMap) -> bool {
        self.owner == other.owner
            && (Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe)
    }

    /// Pointwise `self ≤ other` in the security order.
    pub fn pointwise_leq(&self, other: &LevelMap) -> bool {
        self.levels
            .iter()
            .zip(&other.levels)
            .all(|(a, b)| a.rank() >= b.rank())
    }
}

impl fmt::Debug for LevelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (id, l) in self.iter() {
            if !l.is_unknown() {
                m.entry(&format_args!("{}", self.universe.term(id)), &l);
            }
        }
        m.finish()
    }
}
