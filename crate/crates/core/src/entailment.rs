//! Level computation rules and their closure over a principal's level map.

use std::fmt;
use std::str::FromStr;

use crate::message::{KeyRole, Shape, TermId};
use crate::scsp::{LevelMap, ScspError};
use crate::semiring::Level;

/// How the encryption rule levels a ciphertext.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RuleProfile {
    /// `{|m1|}m2` gets `v1 + v2`.
    Literal,
    /// `{|m1|}m2` gets the key's level, once body and key are both known.
    KeyTracking,
    /// Literal under asymmetric public keys, key-tracking otherwise.
    #[default]
    Hybrid,
}

impl RuleProfile {
    pub const ALL: [RuleProfile; 3] = [RuleProfile::Literal, RuleProfile::KeyTracking, RuleProfile::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            RuleProfile::Literal => "literal",
            RuleProfile::KeyTracking => "key-tracking",
            RuleProfile::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for RuleProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown rule profile `{s}` (expected literal, key-tracking or hybrid)"))
    }
}

fn plus(a: Level, b: Level) -> Level {
    a.plus(b).expect("levels of one map share n")
}

fn times(a: Level, b: Level) -> Level {
    a.times(b).expect("levels of one map share n")
}

/// Level the encryption rule proposes for a ciphertext.
pub fn encryption_candidate(profile: RuleProfile, role: Option<KeyRole>, body: Level, key: Level) -> Level {
    let literal = plus(body, key);
    let tracking = if body.is_known() && key.is_known() {
        key
    } else {
        Level::unknown(key.size())
    };
    match profile {
        RuleProfile::Literal => literal,
        RuleProfile::KeyTracking => tracking,
        RuleProfile::Hybrid if role == Some(KeyRole::Public) => literal,
        RuleProfile::Hybrid => tracking,
    }
}

/// One simultaneous pass of all four rules, every candidate computed from
/// the input map. Levels only go down.
pub fn apply_rules_once(levels: &LevelMap, profile: RuleProfile) -> LevelMap {
    let universe = levels.universe().clone();
    let mut next = levels.clone();
    let lower = |next: &mut LevelMap, id: TermId, cand: Level| {
        let cur = next.get(id);
        next.set(id, times(cur, cand));
    };
    for id in universe.ids() {
        let here = levels.get(id);
        match universe.shape(id) {
            Shape::Empty | Shape::Atom => {}
            Shape::Concat { left, right } => {
                let (l, r) = (levels.get(left), levels.get(right));
                lower(&mut next, id, plus(l, r));
                lower(&mut next, left, here);
                lower(&mut next, right, here);
            }
            Shape::Encrypt {
                body,
                key,
                inverse,
                role,
            } => {
                let cand = encryption_candidate(profile, role, levels.get(body), levels.get(key));
                lower(&mut next, id, cand);
                if let Some(inv) = inverse {
                    let k = levels.get(inv);
                    if k.is_known() && here.is_known() {
                        lower(&mut next, body, times(k, here));
                    }
                }
            }
        }
    }
    next
}

/// Fixpoint of [`apply_rules_once`].
///
/// Computed with a worklist rather than whole passes: the rules are
/// monotone and only lower levels, so applying them one term at a time
/// reaches the same fixpoint.
pub fn entail_closure(levels: &LevelMap, profile: RuleProfile) -> LevelMap {
    let universe = levels.universe().clone();
    let n = universe.len();
    // Compound terms whose rules read each term.
    let mut readers: Vec<Vec<TermId>> = vec![Vec::new(); n];
    for id in universe.ids() {
        match universe.shape(id) {
            Shape::Empty | Shape::Atom => {}
            Shape::Concat { left, right } => {
                readers[left.0].push(id);
                readers[right.0].push(id);
            }
            Shape::Encrypt { body, key, inverse, .. } => {
                readers[body.0].push(id);
                readers[key.0].push(id);
                if let Some(inv) = inverse {
                    readers[inv.0].push(id);
                }
            }
        }
    }
    let mut out = levels.clone();
    let mut queued = vec![true; n];
    let mut work: Vec<TermId> = universe.ids().collect();
    let mut changed = Vec::new();
    while let Some(id) = work.pop() {
        queued[id.0] = false;
        let mut lower = |out: &mut LevelMap, t: TermId, cand: Level| {
            let cur = out.get(t);
            let next = times(cur, cand);
            if next != cur {
                out.set(t, next);
                changed.push(t);
            }
        };
        match universe.shape(id) {
            Shape::Empty | Shape::Atom => {}
            Shape::Concat { left, right } => {
                let cand = plus(out.get(left), out.get(right));
                lower(&mut out, id, cand);
                let here = out.get(id);
                lower(&mut out, left, here);
                lower(&mut out, right, here);
            }
            Shape::Encrypt {
                body,
                key,
                inverse,
                role,
            } => {
                let cand = encryption_candidate(profile, role, out.get(body), out.get(key));
                lower(&mut out, id, cand);
                if let Some(inv) = inverse {
                    let (k, ct) = (out.get(inv), out.get(id));
                    if k.is_known() && ct.is_known() {
                        lower(&mut out, body, times(k, ct));
                    }
                }
            }
        }
        for t in changed.drain(..) {
            for &r in std::iter::once(&t).chain(&readers[t.0]) {
                if !queued[r.0] {
                    queued[r.0] = true;
                    work.push(r);
                }
            }
        }
    }
    out
}

/// Number of passes until the fixpoint (zero when `levels` is closed).
pub fn closure_passes(levels: &LevelMap, profile: RuleProfile) -> usize {
    let mut cur = levels.clone();
    let mut passes = 0;
    loop {
        let next = apply_rules_once(&cur, profile);
        if next == cur {
            return passes;
        }
        passes += 1;
        cur = next;
    }
}

/// Whether `to` is reachable from `from` by rule applications: the closure
/// of `from` lies below `to`, which lies below `from`.
pub fn entails(from: &LevelMap, to: &LevelMap, profile: RuleProfile) -> Result<bool, ScspError> {
    if !from.compatible(to) {
        return Err(ScspError::UniverseMismatch);
    }
    Ok(entail_closure(from, profile).pointwise_leq(to) && to.pointwise_leq(from))
}
