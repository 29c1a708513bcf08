//! Confidentiality and authentication goals, attack detection and grading.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::entailment::{entail_closure, RuleProfile};
use crate::message::{AtomKind, AtomTable, Message, TermId};
use crate::scsp::{ConstraintOrigin, LevelMap, ProtocolScsp, ScspError};
use crate::semiring::Level;

/// Which rules make a message speak about a principal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpeaksAboutConfig {
    /// The principal's agent atom occurs in the message.
    pub names: bool,
    /// The message contains an encryption under a key the principal owns.
    pub keys: bool,
}

impl Default for SpeaksAboutConfig {
    fn default() -> Self {
        SpeaksAboutConfig {
            names: true,
            keys: true,
        }
    }
}

impl SpeaksAboutConfig {
    pub fn is_valid(&self) -> bool {
        self.names || self.keys
    }
}

pub fn speaks_about(m: &Message, principal: &str, atoms: &AtomTable, cfg: SpeaksAboutConfig) -> bool {
    m.subterms().into_iter().any(|t| match t {
        Message::Atomic(name) if cfg.names => matches!(
            atoms.get(name).map(|a| &a.kind),
            Some(AtomKind::Agent { principal: Some(p) }) if p == principal
        ),
        Message::Encrypt { key, .. } if cfg.keys => key
            .as_atom()
            .and_then(|k| atoms.key_info(k))
            .is_some_and(|info| info.owners.contains(principal)),
        _ => false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error(transparent)]
    Scsp(#[from] ScspError),
    #[error("a principal cannot authenticate itself (`{0}`)")]
    Reflexive(String),
    #[error("cannot compare a confidentiality attack with an authentication attack")]
    MixedGoals,
}

/// `a`'s closed level map.
pub fn closed_view(p: &ProtocolScsp, a: &str, profile: RuleProfile) -> Result<LevelMap, ScspError> {
    Ok(entail_closure(&p.principal_view(a)?, profile))
}

pub fn confidentiality_level(
    p: &ProtocolScsp,
    a: &str,
    m: &Message,
    profile: RuleProfile,
) -> Result<Level, ScspError> {
    closed_view(p, a, profile)?.level_of(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Goal {
    Confidentiality,
    /// Authentication of `about` with the report's owner.
    Authentication { about: String },
}

/// A strict level drop from the policy to the imputable SCSP.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttackReport {
    pub goal: Goal,
    pub principal: String,
    pub message: Message,
    pub policy_level: Level,
    pub attack_level: Level,
}

fn worse(a: Level, b: Level) -> bool {
    a.rank() > b.rank()
}

pub fn confidentiality_attacks(
    policy: &ProtocolScsp,
    imputable: &ProtocolScsp,
    a: &str,
    profile: RuleProfile,
) -> Result<Vec<AttackReport>, GoalError> {
    if !policy.same_universe(imputable) {
        return Err(ScspError::UniverseMismatch.into());
    }
    let pol = closed_view(policy, a, profile)?;
    let imp = closed_view(imputable, a, profile)?;
    Ok(pol
        .iter()
        .filter(|&(id, l)| worse(imp.get(id), l))
        .map(|(id, l)| AttackReport {
            goal: Goal::Confidentiality,
            principal: a.to_string(),
            message: policy.universe().term(id).clone(),
            policy_level: l,
            attack_level: imp.get(id),
        })
        .collect())
}

/// `Greater` when `r1` is the worse attack: a more valuable target first,
/// then a deeper drop.
pub fn compare_attacks(r1: &AttackReport, r2: &AttackReport) -> Result<Ordering, GoalError> {
    let same_kind = matches!(
        (&r1.goal, &r2.goal),
        (Goal::Confidentiality, Goal::Confidentiality)
            | (Goal::Authentication { .. }, Goal::Authentication { .. })
    );
    if !same_kind {
        return Err(GoalError::MixedGoals);
    }
    Ok(r2
        .policy_level
        .rank()
        .cmp(&r1.policy_level.rank())
        .then(r1.attack_level.rank().cmp(&r2.attack_level.rank())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthFact {
    pub message: TermId,
    pub level: Level,
    /// The message reached the principal over the network.
    pub delivered: bool,
}

/// Messages some send constraint delivered to `a`.
pub fn delivered_to(p: &ProtocolScsp, a: &str) -> BTreeSet<TermId> {
    let empty = p.universe().empty();
    p.tagged()
        .filter(|(c, o)| matches!(o, ConstraintOrigin::Send { .. }) && c.con().len() == 2 && c.con()[1] == a)
        .flat_map(|(c, _)| {
            c.entries()
                .filter(|(t, _)| t[0] == empty)
                .map(|(t, _)| t[1])
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Messages `a` knows that speak about `b` and that `b` knows too, at
/// `a`'s level.
pub fn authentication_facts(
    p: &ProtocolScsp,
    a: &str,
    b: &str,
    profile: RuleProfile,
    atoms: &AtomTable,
    cfg: SpeaksAboutConfig,
) -> Result<Vec<AuthFact>, GoalError> {
    if a == b {
        return Err(GoalError::Reflexive(a.to_string()));
    }
    let va = closed_view(p, a, profile)?;
    let vb = closed_view(p, b, profile)?;
    let delivered = delivered_to(p, a);
    let universe = p.universe();
    Ok(universe
        .iter()
        .filter(|&(id, m)| {
            va.get(id).is_known() && vb.get(id).is_known() && speaks_about(m, b, atoms, cfg)
        })
        .map(|(id, _)| AuthFact {
            message: id,
            level: va.get(id),
            delivered: delivered.contains(&id),
        })
        .collect())
}

/// Best level over the delivered facts; `None` when there are none.
pub fn authentication_level(facts: &[AuthFact]) -> Option<(Level, TermId)> {
    facts
        .iter()
        .filter(|f| f.delivered)
        .min_by_key(|f| (f.level.rank(), f.message))
        .map(|f| (f.level, f.message))
}

pub fn authentication_attacks(
    policy: &ProtocolScsp,
    imputable: &ProtocolScsp,
    a: &str,
    b: &str,
    profile: RuleProfile,
    atoms: &AtomTable,
    cfg: SpeaksAboutConfig,
) -> Result<Vec<AttackReport>, GoalError> {
    if !policy.same_universe(imputable) {
        return Err(ScspError::UniverseMismatch.into());
    }
    let pol = authentication_facts(policy, a, b, profile, atoms, cfg)?;
    let imp = authentication_facts(imputable, a, b, profile, atoms, cfg)?;
    let mut out = Vec::new();
    for f in pol.iter().filter(|f| f.delivered) {
        if let Some(g) = imp.iter().find(|g| g.delivered && g.message == f.message) {
            if worse(g.level, f.level) {
                out.push(AttackReport {
                    goal: Goal::Authentication { about: b.to_string() },
                    principal: a.to_string(),
                    message: policy.universe().term(f.message).clone(),
                    policy_level: f.level,
                    attack_level: g.level,
                });
            }
        }
    }
    Ok(out)
}
