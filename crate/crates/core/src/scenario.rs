//! Protocol scenarios and the builders for the initial, policy and
//! imputable SCSPs.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::entailment::{entail_closure, RuleProfile};
use crate::goals::SpeaksAboutConfig;
use crate::message::{AtomKind, AtomTable, Message, MessageUniverse};
use crate::risk::{Predecessor, RiskFunction};
use crate::scsp::{Constraint, ConstraintOrigin, ProtocolScsp, ScspError};
use crate::semiring::{Level, LevelError, SecuritySemiring};

pub const DEFAULT_LEVELS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal {
    pub name: String,
    /// The agent atom naming this principal in messages.
    pub agent: Option<String>,
}

/// A precondition: `who` (everyone when `None`) holds `message` at `level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assumption {
    pub who: Option<String>,
    pub message: Message,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Invent {
        principal: String,
        atom: String,
        owners: Vec<String>,
    },
    Send {
        from: String,
        to: String,
        message: Message,
        interceptor: Option<String>,
    },
    Cryptanalyse {
        principal: String,
        learned: Message,
        source: Message,
    },
}

impl Event {
    pub fn messages(&self) -> Vec<Message> {
        match self {
            Event::Invent { atom, .. } => vec![Message::atom(atom)],
            Event::Send { message, .. } => vec![message.clone()],
            Event::Cryptanalyse { learned, source, .. } => vec![learned.clone(), source.clone()],
        }
    }

    pub fn is_malicious(&self) -> bool {
        matches!(
            self,
            Event::Cryptanalyse { .. } | Event::Send { interceptor: Some(_), .. }
        )
    }

    fn principals(&self) -> Vec<&str> {
        match self {
            Event::Invent { principal, owners, .. } => {
                std::iter::once(principal.as_str()).chain(owners.iter().map(String::as_str)).collect()
            }
            Event::Send {
                from, to, interceptor, ..
            } => [Some(from), Some(to), interceptor.as_ref()]
                .into_iter()
                .flatten()
                .map(String::as_str)
                .collect(),
            Event::Cryptanalyse { principal, .. } => vec![principal],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Policy,
    Trace,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Policy => "policy",
            Phase::Trace => "trace",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("levels must be at least 1")]
    ZeroLevels,
    #[error("principal `{0}` is declared twice")]
    DuplicatePrincipal(String),
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),
    #[error("agent atom `{agent}` of principal `{principal}` is not a declared agent")]
    BadAgent { principal: String, agent: String },
    #[error("assumption level must be public, private or unknown, not {0}")]
    TradedAssumption(Level),
    #[error("duplicate assumption for `{principal}` on `{message}`")]
    DuplicateAssumption { principal: String, message: String },
    #[error("{phase} event {index}: {problem}")]
    Event {
        phase: Phase,
        index: usize,
        problem: EventProblem,
    },
    #[error("the scenario has no trace phase")]
    NoTrace,
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Scsp(#[from] ScspError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventProblem {
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),
    #[error("`{0}` is not an atom")]
    NotAnAtom(String),
    #[error("`{0}` is assumed known before it is invented")]
    AlreadyKnown(String),
    #[error("`{0}` is invented twice")]
    InventedTwice(String),
    #[error("`{0}` sends to itself")]
    SelfSend(String),
    #[error("interceptor `{0}` is an end of the exchange")]
    InterceptorIsEndpoint(String),
    #[error("`{learned}` is not part of `{within}`")]
    NotASubterm { learned: String, within: String },
    #[error("{0} is not allowed in the policy phase")]
    Malicious(&'static str),
    #[error("encryption under the compound key `{0}`")]
    CompoundKey(String),
    #[error("owners are only meaningful for keys, and `{0}` is not one")]
    OwnersOnNonKey(String),
    #[error("`{sender}` sends `{message}` without knowing it")]
    SendsUnknown { sender: String, message: String },
}

/// A parsed protocol description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub levels: u32,
    pub profile: RuleProfile,
    pub speaks_about: SpeaksAboutConfig,
    pub principals: Vec<Principal>,
    pub atoms: AtomTable,
    pub assumptions: Vec<Assumption>,
    pub policy: Vec<Event>,
    /// `None` when the file has no trace phase.
    pub trace: Option<Vec<Event>>,
}

impl Scenario {
    pub fn new(name: &str) -> Self {
        Scenario {
            name: name.to_string(),
            levels: DEFAULT_LEVELS,
            profile: RuleProfile::default(),
            speaks_about: SpeaksAboutConfig::default(),
            principals: Vec::new(),
            atoms: AtomTable::new(),
            assumptions: Vec::new(),
            policy: Vec::new(),
            trace: None,
        }
    }

    pub fn semiring(&self) -> Result<SecuritySemiring, ScenarioError> {
        SecuritySemiring::new(self.levels).map_err(|_| ScenarioError::ZeroLevels)
    }

    pub fn principal_names(&self) -> Vec<String> {
        self.principals.iter().map(|p| p.name.clone()).collect()
    }

    pub fn has_principal(&self, name: &str) -> bool {
        self.principals.iter().any(|p| p.name == name)
    }

    pub fn principal(&self, name: &str) -> Option<&Principal> {
        self.principals.iter().find(|p| p.name == name)
    }

    /// The agent name shown in reports (the agent atom, else the principal).
    pub fn display_agent<'a>(&'a self, principal: &'a str) -> &'a str {
        self.principal(principal)
            .and_then(|p| p.agent.as_deref())
            .unwrap_or(principal)
    }

    pub fn trace(&self) -> Result<&[Event], ScenarioError> {
        self.trace.as_deref().ok_or(ScenarioError::NoTrace)
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.policy.iter().chain(self.trace.iter().flatten())
    }

    /// Subterm closure of everything the scenario mentions; shared by the
    /// policy and imputable SCSPs.
    pub fn universe(&self) -> MessageUniverse {
        let mut msgs: Vec<Message> = self.assumptions.iter().map(|a| a.message.clone()).collect();
        msgs.extend(self.events().flat_map(Event::messages));
        MessageUniverse::build(&self.name, &self.atoms, &msgs)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.levels == 0 {
            return Err(ScenarioError::ZeroLevels);
        }
        let mut seen = BTreeSet::new();
        for p in &self.principals {
            if !seen.insert(&p.name) {
                return Err(ScenarioError::DuplicatePrincipal(p.name.clone()));
            }
            if let Some(agent) = &p.agent {
                let ok = matches!(
                    self.atoms.get(agent).map(|a| &a.kind),
                    Some(AtomKind::Agent { principal: Some(q) }) if *q == p.name
                );
                if !ok {
                    return Err(ScenarioError::BadAgent {
                        principal: p.name.clone(),
                        agent: agent.clone(),
                    });
                }
            }
        }
        for atom in self.atoms.iter() {
            if let Some(info) = atom.key_info() {
                if let Some(o) = info.owners.iter().find(|o| !self.has_principal(o)) {
                    return Err(ScenarioError::UnknownPrincipal(o.clone()));
                }
            }
        }
        let mut assumed = BTreeSet::new();
        for a in &self.assumptions {
            if a.level.size() != self.levels {
                return Err(LevelError::ParameterMismatch {
                    left: a.level.size(),
                    right: self.levels,
                }
                .into());
            }
            if !(a.level.is_public() || a.level.is_unknown() || a.level.rank() == 0) {
                return Err(ScenarioError::TradedAssumption(a.level));
            }
            let targets: Vec<String> = match &a.who {
                Some(p) if !self.has_principal(p) => return Err(ScenarioError::UnknownPrincipal(p.clone())),
                Some(p) => vec![p.clone()],
                None => self.principal_names(),
            };
            for p in targets {
                if !assumed.insert((p.clone(), a.message.clone())) {
                    return Err(ScenarioError::DuplicateAssumption {
                        principal: p,
                        message: a.message.to_string(),
                    });
                }
            }
        }
        self.validate_phase(Phase::Policy, &self.policy)?;
        if let Some(trace) = &self.trace {
            self.validate_phase(Phase::Trace, trace)?;
        }
        Ok(())
    }

    fn validate_phase(&self, phase: Phase, events: &[Event]) -> Result<(), ScenarioError> {
        let mut invented = BTreeSet::new();
        for (index, ev) in events.iter().enumerate() {
            let fail = |problem| ScenarioError::Event { phase, index, problem };
            if let Some(p) = ev.principals().into_iter().find(|p| !self.has_principal(p)) {
                return Err(fail(EventProblem::UnknownPrincipal(p.to_string())));
            }
            if phase == Phase::Policy && ev.is_malicious() {
                let what = match ev {
                    Event::Cryptanalyse { .. } => "cryptanalysis",
                    _ => "interception",
                };
                return Err(fail(EventProblem::Malicious(what)));
            }
            for m in ev.messages() {
                if let Some(k) = compound_key(&m) {
                    return Err(fail(EventProblem::CompoundKey(k.to_string())));
                }
            }
            match ev {
                Event::Invent { atom, owners, .. } => {
                    let Some(decl) = self.atoms.get(atom) else {
                        return Err(fail(EventProblem::NotAnAtom(atom.clone())));
                    };
                    if !owners.is_empty() && decl.key_info().is_none() {
                        return Err(fail(EventProblem::OwnersOnNonKey(atom.clone())));
                    }
                    let m = Message::atom(atom);
                    if self.assumptions.iter().any(|a| a.message == m && a.level.is_known()) {
                        return Err(fail(EventProblem::AlreadyKnown(atom.clone())));
                    }
                    if !invented.insert(atom.clone()) {
                        return Err(fail(EventProblem::InventedTwice(atom.clone())));
                    }
                }
                Event::Send {
                    from, to, interceptor, ..
                } => {
                    if from == to {
                        return Err(fail(EventProblem::SelfSend(from.clone())));
                    }
                    if let Some(i) = interceptor {
                        if i == from || i == to {
                            return Err(fail(EventProblem::InterceptorIsEndpoint(i.clone())));
                        }
                    }
                }
                Event::Cryptanalyse { learned, source, .. } => {
                    if !source.contains(learned) {
                        return Err(fail(EventProblem::NotASubterm {
                            learned: learned.to_string(),
                            within: source.to_string(),
                        }));
                    }
                }
            }
        }
        Ok(())
    }
}

fn compound_key(m: &Message) -> Option<&Message> {
    m.subterms().into_iter().find_map(|t| match t {
        Message::Encrypt { key, .. } if key.as_atom().is_none() => Some(key.as_ref()),
        _ => None,
    })
}

/// One unary constraint per principal holding its assumptions.
pub fn build_initial_scsp(s: &Scenario) -> Result<ProtocolScsp, ScenarioError> {
    s.validate()?;
    let semiring = s.semiring()?;
    let universe = Arc::new(s.universe());
    let names = s.principal_names();
    let mut p = ProtocolScsp::new(semiring, universe.clone(), &names);
    for name in &names {
        let mut c = Constraint::new(vec![name.clone()], semiring.unknown())?;
        for a in &s.assumptions {
            if a.who.as_ref().is_none_or(|w| w == name) {
                let id = universe.id(&a.message).expect("assumption in universe");
                c.set(vec![id], a.level)?;
            }
        }
        p.push(
            c,
            ConstraintOrigin::Initial {
                principal: name.clone(),
            },
        )?;
    }
    Ok(p)
}

/// Appends the constraint for one event.
pub fn process_event(
    p: &ProtocolScsp,
    phase: Phase,
    index: usize,
    ev: &Event,
    profile: RuleProfile,
    risk: &dyn RiskFunction,
) -> Result<ProtocolScsp, ScenarioError> {
    let universe = p.universe().clone();
    let private = p.semiring().private();
    let unknown = p.semiring().unknown();
    let id_of = |m: &Message| {
        universe
            .id(m)
            .ok_or_else(|| ScenarioError::Scsp(ScspError::UnknownMessage(m.to_string())))
    };
    let mut next = p.clone();
    match ev {
        Event::Invent { principal, atom, .. } => {
            let mut c = Constraint::new(vec![principal.clone()], unknown)?;
            c.set(vec![id_of(&Message::atom(atom))?], private)?;
            next.push(c, ConstraintOrigin::Invent { event: index })?;
        }
        Event::Cryptanalyse { principal, learned, .. } => {
            let mut c = Constraint::new(vec![principal.clone()], unknown)?;
            c.set(vec![id_of(learned)?], private)?;
            next.push(c, ConstraintOrigin::Cryptanalyse { event: index })?;
        }
        Event::Send {
            from,
            to,
            message,
            interceptor,
        } => {
            let id = id_of(message)?;
            let view = entail_closure(&p.principal_view(from)?, profile);
            let known = view.get(id);
            if !known.is_known() {
                return Err(ScenarioError::Event {
                    phase,
                    index,
                    problem: EventProblem::SendsUnknown {
                        sender: from.clone(),
                        message: message.to_string(),
                    },
                });
            }
            let newlevel = risk.assess(known);
            let receiver = interceptor.as_ref().unwrap_or(to);
            let mut c = Constraint::new(vec![from.clone(), receiver.clone()], unknown)?;
            c.set(vec![universe.empty(), id], newlevel)?;
            next.push(
                c,
                ConstraintOrigin::Send {
                    event: index,
                    addressee: to.clone(),
                },
            )?;
        }
    }
    Ok(next)
}

fn fold_events(
    s: &Scenario,
    phase: Phase,
    events: &[Event],
    profile: RuleProfile,
    risk: &dyn RiskFunction,
) -> Result<ProtocolScsp, ScenarioError> {
    let mut p = build_initial_scsp(s)?;
    for (i, ev) in events.iter().enumerate() {
        p = process_event(&p, phase, i, ev, profile, risk)?;
    }
    Ok(p)
}

pub fn build_policy_scsp_with(
    s: &Scenario,
    profile: RuleProfile,
    risk: &dyn RiskFunction,
) -> Result<ProtocolScsp, ScenarioError> {
    fold_events(s, Phase::Policy, &s.policy, profile, risk)
}

pub fn build_imputable_scsp_with(
    s: &Scenario,
    profile: RuleProfile,
    risk: &dyn RiskFunction,
) -> Result<ProtocolScsp, ScenarioError> {
    fold_events(s, Phase::Trace, s.trace()?, profile, risk)
}

/// Policy SCSP under the scenario's profile and the default risk function.
pub fn build_policy_scsp(s: &Scenario) -> Result<ProtocolScsp, ScenarioError> {
    build_policy_scsp_with(s, s.profile, &Predecessor)
}

/// Imputable SCSP under the scenario's profile and the default risk function.
pub fn build_imputable_scsp(s: &Scenario) -> Result<ProtocolScsp, ScenarioError> {
    build_imputable_scsp_with(s, s.profile, &Predecessor)
}
