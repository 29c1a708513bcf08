//! Whole-scenario analyses and their text renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::goals::{
    authentication_attacks, authentication_facts, authentication_level, closed_view,
    confidentiality_attacks, AttackReport, Goal, GoalError,
};
use crate::scenario::{build_imputable_scsp, build_policy_scsp, Scenario, ScenarioError};
use crate::scsp::ScspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GoalSelection {
    #[default]
    Confidentiality,
    Authentication,
    All,
}

impl GoalSelection {
    pub fn confidentiality(self) -> bool {
        !matches!(self, GoalSelection::Authentication)
    }

    pub fn authentication(self) -> bool {
        !matches!(self, GoalSelection::Confidentiality)
    }
}

impl FromStr for GoalSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "confidentiality" => Ok(GoalSelection::Confidentiality),
            "authentication" => Ok(GoalSelection::Authentication),
            "all" => Ok(GoalSelection::All),
            other => Err(format!(
                "unknown goal `{other}` (expected confidentiality, authentication or all)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Goal(#[from] GoalError),
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),
}

impl From<ScspError> for AnalysisError {
    fn from(e: ScspError) -> Self {
        AnalysisError::Goal(e.into())
    }
}

/// The attacks found for one principal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Findings {
    pub principal: String,
    pub attacks: Vec<AttackReport>,
}

fn selected(s: &Scenario, only: &[String]) -> Result<Vec<String>, AnalysisError> {
    if let Some(p) = only.iter().find(|p| !s.has_principal(p)) {
        return Err(AnalysisError::UnknownPrincipal(p.clone()));
    }
    Ok(s.principal_names()
        .into_iter()
        .filter(|p| only.is_empty() || only.contains(p))
        .collect())
}

/// Compares the imputable SCSP with the policy SCSP for each selected
/// principal (all of them when `only` is empty).
pub fn run_check(s: &Scenario, only: &[String], goals: GoalSelection) -> Result<Vec<Findings>, AnalysisError> {
    let who = selected(s, only)?;
    let policy = build_policy_scsp(s)?;
    let imputable = build_imputable_scsp(s)?;
    let mut out = Vec::new();
    for a in &who {
        let mut attacks = Vec::new();
        if goals.confidentiality() {
            attacks.extend(confidentiality_attacks(&policy, &imputable, a, s.profile)?);
        }
        if goals.authentication() {
            for b in s.principal_names().iter().filter(|b| *b != a) {
                attacks.extend(authentication_attacks(
                    &policy,
                    &imputable,
                    a,
                    b,
                    s.profile,
                    &s.atoms,
                    s.speaks_about,
                )?);
            }
        }
        out.push(Findings {
            principal: a.clone(),
            attacks,
        });
    }
    Ok(out)
}

pub fn attack_count(findings: &[Findings]) -> usize {
    findings.iter().map(|f| f.attacks.len()).sum()
}

/// `checking(agent(p))` blocks with one indented line per attack.
pub fn render_checker(s: &Scenario, findings: &[Findings]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = writeln!(out, "checking(agent({}))", s.display_agent(&f.principal));
        for r in &f.attacks {
            let m = r.message.functional(&s.atoms);
            let _ = match &r.goal {
                Goal::Confidentiality => writeln!(
                    out,
                    "   attack({m}, policy_level({}), attack_level({}))",
                    r.policy_level, r.attack_level
                ),
                Goal::Authentication { about } => writeln!(
                    out,
                    "   auth_attack(about(agent({})), {m}, policy_level({}), attack_level({}))",
                    s.display_agent(about),
                    r.policy_level,
                    r.attack_level
                ),
            };
        }
    }
    out
}

/// One `principal` block per principal, attacks as aligned rows.
pub fn render_table(_s: &Scenario, findings: &[Findings]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = writeln!(out, "principal {}", f.principal);
        if f.attacks.is_empty() {
            let _ = writeln!(out, "  no attacks");
        }
        for r in &f.attacks {
            let goal = match &r.goal {
                Goal::Confidentiality => "confidentiality".to_string(),
                Goal::Authentication { about } => format!("authentication of {about}"),
            };
            let _ = writeln!(
                out,
                "  {:<9} -> {:<9} {goal}: {}",
                r.policy_level.to_string(),
                r.attack_level.to_string(),
                r.message
            );
        }
    }
    out
}

/// Closed policy levels per principal, and with authentication goals the
/// headline level of every principal pair that has one.
pub fn run_policy_report(
    s: &Scenario,
    only: &[String],
    goals: GoalSelection,
    full: bool,
) -> Result<String, AnalysisError> {
    let who = selected(s, only)?;
    let policy = build_policy_scsp(s)?;
    let universe = policy.universe().clone();
    let mut out = String::new();
    if goals.confidentiality() {
        for a in &who {
            let view = closed_view(&policy, a, s.profile)?;
            let _ = writeln!(out, "principal {a}");
            for (id, l) in view.iter() {
                if (full || !l.is_unknown()) && id != universe.empty() {
                    let _ = writeln!(out, "  {:<9} {}", l.to_string(), universe.term(id));
                }
            }
        }
    }
    if goals.authentication() {
        let _ = writeln!(out, "authentication");
        let names = s.principal_names();
        for about in &names {
            for viewer in names.iter().filter(|v| *v != about) {
                if !who.is_empty() && !who.contains(viewer) && !who.contains(about) {
                    continue;
                }
                let facts = authentication_facts(&policy, viewer, about, s.profile, &s.atoms, s.speaks_about)?;
                if let Some((level, id)) = authentication_level(&facts) {
                    let _ = writeln!(out, "  {about} with {viewer}: {level} via {}", universe.term(id));
                }
            }
        }
    }
    Ok(out)
}
