//! Risk functions applied when a message goes out on the network.

use std::fmt;

use crate::semiring::Level;

pub trait RiskFunction {
    fn name(&self) -> &str;
    fn assess(&self, level: Level) -> Level;
}

/// One step down the order, stopping at public.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Predecessor;

impl RiskFunction for Predecessor {
    fn name(&self) -> &str {
        "predecessor"
    }

    fn assess(&self, level: Level) -> Level {
        if level.is_public() {
            level
        } else {
            Level::new(level.rank() + 1, level.size()).expect("below public")
        }
    }
}

/// A risk function from a closure, for experiments and negative controls.
pub struct FnRisk<F> {
    name: String,
    f: F,
}

impl<F: Fn(Level) -> Level> FnRisk<F> {
    pub fn new(name: &str, f: F) -> Self {
        FnRisk {
            name: name.to_string(),
            f,
        }
    }
}

impl<F: Fn(Level) -> Level> RiskFunction for FnRisk<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn assess(&self, level: Level) -> Level {
        (self.f)(level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskProperty {
    /// `ρ(l) ≤ l`
    Extensivity,
    /// `l1 ≤ l2` implies `ρ(l1) ≤ ρ(l2)`
    Monotonicity,
}

impl fmt::Display for RiskProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskProperty::Extensivity => "extensivity",
            RiskProperty::Monotonicity => "monotonicity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskViolation {
    pub property: RiskProperty,
    pub witness: Vec<Level>,
}

/// Checks both properties over all `n + 3` levels; one entry per failing
/// witness.
pub fn validate_risk_function(f: &dyn RiskFunction, n: u32) -> Vec<RiskViolation> {
    let all: Vec<Level> = Level::all(n).collect();
    let leq = |a: Level, b: Level| a.rank() >= b.rank();
    let mut out = Vec::new();
    for &l in &all {
        let r = f.assess(l);
        if r.size() != n || !leq(r, l) {
            out.push(RiskViolation {
                property: RiskProperty::Extensivity,
                witness: vec![l],
            });
        }
    }
    for &a in &all {
        for &b in &all {
            if leq(a, b) && !leq(f.assess(a), f.assess(b)) {
                out.push(RiskViolation {
                    property: RiskProperty::Monotonicity,
                    witness: vec![a, b],
                });
            }
        }
    }
    out
}
