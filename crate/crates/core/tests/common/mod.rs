//! A slow, independent re-implementation of the level rules and the two
//! SCSP builders, used only as a test oracle.
//!
//! Levels are plain ranks (`-1` unknown, `0` private, `i` traded_i,
//! `n + 1` public), maps are keyed by message, and rules fire one instance
//! at a time until none changes anything.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use spa_core::message::{inverse, KeyRole};
use spa_core::scenario::Assumption;
use spa_core::{AtomTable, Event, Message, RuleProfile, Scenario};

pub type Ranks = BTreeMap<Message, i32>;

pub const UNKNOWN: i32 = -1;

fn insert_subterms(m: &Message, into: &mut BTreeSet<Message>) {
    into.insert(m.clone());
    match m {
        Message::Concat(l, r) => {
            insert_subterms(l, into);
            insert_subterms(r, into);
        }
        Message::Encrypt { body, key } => {
            insert_subterms(body, into);
            insert_subterms(key, into);
        }
        _ => {}
    }
}

/// Every message the scenario can mention.
pub fn domain(s: &Scenario) -> BTreeSet<Message> {
    let mut out = BTreeSet::new();
    out.insert(Message::Empty);
    for a in s.atoms.iter() {
        out.insert(Message::atom(&a.name));
    }
    for a in &s.assumptions {
        insert_subterms(&a.message, &mut out);
    }
    for ev in s.policy.iter().chain(s.trace.iter().flatten()) {
        match ev {
            Event::Invent { atom, .. } => {
                out.insert(Message::atom(atom));
            }
            Event::Send { message, .. } => insert_subterms(message, &mut out),
            Event::Cryptanalyse { learned, source, .. } => {
                insert_subterms(learned, &mut out);
                insert_subterms(source, &mut out);
            }
        }
    }
    out
}

fn get(r: &Ranks, m: &Message) -> i32 {
    r.get(m).copied().unwrap_or(UNKNOWN)
}

/// Lowers `m` to `max(current, cand)`; true when something changed.
fn lower(r: &mut Ranks, m: &Message, cand: i32) -> bool {
    let cur = get(r, m);
    if cand > cur {
        r.insert(m.clone(), cand);
        true
    } else {
        false
    }
}

fn role(atoms: &AtomTable, key: &Message) -> Option<KeyRole> {
    key.as_atom().and_then(|k| atoms.key_info(k)).map(|i| i.role)
}

/// Chaotic iteration of the four rules over `dom`.
pub fn closure(r: &Ranks, dom: &BTreeSet<Message>, atoms: &AtomTable, profile: RuleProfile) -> Ranks {
    let mut r = r.clone();
    loop {
        let mut changed = false;
        for m in dom {
            match m {
                Message::Concat(left, right) => {
                    let t = get(&r, m);
                    let built = get(&r, left).min(get(&r, right));
                    changed |= lower(&mut r, m, built);
                    changed |= lower(&mut r, left, t);
                    changed |= lower(&mut r, right, t);
                }
                Message::Encrypt { body, key } => {
                    let (b, k) = (get(&r, body), get(&r, key));
                    let literal = b.min(k);
                    let tracking = if b > UNKNOWN && k > UNKNOWN { k } else { UNKNOWN };
                    let cand = match profile {
                        RuleProfile::Literal => literal,
                        RuleProfile::KeyTracking => tracking,
                        RuleProfile::Hybrid if role(atoms, key) == Some(KeyRole::Public) => literal,
                        RuleProfile::Hybrid => tracking,
                    };
                    changed |= lower(&mut r, m, cand);
                    if let Ok(inv) = inverse(key, atoms) {
                        let (kv, ct) = (get(&r, &inv), get(&r, m));
                        if kv > UNKNOWN && ct > UNKNOWN {
                            changed |= lower(&mut r, body, kv.max(ct));
                        }
                    }
                }
                _ => {}
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Per principal: the unclosed level map accumulated from constraints.
pub struct OracleRun {
    pub base: BTreeMap<String, Ranks>,
    /// Level assigned by each send, by event index, with its receiver.
    pub sends: BTreeMap<usize, (String, i32)>,
    pub dom: BTreeSet<Message>,
}

impl OracleRun {
    pub fn closed(&self, s: &Scenario, who: &str, profile: RuleProfile) -> Ranks {
        closure(&self.base[who], &self.dom, &s.atoms, profile)
    }

    pub fn closed_rank(&self, s: &Scenario, who: &str, m: &Message, profile: RuleProfile) -> i32 {
        get(&self.closed(s, who, profile), m)
    }
}

fn assumption_applies(a: &Assumption, who: &str) -> bool {
    a.who.as_deref().is_none_or(|w| w == who)
}

/// Runs `events` from the initial assumptions with the one-step risk.
pub fn run(s: &Scenario, events: &[Event], profile: RuleProfile) -> OracleRun {
    let public = s.levels as i32 + 1;
    let dom = domain(s);
    let mut base: BTreeMap<String, Ranks> = BTreeMap::new();
    for p in &s.principals {
        let mut r = Ranks::new();
        for a in s.assumptions.iter().filter(|a| assumption_applies(a, &p.name)) {
            lower(&mut r, &a.message, a.level.rank());
        }
        base.insert(p.name.clone(), r);
    }
    let mut sends = BTreeMap::new();
    for (i, ev) in events.iter().enumerate() {
        match ev {
            Event::Invent { principal, atom, .. } => {
                lower(base.get_mut(principal).unwrap(), &Message::atom(atom), 0);
            }
            Event::Cryptanalyse { principal, learned, .. } => {
                lower(base.get_mut(principal).unwrap(), learned, 0);
            }
            Event::Send {
                from,
                to,
                message,
                interceptor,
            } => {
                let known = get(&closure(&base[from], &dom, &s.atoms, profile), message);
                assert!(known > UNKNOWN, "oracle: {from} sends unknown {message}");
                let level = (known + 1).min(public);
                let receiver = interceptor.as_ref().unwrap_or(to);
                lower(base.get_mut(receiver).unwrap(), message, level);
                sends.insert(i, (receiver.clone(), level));
            }
        }
    }
    OracleRun { base, sends, dom }
}

pub fn rank_of(token: &str, n: u32) -> i32 {
    spa_core::Level::parse(token, n).unwrap().rank()
}
