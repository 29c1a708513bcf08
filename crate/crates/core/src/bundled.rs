//! Scenario files shipped with the library.

use crate::dsl::{parse_scenario, DslError};
use crate::scenario::Scenario;

pub const KERBEROS: &str = include_str!("../scenarios/kerberos.spa");
pub const NS_LOWE: &str = include_str!("../scenarios/ns_lowe.spa");
pub const FUZZY_EXAMPLE: &str = include_str!("../scenarios/fuzzy_fig1.scsp");

pub fn kerberos() -> Result<Scenario, DslError> {
    parse_scenario(KERBEROS, "kerberos")
}

pub fn ns_lowe() -> Result<Scenario, DslError> {
    parse_scenario(NS_LOWE, "ns_lowe")
}

/// Every bundled protocol scenario, by name.
pub fn all() -> Vec<(&'static str, &'static str)> {
    vec![("kerberos", KERBEROS), ("ns_lowe", NS_LOWE)]
}
