//! C-semirings: the abstraction, the security semiring over [`Level`], and the
//! fuzzy and boolean instances used to validate the generic constraint engine.

use std::cmp::Ordering;
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

/// A c-semiring `<A, +, x, 0, 1>`.
///
/// Instances carry their own parameters (the security semiring needs `n`),
/// so every operation takes `&self`.
pub trait Semiring {
    type Value: Clone + PartialEq + fmt::Debug;

    fn zero(&self) -> Self::Value;
    fn one(&self) -> Self::Value;
    fn plus(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn times(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;

    /// The induced order: `a <=_S b` iff `a + b = b`.
    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool {
        self.plus(a, b) == *b
    }

    fn sum<'a, I>(&self, values: I) -> Self::Value
    where
        I: IntoIterator<Item = &'a Self::Value>,
        Self::Value: 'a,
    {
        values
            .into_iter()
            .fold(self.zero(), |acc, v| self.plus(&acc, v))
    }

    fn product<'a, I>(&self, values: I) -> Self::Value
    where
        I: IntoIterator<Item = &'a Self::Value>,
        Self::Value: 'a,
    {
        values
            .into_iter()
            .fold(self.one(), |acc, v| self.times(&acc, v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("levels built for different semiring sizes (n = {left} and n = {right})")]
    ParameterMismatch { left: u32, right: u32 },
    #[error("rank {rank} is outside [-1, {max}]")]
    RankOutOfRange { rank: i32, max: i32 },
    #[error("semiring size must be positive")]
    ZeroSize,
    #[error("unrecognised level token `{0}`")]
    BadToken(String),
}

/// One security level of the linearly ordered set
/// `{unknown, private, traded_1, .., traded_n, public}`.
///
/// Levels are stored by rank: `unknown` is -1, `private` 0, `traded_i` is `i`
/// and `public` is `n + 1`. A larger rank is a less secure level.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    rank: i32,
    n: u32,
}

impl Level {
    pub fn new(rank: i32, n: u32) -> Result<Self, LevelError> {
        if n == 0 {
            return Err(LevelError::ZeroSize);
        }
        let max = n as i32 + 1;
        if !(-1..=max).contains(&rank) {
            return Err(LevelError::RankOutOfRange { rank, max });
        }
        Ok(Level { rank, n })
    }

    pub fn unknown(n: u32) -> Self {
        Level { rank: -1, n }
    }

    pub fn private(n: u32) -> Self {
        Level { rank: 0, n }
    }

    pub fn public(n: u32) -> Self {
        Level {
            rank: n as i32 + 1,
            n,
        }
    }

    /// `traded_i`; with the double naming `traded_-1`, `traded_0` and
    /// `traded_{n+1}` are `unknown`, `private` and `public`.
    pub fn traded(i: i32, n: u32) -> Result<Self, LevelError> {
        Level::new(i, n)
    }

    pub fn rank(self) -> i32 {
        self.rank
    }

    pub fn size(self) -> u32 {
        self.n
    }

    pub fn is_unknown(self) -> bool {
        self.rank == -1
    }

    pub fn is_public(self) -> bool {
        self.rank == self.n as i32 + 1
    }

    /// Known to its holder: strictly below `unknown`.
    pub fn is_known(self) -> bool {
        self.rank > -1
    }

    fn same_n(self, other: Level) -> Result<(), LevelError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(LevelError::ParameterMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    /// `traded_i + traded_j = traded_min(i,j)`: the better of the two.
    pub fn plus(self, other: Level) -> Result<Level, LevelError> {
        self.same_n(other)?;
        Ok(Level {
            rank: self.rank.min(other.rank),
            n: self.n,
        })
    }

    /// `traded_i x traded_j = traded_max(i,j)`: the worse of the two.
    pub fn times(self, other: Level) -> Result<Level, LevelError> {
        self.same_n(other)?;
        Ok(Level {
            rank: self.rank.max(other.rank),
            n: self.n,
        })
    }

    pub fn leq(self, other: Level) -> Result<bool, LevelError> {
        Ok(self.plus(other)? == other)
    }

    /// Every level of the carrier, from `unknown` down to `public`.
    pub fn all(n: u32) -> impl Iterator<Item = Level> {
        (-1..=n as i32 + 1).map(move |rank| Level { rank, n })
    }

    pub fn parse(token: &str, n: u32) -> Result<Level, LevelError> {
        match token {
            "unknown" => Ok(Level::unknown(n)),
            "private" => Ok(Level::private(n)),
            "public" => Ok(Level::public(n)),
            t => {
                let index = t
                    .strip_prefix("traded_")
                    .and_then(|i| i.parse::<i32>().ok())
                    .ok_or_else(|| LevelError::BadToken(t.to_string()))?;
                if !(1..=n as i32).contains(&index) {
                    return Err(LevelError::BadToken(t.to_string()));
                }
                Level::new(index, n)
            }
        }
    }
}

impl PartialOrd for Level {
    /// Security order: `unknown` is the greatest element, `public` the least.
    /// Levels of different sizes are incomparable.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.n == other.n).then(|| other.rank.cmp(&self.rank))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unknown() {
            f.write_str("unknown")
        } else if self.rank == 0 {
            f.write_str("private")
        } else if self.is_public() {
            f.write_str("public")
        } else {
            write!(f, "traded_{}", self.rank)
        }
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `S_sec = <L, +_sec, x_sec, public, unknown>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecuritySemiring {
    n: u32,
}

impl SecuritySemiring {
    pub fn new(n: u32) -> Result<Self, LevelError> {
        if n == 0 {
            return Err(LevelError::ZeroSize);
        }
        Ok(SecuritySemiring { n })
    }

    pub fn size(&self) -> u32 {
        self.n
    }

    pub fn unknown(&self) -> Level {
        Level::unknown(self.n)
    }

    pub fn private(&self) -> Level {
        Level::private(self.n)
    }

    pub fn public(&self) -> Level {
        Level::public(self.n)
    }

    pub fn traded(&self, i: i32) -> Result<Level, LevelError> {
        Level::traded(i, self.n)
    }

    pub fn carrier(&self) -> Vec<Level> {
        Level::all(self.n).collect()
    }

    pub fn parse_level(&self, token: &str) -> Result<Level, LevelError> {
        Level::parse(token, self.n)
    }
}

// Mixing sizes is a programming error inside one analysis; the checked
// variants live on `Level`.
impl Semiring for SecuritySemiring {
    type Value = Level;

    fn zero(&self) -> Level {
        self.public()
    }

    fn one(&self) -> Level {
        self.unknown()
    }

    fn plus(&self, a: &Level, b: &Level) -> Level {
        a.plus(*b).expect("levels from one security semiring")
    }

    fn times(&self, a: &Level, b: &Level) -> Level {
        a.times(*b).expect("levels from one security semiring")
    }
}

/// `<[0,1], max, min, 0, 1>` over any ordered numeric scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FuzzySemiring<T> {
    _scalar: PhantomData<T>,
}

impl<T> FuzzySemiring<T> {
    pub fn new() -> Self {
        FuzzySemiring {
            _scalar: PhantomData,
        }
    }
}

impl<T> Semiring for FuzzySemiring<T>
where
    T: Copy + PartialOrd + Zero + One + fmt::Debug,
{
    type Value = T;

    fn zero(&self) -> T {
        T::zero()
    }

    fn one(&self) -> T {
        T::one()
    }

    fn plus(&self, a: &T, b: &T) -> T {
        if *a >= *b {
            *a
        } else {
            *b
        }
    }

    fn times(&self, a: &T, b: &T) -> T {
        if *a <= *b {
            *a
        } else {
            *b
        }
    }
}

pub type FuzzyF64 = FuzzySemiring<f64>;
pub type FuzzyF32 = FuzzySemiring<f32>;
/// Exact fuzzy values.
pub type FuzzyRational = FuzzySemiring<num_rational::Ratio<i64>>;

/// `<{false, true}, or, and, false, true>`: classical CSPs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BooleanSemiring;

impl Semiring for BooleanSemiring {
    type Value = bool;

    fn zero(&self) -> bool {
        false
    }

    fn one(&self) -> bool {
        true
    }

    fn plus(&self, a: &bool, b: &bool) -> bool {
        *a || *b
    }

    fn times(&self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
}

/// Textual carrier values, for the generic constraint file format.
pub trait ParseValue: Semiring {
    fn parse_value(&self, text: &str) -> Result<Self::Value, String>;
    fn format_value(&self, value: &Self::Value) -> String;
}

impl ParseValue for SecuritySemiring {
    fn parse_value(&self, text: &str) -> Result<Level, String> {
        self.parse_level(text).map_err(|e| e.to_string())
    }

    fn format_value(&self, value: &Level) -> String {
        value.to_string()
    }
}

impl ParseValue for BooleanSemiring {
    fn parse_value(&self, text: &str) -> Result<bool, String> {
        match text {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(format!("`{other}` is not a boolean")),
        }
    }

    fn format_value(&self, value: &bool) -> String {
        value.to_string()
    }
}

fn in_unit_interval<T: PartialOrd + Zero + One>(v: &T) -> bool {
    *v >= T::zero() && *v <= T::one()
}

impl ParseValue for FuzzySemiring<f64> {
    fn parse_value(&self, text: &str) -> Result<f64, String> {
        let v = f64::from_str(text).map_err(|e| format!("`{text}`: {e}"))?;
        if in_unit_interval(&v) {
            Ok(v)
        } else {
            Err(format!("`{text}` is outside [0, 1]"))
        }
    }

    fn format_value(&self, value: &f64) -> String {
        format!("{value}")
    }
}

impl ParseValue for FuzzySemiring<num_rational::Ratio<i64>> {
    fn parse_value(&self, text: &str) -> Result<num_rational::Ratio<i64>, String> {
        let v = parse_exact_decimal(text).ok_or_else(|| format!("`{text}` is not a rational"))?;
        if in_unit_interval(&v) {
            Ok(v)
        } else {
            Err(format!("`{text}` is outside [0, 1]"))
        }
    }

    fn format_value(&self, value: &num_rational::Ratio<i64>) -> String {
        value.to_string()
    }
}

/// Accepts `p/q`, integers and plain decimals (`0.25` is exactly 1/4).
fn parse_exact_decimal(text: &str) -> Option<num_rational::Ratio<i64>> {
    use num_rational::Ratio;
    if let Some((p, q)) = text.split_once('/') {
        let q: i64 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Ratio::new(p.trim().parse().ok()?, q));
    }
    match text.split_once('.') {
        None => Some(Ratio::from_integer(text.parse().ok()?)),
        Some((int, frac)) => {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
                return None;
            }
            let denom = 10i64.pow(frac.len() as u32);
            let whole: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
            let f: i64 = frac.parse().ok()?;
            let sign = if int.starts_with('-') { -1 } else { 1 };
            Some(Ratio::new(whole * denom + sign * f, denom))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Law {
    PlusCommutative,
    PlusAssociative,
    PlusIdempotent,
    ZeroUnitOfPlus,
    OneAbsorbingForPlus,
    TimesCommutative,
    TimesAssociative,
    OneUnitOfTimes,
    ZeroAbsorbingForTimes,
    TimesDistributesOverPlus,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Law::PlusCommutative => "plus is commutative",
            Law::PlusAssociative => "plus is associative",
            Law::PlusIdempotent => "plus is idempotent",
            Law::ZeroUnitOfPlus => "zero is the unit of plus",
            Law::OneAbsorbingForPlus => "one is absorbing for plus",
            Law::TimesCommutative => "times is commutative",
            Law::TimesAssociative => "times is associative",
            Law::OneUnitOfTimes => "one is the unit of times",
            Law::ZeroAbsorbingForTimes => "zero is absorbing for times",
            Law::TimesDistributesOverPlus => "times distributes over plus",
        };
        f.write_str(s)
    }
}

/// A law that failed, with the sample elements that witness it.
#[derive(Debug, Clone, PartialEq)]
pub struct LawViolation<V> {
    pub law: Law,
    pub witness: Vec<V>,
}

/// Exhaustively checks the c-semiring laws over all pairs and triples drawn
/// from `sample`. Only the first witness of each law is reported.
pub fn check_semiring_laws<S: Semiring>(s: &S, sample: &[S::Value]) -> Vec<LawViolation<S::Value>> {
    let mut report: Vec<LawViolation<S::Value>> = Vec::new();
    let mut flag = |law: Law, witness: &[&S::Value]| {
        if report.iter().all(|v| v.law != law) {
            report.push(LawViolation {
                law,
                witness: witness.iter().map(|v| (*v).clone()).collect(),
            });
        }
    };
    let (zero, one) = (s.zero(), s.one());

    for a in sample {
        if s.plus(a, a) != *a {
            flag(Law::PlusIdempotent, &[a]);
        }
        if s.plus(a, &zero) != *a || s.plus(&zero, a) != *a {
            flag(Law::ZeroUnitOfPlus, &[a]);
        }
        if s.plus(a, &one) != one || s.plus(&one, a) != one {
            flag(Law::OneAbsorbingForPlus, &[a]);
        }
        if s.times(a, &one) != *a || s.times(&one, a) != *a {
            flag(Law::OneUnitOfTimes, &[a]);
        }
        if s.times(a, &zero) != zero || s.times(&zero, a) != zero {
            flag(Law::ZeroAbsorbingForTimes, &[a]);
        }
        for b in sample {
            if s.plus(a, b) != s.plus(b, a) {
                flag(Law::PlusCommutative, &[a, b]);
            }
            if s.times(a, b) != s.times(b, a) {
                flag(Law::TimesCommutative, &[a, b]);
            }
            for c in sample {
                if s.plus(&s.plus(a, b), c) != s.plus(a, &s.plus(b, c)) {
                    flag(Law::PlusAssociative, &[a, b, c]);
                }
                if s.times(&s.times(a, b), c) != s.times(a, &s.times(b, c)) {
                    flag(Law::TimesAssociative, &[a, b, c]);
                }
                let left = s.times(a, &s.plus(b, c));
                let right = s.plus(&s.times(a, b), &s.times(a, c));
                let left_r = s.times(&s.plus(b, c), a);
                let right_r = s.plus(&s.times(b, a), &s.times(c, a));
                if left != right || left_r != right_r {
                    flag(Law::TimesDistributesOverPlus, &[a, b, c]);
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u32 = 4;

    fn t(i: i32) -> Level {
        Level::traded(i, N).unwrap()
    }

    #[test]
    fn plus_picks_the_smaller_index() {
        assert_eq!(t(1).plus(t(3)).unwrap(), t(1));
        assert_eq!(
            Level::unknown(N).plus(Level::public(N)).unwrap(),
            Level::unknown(N)
        );
        assert_eq!(
            Level::private(N).plus(Level::private(N)).unwrap(),
            Level::private(N)
        );
    }

    #[test]
    fn times_picks_the_larger_index() {
        assert_eq!(t(1).times(t(3)).unwrap(), t(3));
        assert_eq!(Level::unknown(N).times(t(2)).unwrap(), t(2));
        assert_eq!(
            Level::public(N).times(Level::private(N)).unwrap(),
            Level::public(N)
        );
    }

    #[test]
    fn leq_examples() {
        assert!(Level::public(N).leq(t(2)).unwrap());
        assert!(!t(1).leq(t(3)).unwrap());
        for l in Level::all(N) {
            assert!(l.leq(l).unwrap());
        }
    }

    #[test]
    fn double_naming_is_exact() {
        assert_eq!(t(-1), Level::unknown(N));
        assert_eq!(t(0), Level::private(N));
        assert_eq!(t(N as i32 + 1), Level::public(N));
        assert!(Level::traded(N as i32 + 2, N).is_err());
        assert!(Level::traded(-2, N).is_err());
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let a = Level::private(3);
        let b = Level::private(4);
        assert_eq!(
            a.plus(b),
            Err(LevelError::ParameterMismatch { left: 3, right: 4 })
        );
        assert!(a.times(b).is_err());
        assert!(a.leq(b).is_err());
        assert_eq!(a.partial_cmp(&b), None);
    }

    #[test]
    fn tokens_round_trip() {
        for l in Level::all(N) {
            assert_eq!(Level::parse(&l.to_string(), N).unwrap(), l);
        }
        assert!(Level::parse("traded_0", N).is_err());
        assert!(Level::parse("traded_5", N).is_err());
        assert!(Level::parse("secret", N).is_err());
    }

    #[test]
    fn order_is_total_and_matches_rank() {
        for a in Level::all(N) {
            for b in Level::all(N) {
                let le = a.leq(b).unwrap();
                assert_eq!(le, a.rank() >= b.rank());
                assert!(le || b.leq(a).unwrap());
                assert_eq!(a <= b, le);
                // lub and glb
                let lub = a.plus(b).unwrap();
                let glb = a.times(b).unwrap();
                assert!(a.leq(lub).unwrap() && b.leq(lub).unwrap());
                assert!(glb.leq(a).unwrap() && glb.leq(b).unwrap());
            }
        }
    }

    #[test]
    fn security_laws_hold_on_full_carrier() {
        for n in 1..=6 {
            let s = SecuritySemiring::new(n).unwrap();
            assert!(check_semiring_laws(&s, &s.carrier()).is_empty(), "n = {n}");
        }
    }

    #[test]
    fn fuzzy_laws_hold_on_sample() {
        let s = FuzzySemiring::<f64>::new();
        assert!(check_semiring_laws(&s, &[0.0, 0.2, 0.5, 0.8, 1.0]).is_empty());
        let b = BooleanSemiring;
        assert!(check_semiring_laws(&b, &[false, true]).is_empty());
    }

    struct LeftProjection;

    impl Semiring for LeftProjection {
        type Value = u8;
        fn zero(&self) -> u8 {
            0
        }
        fn one(&self) -> u8 {
            1
        }
        fn plus(&self, a: &u8, b: &u8) -> u8 {
            *a.max(b)
        }
        fn times(&self, a: &u8, _b: &u8) -> u8 {
            *a
        }
    }

    #[test]
    fn broken_times_is_reported_with_witness() {
        let report = check_semiring_laws(&LeftProjection, &[0, 1]);
        let comm = report
            .iter()
            .find(|v| v.law == Law::TimesCommutative)
            .expect("commutativity violation");
        assert_eq!(comm.witness.len(), 2);
        let (a, b) = (comm.witness[0], comm.witness[1]);
        assert_ne!(LeftProjection.times(&a, &b), LeftProjection.times(&b, &a));
    }

    #[test]
    fn exact_decimals() {
        use num_rational::Ratio;
        assert_eq!(parse_exact_decimal("0.8"), Some(Ratio::new(4, 5)));
        assert_eq!(parse_exact_decimal("1"), Some(Ratio::from_integer(1)));
        assert_eq!(parse_exact_decimal("2/8"), Some(Ratio::new(1, 4)));
        assert_eq!(parse_exact_decimal("x"), None);
        assert_eq!(parse_exact_decimal("1/0"), None);
    }
}
