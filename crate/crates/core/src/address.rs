//! External addresses as combinatorial objects.
//!
//! Only eventually periodic sequences are representable; the canonical form
//! keeps the repeating block primitive and the preperiod minimal, so equality
//! and hashing behave like equality of the infinite sequences.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DomainLabel;

/// Eventually periodic sequence of fundamental-domain labels.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExternalAddress {
    pre: Vec<DomainLabel>,
    per: Vec<DomainLabel>,
}

/// Finite sequence of labels (the address of a fundamental tail).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FiniteAddress {
    pub entries: Vec<DomainLabel>,
}

impl ExternalAddress {
    pub fn new(pre: Vec<DomainLabel>, per: Vec<DomainLabel>) -> Result<Self> {
        if per.is_empty() {
            return Err(Error::Domain("address period must be nonempty"));
        }
        let mut addr = ExternalAddress { pre, per };
        addr.canonicalize();
        Ok(addr)
    }

    pub fn periodic(per: Vec<DomainLabel>) -> Result<Self> {
        Self::new(Vec::new(), per)
    }

    pub fn fixed(label: DomainLabel) -> Self {
        ExternalAddress {
            pre: Vec::new(),
            per: vec![label],
        }
    }

    fn canonicalize(&mut self) {
        // primitive repeating block
        let n = self.per.len();
        for d in 1..n {
            if n.is_multiple_of(d) && self.per.chunks(d).all(|c| c == &self.per[..d]) {
                self.per.truncate(d);
                break;
            }
        }
        // absorb a preperiod tail that matches the block end
        while let Some(&last) = self.pre.last() {
            if last == *self.per.last().unwrap() {
                self.pre.pop();
                self.per.rotate_right(1);
            } else {
                break;
            }
        }
    }

    pub fn preperiod(&self) -> &[DomainLabel] {
        &self.pre
    }

    pub fn period(&self) -> &[DomainLabel] {
        &self.per
    }

    pub fn preperiod_len(&self) -> usize {
        self.pre.len()
    }

    pub fn period_len(&self) -> usize {
        self.per.len()
    }

    pub fn is_periodic(&self) -> bool {
        self.pre.is_empty()
    }

    /// `F_n` of the sequence; total for all `n`.
    pub fn entry(&self, n: usize) -> DomainLabel {
        if n < self.pre.len() {
            self.pre[n]
        } else {
            self.per[(n - self.pre.len()) % self.per.len()]
        }
    }

    /// First `n` entries.
    pub fn prefix(&self, n: usize) -> Result<FiniteAddress> {
        if n == 0 {
            return Err(Error::Domain("prefix length must be positive"));
        }
        Ok(FiniteAddress {
            entries: (0..n).map(|i| self.entry(i)).collect(),
        })
    }

    /// Drops the first entry and re-canonicalizes.
    pub fn shift(&self) -> Self {
        let mut pre = self.pre.clone();
        let mut per = self.per.clone();
        if pre.is_empty() {
            per.rotate_left(1);
        } else {
            pre.remove(0);
        }
        let mut addr = ExternalAddress { pre, per };
        addr.canonicalize();
        addr
    }

    pub fn shift_n(&self, n: usize) -> Self {
        let mut s = self.clone();
        for _ in 0..n {
            s = s.shift();
        }
        s
    }

    /// Lexicographic comparison using the cut-induced linear order on labels.
    pub fn lex_compare(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let horizon = self.pre.len() + other.pre.len() + lcm(self.per.len(), other.per.len()) + 1;
        for n in 0..horizon {
            let c = self.entry(n).cmp(&other.entry(n));
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    }

    /// Number of labels with `|k| <= bound` style alphabets appearing.
    pub fn labels(&self) -> Vec<DomainLabel> {
        let mut v: Vec<DomainLabel> = self.pre.iter().chain(self.per.iter()).copied().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Checks the tower bound `dist(zeta_0, zeta_{F_n}) <= exp^n(T)` for all
    /// `n` through one full period past the preperiod, which suffices for an
    /// eventually periodic sequence.
    pub fn is_exponentially_bounded(
        &self,
        t: f64,
        base_distances: &BTreeMap<DomainLabel, f64>,
    ) -> Result<bool> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Domain("threshold T must be positive"));
        }
        let horizon = self.pre.len() + self.per.len();
        let mut bound = t;
        for n in 0..=horizon {
            let label = self.entry(n);
            let d = *base_distances
                .get(&label)
                .ok_or_else(|| Error::MissingLabel {
                    label: label.to_string(),
                })?;
            if d > bound {
                return Ok(false);
            }
            if n < horizon {
                bound = bound.exp();
                if !bound.is_finite() {
                    return Ok(true);
                }
            }
        }
        Ok(true)
    }
}

impl PartialOrd for ExternalAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExternalAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_compare(other)
    }
}

/// True iff `a < b < c` up to cyclic rotation, with the lexicographic order.
pub fn cyclic_between(a: &ExternalAddress, b: &ExternalAddress, c: &ExternalAddress) -> bool {
    use Ordering::Less;
    (a.lex_compare(b) == Less && b.lex_compare(c) == Less)
        || (b.lex_compare(c) == Less && c.lex_compare(a) == Less)
        || (c.lex_compare(a) == Less && a.lex_compare(b) == Less)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

impl FiniteAddress {
    pub fn new(entries: Vec<DomainLabel>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("finite address must be nonempty"));
        }
        Ok(FiniteAddress { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn join_labels(f: &mut fmt::Formatter<'_>, labels: &[DomainLabel]) -> fmt::Result {
    for (i, l) in labels.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{l}")?;
    }
    Ok(())
}

impl fmt::Display for FiniteAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join_labels(f, &self.entries)
    }
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.pre.is_empty() {
            write!(f, "[")?;
            join_labels(f, &self.pre)?;
            write!(f, "] ")?;
        }
        write!(f, "(")?;
        join_labels(f, &self.per)?;
        write!(f, ")")
    }
}

impl std::str::FromStr for ExternalAddress {
    type Err = Error;

    /// Accepts `"(1,2,3)"` and `"[5] (1,2,3)"`; cosine labels use `L`/`R`
    /// prefixes, e.g. `"(L3,R-1)"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::Parse(format!("{msg}: '{s}'"));
        let (pre_part, per_part) = match s.find('(') {
            Some(i) => (&s[..i], &s[i..]),
            None => return Err(bad("address needs a parenthesized period")),
        };
        let per_part = per_part.trim();
        if !per_part.starts_with('(') || !per_part.ends_with(')') {
            return Err(bad("malformed period block"));
        }
        let per = parse_labels(&per_part[1..per_part.len() - 1])?;
        let pre_part = pre_part.trim();
        let pre = if pre_part.is_empty() {
            Vec::new()
        } else {
            if !pre_part.starts_with('[') || !pre_part.ends_with(']') {
                return Err(bad("malformed preperiod block"));
            }
            parse_labels(&pre_part[1..pre_part.len() - 1])?
        };
        if per.is_empty() {
            return Err(bad("period must be nonempty"));
        }
        ExternalAddress::new(pre, per)
    }
}

fn parse_labels(s: &str) -> Result<Vec<DomainLabel>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|tok| tok.trim().parse()).collect()
}

impl Serialize for ExternalAddress {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExternalAddress {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for FiniteAddress {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}
