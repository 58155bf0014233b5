//! External addresses of exponential parameter rays and the intermediate
//! addresses that close them up into a circle at infinity.
//!
//! Entries are stored doubled (`2 s_k`) so that integers are even and
//! half-integers odd; comparisons are then plain integer comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An eventually periodic integer sequence `preperiod · period period ...`,
/// kept in canonical form (minimal period, then minimal preperiod).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExternalAddress {
    preperiod: Vec<i64>,
    period: Vec<i64>,
}

impl ExternalAddress {
    pub fn new(preperiod: Vec<i64>, period: Vec<i64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidInput("external address needs a nonempty period".into()));
        }
        let mut a = ExternalAddress { preperiod, period };
        a.canonicalize();
        Ok(a)
    }

    /// The constant address `s s s ...`.
    pub fn constant(s: i64) -> Self {
        ExternalAddress {
            preperiod: Vec::new(),
            period: vec![s],
        }
    }

    pub fn preperiod(&self) -> &[i64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    /// `s_k` for `k >= 1`.
    pub fn entry(&self, k: usize) -> i64 {
        assert!(k >= 1, "address entries are 1-based");
        let i = k - 1;
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn max_abs_entry(&self) -> i64 {
        self.preperiod
            .iter()
            .chain(&self.period)
            .map(|s| s.abs())
            .max()
            .unwrap_or(0)
    }

    /// Entry-wise negation: the address of the complex-conjugate ray.
    pub fn conjugate(&self) -> Self {
        let neg = |v: &[i64]| v.iter().map(|s| -s).collect::<Vec<_>>();
        ExternalAddress {
            preperiod: neg(&self.preperiod),
            period: neg(&self.period),
        }
    }

    /// True if the address equals its conjugate (all entries zero).
    pub fn is_real(&self) -> bool {
        self.preperiod.iter().chain(&self.period).all(|&s| s == 0)
    }

    /// Drops `s_1`.
    pub fn shift(&self) -> Self {
        let mut out = self.clone();
        if out.preperiod.is_empty() {
            out.period.rotate_left(1);
        } else {
            out.preperiod.remove(0);
        }
        out.canonicalize();
        out
    }

    /// Exponential boundedness test: some `x > 0` with
    /// `2 pi |s_k| <= F^(k-1)(x)` for all `k`, where `F(x) = e^x - 1`.
    ///
    /// Eventually periodic sequences are bounded, so `x = 2 pi max|s_k|`
    /// works (F is increasing with `F(x) > x`); the loop below checks the
    /// witness over one preperiod plus one period, which covers every
    /// distinct entry.
    pub fn is_admissible(&self) -> bool {
        let bound = 2.0 * std::f64::consts::PI * self.max_abs_entry() as f64;
        let mut x = bound.max(1.0);
        for k in 1..=self.preperiod.len() + self.period.len() {
            if 2.0 * std::f64::consts::PI * (self.entry(k).abs() as f64) > x {
                return false;
            }
            x = x.exp_m1().min(f64::MAX);
        }
        true
    }

    fn canonicalize(&mut self) {
        let p = self.period.len();
        if let Some(q) = (1..p)
            .filter(|q| p % q == 0)
            .find(|&q| (q..p).all(|i| self.period[i] == self.period[i - q]))
        {
            self.period.truncate(q);
        }
        while let Some(&last) = self.preperiod.last() {
            if last != *self.period.last().unwrap() {
                break;
            }
            self.preperiod.pop();
            self.period.rotate_right(1);
        }
    }
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.preperiod {
            write!(f, "{s} ")?;
        }
        write!(f, "|")?;
        for s in &self.period {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

/// A finite address `s_1 ... s_{n-1} inf` whose last finite entry is a
/// half-integer. Length 1 is the bare address `inf`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntermediateAddress {
    ints: Vec<i64>,
    /// Doubled value of the half-integer entry (always odd).
    half: Option<i64>,
}

impl IntermediateAddress {
    pub fn infinity() -> Self {
        IntermediateAddress { ints: Vec::new(), half: None }
    }

    /// `ints · (half_doubled / 2) · inf`; `half_doubled` must be odd.
    pub fn new(ints: Vec<i64>, half_doubled: i64) -> Result<Self> {
        if half_doubled.is_even() {
            return Err(Error::InvalidInput(format!(
                "last finite entry must lie in Z + 1/2, got {}",
                half_doubled / 2
            )));
        }
        Ok(IntermediateAddress {
            ints,
            half: Some(half_doubled),
        })
    }

    /// Length `n` counting the terminal infinity.
    pub fn len(&self) -> usize {
        self.ints.len() + usize::from(self.half.is_some()) + 1
    }

    pub fn is_infinity(&self) -> bool {
        self.half.is_none()
    }
}

impl fmt::Display for IntermediateAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.ints {
            write!(f, "{s} ")?;
        }
        if let Some(h) = self.half {
            write!(f, "{h}/2 ")?;
        }
        write!(f, "inf")
    }
}

/// An element of the combinatorial boundary: infinite or intermediate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Address {
    Infinite(ExternalAddress),
    Intermediate(IntermediateAddress),
}

impl Address {
    pub fn infinity() -> Self {
        Address::Intermediate(IntermediateAddress::infinity())
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Address::Intermediate(a) if a.is_infinity())
    }

    /// Slot `k >= 1` of the sequence view.
    fn slot(&self, k: usize) -> Slot {
        match self {
            Address::Infinite(a) => Slot::Value(2 * a.entry(k)),
            Address::Intermediate(a) => {
                let i = k - 1;
                if i < a.ints.len() {
                    Slot::Value(2 * a.ints[i])
                } else if i == a.ints.len() && a.half.is_some() {
                    Slot::Value(a.half.unwrap())
                } else {
                    Slot::Infinity
                }
            }
        }
    }

    /// Number of slots after which both sequences are determined.
    fn horizon(a: &Address, b: &Address) -> usize {
        match (a, b) {
            (Address::Infinite(x), Address::Infinite(y)) => {
                x.preperiod.len().max(y.preperiod.len()) + x.period.len().lcm(&y.period.len())
            }
            (Address::Intermediate(x), _) | (_, Address::Intermediate(x)) => x.len(),
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Infinite(a) => a.fmt(f),
            Address::Intermediate(a) => a.fmt(f),
        }
    }
}

impl From<ExternalAddress> for Address {
    fn from(a: ExternalAddress) -> Self {
        Address::Infinite(a)
    }
}

impl From<IntermediateAddress> for Address {
    fn from(a: IntermediateAddress) -> Self {
        Address::Intermediate(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Value(i64),
    Infinity,
}

/// Lexicographic order on addresses other than the bare `inf`; a terminal
/// infinity sits above every entry in its slot.
pub fn lex_compare(a: &Address, b: &Address) -> Result<Ordering> {
    if a.is_infinity() || b.is_infinity() {
        return Err(Error::NotComparable);
    }
    Ok(compare_unchecked(a, b))
}

fn compare_unchecked(a: &Address, b: &Address) -> Ordering {
    for k in 1..=Address::horizon(a, b) {
        let (x, y) = (a.slot(k), b.slot(k));
        match x.cmp(&y) {
            Ordering::Equal if x == Slot::Infinity => return Ordering::Equal,
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Linear order with the bare `inf` as the maximum.
fn cyclic_key_cmp(a: &Address, b: &Address) -> Ordering {
    match (a.is_infinity(), b.is_infinity()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => compare_unchecked(a, b),
    }
}

/// True iff `x` lies strictly between `a` and `b` when the circle of
/// addresses is traversed in increasing order from `a`, wrapping at `inf`.
pub fn cyclic_between(a: &Address, b: &Address, x: &Address) -> Result<bool> {
    let ab = cyclic_key_cmp(a, b);
    if ab == Ordering::Equal || cyclic_key_cmp(a, x) == Ordering::Equal || cyclic_key_cmp(b, x) == Ordering::Equal {
        return Err(Error::NotDistinct);
    }
    let after_a = cyclic_key_cmp(x, a) == Ordering::Greater;
    let before_b = cyclic_key_cmp(x, b) == Ordering::Less;
    Ok(if ab == Ordering::Less {
        after_a && before_b
    } else {
        after_a || before_b
    })
}

pub fn is_admissible(a: &ExternalAddress) -> bool {
    a.is_admissible()
}

pub fn shift(a: &ExternalAddress) -> ExternalAddress {
    a.shift()
}

/// A bounded (eventually periodic) external address strictly between two
/// distinct comparable addresses, built by interpolating at the first slot
/// where they differ.
pub fn bounded_between(a: &Address, b: &Address) -> Result<ExternalAddress> {
    let (lo, hi) = match lex_compare(a, b)? {
        Ordering::Less => (a, b),
        Ordering::Greater => (b, a),
        Ordering::Equal => return Err(Error::NotDistinct),
    };
    let mut prefix = Vec::new();
    let mut k = 1;
    loop {
        let (x, y) = (lo.slot(k), hi.slot(k));
        if x != y {
            break;
        }
        match x {
            Slot::Value(v) => prefix.push(v / 2),
            Slot::Infinity => unreachable!("equal addresses were rejected"),
        }
        k += 1;
    }
    let value = |s: Slot| match s {
        Slot::Value(v) => v,
        Slot::Infinity => unreachable!(),
    };
    let x = value(lo.slot(k));
    // smallest integer strictly above x/2
    let above = (x / 2) + if x.is_even() { 1 } else { (x > 0) as i64 };
    let above = if 2 * above > x { above } else { above + 1 };
    let fits = match hi.slot(k) {
        Slot::Infinity => true,
        Slot::Value(y) => 2 * above < y,
    };
    if fits {
        prefix.push(above);
        return ExternalAddress::new(prefix, vec![0]);
    }
    let y = value(hi.slot(k));
    if x.is_even() {
        // lo_k is an integer j; stay at j and go above lo's next entry
        prefix.push(x / 2);
        let next = value(lo.slot(k + 1));
        prefix.push(Integer::div_floor(&next, &2) + 1);
    } else {
        // lo_k = j - 1/2 and hi_k = j; stay at j and go below hi's next entry
        prefix.push(y / 2);
        let next = value(hi.slot(k + 1));
        prefix.push(-(Integer::div_floor(&-next, &2) + 1));
    }
    ExternalAddress::new(prefix, vec![0])
}

// ---------------------------------------------------------------------------
// Text syntax: entries separated by spaces, `|` between preperiod and period,
// half-integers as `p/2`, terminal infinity as `inf`.

fn parse_entry(tok: &str, pos: usize) -> Result<i64> {
    let err = |msg: String| Error::Parse { pos, msg };
    if let Some((num, den)) = tok.split_once('/') {
        let num: i64 = num
            .parse()
            .map_err(|_| err(format!("bad numerator in `{tok}`")))?;
        if den != "2" {
            return Err(err(format!("only half-integers p/2 are allowed, got `{tok}`")));
        }
        if num.is_even() {
            return Err(err(format!("`{tok}` is not in Z + 1/2")));
        }
        Ok(num)
    } else {
        tok.parse::<i64>()
            .map(|v| 2 * v)
            .map_err(|_| err(format!("expected an integer, `p/2`, `|` or `inf`, got `{tok}`")))
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
            if ch == '|' {
                if let Some(s) = start.take() {
                    tokens.push((s, &text[s..i]));
                }
                tokens.push((i, "|"));
            } else if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s, &text[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if tokens.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty address".into() });
        }
        let mut pre = Vec::new();
        let mut per = Vec::new();
        let mut bar = None;
        for (idx, &(pos, tok)) in tokens.iter().enumerate() {
            match tok {
                "|" => {
                    if bar.is_some() {
                        return Err(Error::Parse { pos, msg: "second `|`".into() });
                    }
                    bar = Some(pos);
                }
                "inf" | "∞" => {
                    if bar.is_some() {
                        return Err(Error::Parse { pos, msg: "`inf` cannot follow `|`".into() });
                    }
                    if idx + 1 != tokens.len() {
                        return Err(Error::Parse {
                            pos: tokens[idx + 1].0,
                            msg: "nothing may follow `inf`".into(),
                        });
                    }
                    return intermediate_from(&pre);
                }
                _ => {
                    let v = parse_entry(tok, pos)?;
                    if v.is_odd() {
                        let last = idx + 2 == tokens.len() && matches!(tokens[idx + 1].1, "inf" | "∞");
                        if !last {
                            return Err(Error::Parse {
                                pos,
                                msg: "a half-integer may only appear directly before `inf`".into(),
                            });
                        }
                    }
                    if bar.is_some() { per.push((pos, v)) } else { pre.push((pos, v)) }
                }
            }
        }
        let Some(bar_pos) = bar else {
            return Err(Error::Parse {
                pos: text.len(),
                msg: "missing `|` before the period (or `inf` terminator)".into(),
            });
        };
        if per.is_empty() {
            return Err(Error::Parse { pos: bar_pos, msg: "empty period".into() });
        }
        let strip = |v: &[(usize, i64)]| v.iter().map(|&(_, x)| x / 2).collect::<Vec<_>>();
        Ok(Address::Infinite(ExternalAddress::new(strip(&pre), strip(&per))?))
    }
}

fn intermediate_from(entries: &[(usize, i64)]) -> Result<Address> {
    let Some((&(pos, last), init)) = entries.split_last() else {
        return Ok(Address::infinity());
    };
    if last.is_even() {
        return Err(Error::Parse {
            pos,
            msg: "the entry before `inf` must be a half-integer".into(),
        });
    }
    let ints = init.iter().map(|&(_, v)| v / 2).collect();
    Ok(Address::Intermediate(IntermediateAddress::new(ints, last)?))
}

impl FromStr for ExternalAddress {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.parse::<Address>()? {
            Address::Infinite(a) => Ok(a),
            Address::Intermediate(_) => Err(Error::Parse {
                pos: 0,
                msg: "expected an infinite external address, found an intermediate one".into(),
            }),
        }
    }
}

impl Serialize for ExternalAddress {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExternalAddress {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
