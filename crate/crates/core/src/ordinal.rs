//! Ordinals below ω², written `ω·a + b`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ordinal {
    /// Coefficient of ω.
    pub limits: u32,
    /// Finite part.
    pub steps: u64,
}

impl Ordinal {
    pub const ZERO: Ordinal = Ordinal { limits: 0, steps: 0 };

    pub fn new(limits: u32, steps: u64) -> Self {
        Ordinal { limits, steps }
    }

    pub fn finite(steps: u64) -> Self {
        Ordinal { limits: 0, steps }
    }

    pub fn succ(self) -> Self {
        Ordinal { steps: self.steps + 1, ..self }
    }

    /// The next limit ordinal above `self`.
    pub fn next_limit(self) -> Self {
        Ordinal { limits: self.limits + 1, steps: 0 }
    }

    pub fn is_limit(self) -> bool {
        self.limits > 0 && self.steps == 0
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.limits, self.steps) {
            (0, b) => write!(f, "{b}"),
            (a, 0) => write!(f, "w*{a}"),
            (a, b) => write!(f, "w*{a}+{b}"),
        }
    }
}

impl FromStr for Ordinal {
    type Err = Error;

    /// Accepts `B`, `w`, `w+B`, `w*A` and `w*A+B`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Invalid(format!("malformed ordinal `{s}`"));
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let Some(rest) = s.strip_prefix('w') else {
            return Ok(Ordinal::finite(num(s)?));
        };
        let (coef, tail) = match rest.strip_prefix('*') {
            Some(r) => match r.split_once('+') {
                Some((a, b)) => (num(a)?, Some(b)),
                None => (num(r)?, None),
            },
            None if rest.is_empty() => (1, None),
            None => (1, Some(rest.strip_prefix('+').ok_or_else(bad)?)),
        };
        let steps = tail.map(num).transpose()?.unwrap_or(0);
        let limits = u32::try_from(coef).map_err(|_| bad())?;
        Ok(Ordinal { limits, steps })
    }
}
