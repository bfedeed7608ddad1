use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use crate::error::Error;

/// A calendar quarter such as `2006Q1`.
///
/// Quarters are totally ordered and support signed offsets that cross year
/// boundaries: `2006Q1 - 1 == 2005Q4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Result<Self, Error> {
        if (1..=4).contains(&q) {
            Ok(Quarter { year, q })
        } else {
            Err(Error::InvalidQuarter(format!("{year}Q{q}")))
        }
    }

    /// Quarter containing a calendar month (1..=12).
    pub fn from_month(year: i32, month: u32) -> Result<Self, Error> {
        if !(1..=12).contains(&month) {
            return Err(Error::Parse(format!("invalid month {month}")));
        }
        Quarter::new(year, ((month - 1) / 3 + 1) as u8)
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn q(self) -> u8 {
        self.q
    }

    /// Last calendar month of the quarter (3, 6, 9 or 12).
    pub fn last_month(self) -> u32 {
        self.q as u32 * 3
    }

    /// Linear index: consecutive quarters differ by one.
    pub fn index(self) -> i64 {
        self.year as i64 * 4 + (self.q as i64 - 1)
    }

    pub fn from_index(idx: i64) -> Self {
        Quarter {
            year: idx.div_euclid(4) as i32,
            q: (idx.rem_euclid(4) + 1) as u8,
        }
    }

    /// Number of quarters from `earlier` to `self` (negative if `self` precedes it).
    pub fn offset_from(self, earlier: Quarter) -> i64 {
        self.index() - earlier.index()
    }

    /// Inclusive iterator over `self..=last`.
    pub fn range_to(self, last: Quarter) -> impl Iterator<Item = Quarter> {
        (self.index()..=last.index()).map(Quarter::from_index)
    }
}

impl Add<i64> for Quarter {
    type Output = Quarter;

    fn add(self, k: i64) -> Quarter {
        Quarter::from_index(self.index() + k)
    }
}

impl Sub<i64> for Quarter {
    type Output = Quarter;

    fn sub(self, k: i64) -> Quarter {
        Quarter::from_index(self.index() - k)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidQuarter(s.to_string());
        let (y, q) = s.trim().split_once(['Q', 'q']).ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let q: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q).map_err(|_| bad())
    }
}
