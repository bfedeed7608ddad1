use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quarter::Quarter;

/// Event-time bin of a panel row. `Baseline` is the omitted reference
/// period `t0-12 ..= t0-9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventBin {
    Baseline,
    /// `t0 + k` for `k` in `-8..=-1`.
    Pre(i8),
    /// `t0 + k` for `k` in `0..=2`, before entry.
    Dual(u8),
    /// `t0+3 ..= t0+12`, before entry.
    DualLate,
    Entry,
    /// `te+1 ..= te+2`.
    EntryEarly,
    /// `te+3 ..= te+12`.
    EntryLate,
}

impl EventBin {
    /// The fifteen estimated indicators in table order.
    pub const INDICATORS: [EventBin; 15] = [
        EventBin::Pre(-8),
        EventBin::Pre(-7),
        EventBin::Pre(-6),
        EventBin::Pre(-5),
        EventBin::Pre(-4),
        EventBin::Pre(-3),
        EventBin::Pre(-2),
        EventBin::Pre(-1),
        EventBin::Dual(0),
        EventBin::Dual(1),
        EventBin::Dual(2),
        EventBin::DualLate,
        EventBin::Entry,
        EventBin::EntryEarly,
        EventBin::EntryLate,
    ];

    /// Bins that carry a network-measure interaction.
    pub const INTERACTED: [EventBin; 7] = [
        EventBin::Dual(0),
        EventBin::Dual(1),
        EventBin::Dual(2),
        EventBin::DualLate,
        EventBin::Entry,
        EventBin::EntryEarly,
        EventBin::EntryLate,
    ];

    pub fn label(self) -> String {
        match self {
            EventBin::Baseline => "baseline".into(),
            EventBin::Pre(k) => format!("pre{k}"),
            EventBin::Dual(k) => format!("dual{k}"),
            EventBin::DualLate => "dual3+".into(),
            EventBin::Entry => "entry0".into(),
            EventBin::EntryEarly => "entry1+".into(),
            EventBin::EntryLate => "entry3+".into(),
        }
    }

    /// Row caption used by the table renderer.
    pub fn caption(self) -> String {
        match self {
            EventBin::Baseline => "Baseline t0-12 to t0-9".into(),
            EventBin::Pre(k) => format!("Before dual presence t0{k}"),
            EventBin::Dual(0) => "Start of dual presence t0".into(),
            EventBin::Dual(k) => format!("During dual presence t0+{k}"),
            EventBin::DualLate => "During dual presence t0+3 to t0+12".into(),
            EventBin::Entry => "Entry te".into(),
            EventBin::EntryEarly => "After entry te+1 to te+2".into(),
            EventBin::EntryLate => "After entry te+3 to te+12".into(),
        }
    }

    pub fn is_pre(self) -> bool {
        matches!(self, EventBin::Pre(_))
    }

    pub fn is_dual(self) -> bool {
        matches!(self, EventBin::Dual(_) | EventBin::DualLate)
    }

    pub fn is_entry(self) -> bool {
        matches!(self, EventBin::Entry | EventBin::EntryEarly | EventBin::EntryLate)
    }
}

impl fmt::Display for EventBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for EventBin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "baseline" {
            return Ok(EventBin::Baseline);
        }
        EventBin::INDICATORS
            .into_iter()
            .find(|b| b.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown event bin {s:?}")))
    }
}

/// Map quarter `t` to its bin given dual-presence start `t0` and entry `te`.
/// Entry bins take precedence from `te` on.
pub fn event_bin(t: Quarter, t0: Quarter, te: Quarter) -> Result<EventBin> {
    let outside = || Error::OutsideEventWindow { t, t0, te };
    if te <= t0 {
        return Err(outside());
    }
    if t >= te {
        return match t.offset_from(te) {
            0 => Ok(EventBin::Entry),
            1..=2 => Ok(EventBin::EntryEarly),
            3..=12 => Ok(EventBin::EntryLate),
            _ => Err(outside()),
        };
    }
    match t.offset_from(t0) {
        -12..=-9 => Ok(EventBin::Baseline),
        k @ -8..=-1 => Ok(EventBin::Pre(k as i8)),
        k @ 0..=2 => Ok(EventBin::Dual(k as u8)),
        3..=12 => Ok(EventBin::DualLate),
        _ => Err(outside()),
    }
}
