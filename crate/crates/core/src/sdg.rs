//! The seventeen Sustainable Development Goals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of goals in the 2030 Agenda.
pub const SDG_COUNT: usize = 17;

const NAMES: [&str; SDG_COUNT] = [
    "No Poverty",
    "Zero Hunger",
    "Good Health and Well-being",
    "Quality Education",
    "Gender Equality",
    "Clean Water and Sanitation",
    "Affordable and Clean Energy",
    "Decent Work and Economic Growth",
    "Industry, Innovation and Infrastructure",
    "Reduced Inequalities",
    "Sustainable Cities and Communities",
    "Responsible Consumption and Production",
    "Climate Action",
    "Life Below Water",
    "Life on Land",
    "Peace, Justice and Strong Institutions",
    "Partnerships for the Goals",
];

/// A goal number in `1..=17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SdgId(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sdg-id out of range: {0} (expected 1-17)")]
pub struct SdgRangeError(pub i64);

impl SdgId {
    pub fn new(n: u8) -> Result<Self, SdgRangeError> {
        if (1..=SDG_COUNT as u8).contains(&n) {
            Ok(SdgId(n))
        } else {
            Err(SdgRangeError(n as i64))
        }
    }

    /// Goal at a zero-based slot, for iterating fixed-size per-goal arrays.
    pub(crate) fn from_index(i: usize) -> Self {
        debug_assert!(i < SDG_COUNT);
        SdgId(i as u8 + 1)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = SdgId> {
        (0..SDG_COUNT).map(SdgId::from_index)
    }
}

impl TryFrom<u8> for SdgId {
    type Error = SdgRangeError;
    fn try_from(n: u8) -> Result<Self, Self::Error> {
        SdgId::new(n)
    }
}

impl TryFrom<i64> for SdgId {
    type Error = SdgRangeError;
    fn try_from(n: i64) -> Result<Self, Self::Error> {
        u8::try_from(n).map_err(|_| SdgRangeError(n)).and_then(SdgId::new)
    }
}

impl From<SdgId> for u8 {
    fn from(id: SdgId) -> u8 {
        id.0
    }
}

impl fmt::Display for SdgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for SdgId {
    type Err = SdgRangeError;

    /// Accepts `4`, `SDG 4`, `sdg04` and similar spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t
            .strip_prefix("SDG")
            .or_else(|| t.strip_prefix("sdg"))
            .or_else(|| t.strip_prefix("Sdg"))
            .unwrap_or(t)
            .trim_start_matches([' ', '_', '-']);
        match t.parse::<i64>() {
            Ok(n) => SdgId::try_from(n),
            Err(_) => Err(SdgRangeError(-1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_enforced() {
        assert!(SdgId::new(0).is_err());
        assert!(SdgId::new(18).is_err());
        assert_eq!(SdgId::new(17).unwrap().index(), 16);
        assert_eq!(SdgId::all().count(), 17);
    }

    #[test]
    fn parses_common_spellings() {
        assert_eq!("SDG 4".parse::<SdgId>().unwrap().get(), 4);
        assert_eq!("sdg01".parse::<SdgId>().unwrap().get(), 1);
        assert_eq!(" 17 ".parse::<SdgId>().unwrap().get(), 17);
        assert!("18".parse::<SdgId>().is_err());
        assert!("poverty".parse::<SdgId>().is_err());
    }
}
