//! The facial Action Unit vocabulary and its canonical ordering.
//!
//! The extractor reports intensities for 17 AUs on a 0–5 scale. Every
//! feature vector and every dump file orders AUs ascending by numeric id,
//! so the position of an AU in [`ActionUnit::ALL`] is its canonical index.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the 17 supported facial Action Units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionUnit {
    /// Inner brow raiser.
    Au01,
    /// Outer brow raiser.
    Au02,
    /// Brow lowerer.
    Au04,
    /// Upper lid raiser.
    Au05,
    /// Cheek raiser.
    Au06,
    /// Lid tightener.
    Au07,
    /// Nose wrinkler.
    Au09,
    /// Upper lip raiser.
    Au10,
    /// Lip corner puller.
    Au12,
    /// Dimpler.
    Au14,
    /// Lip corner depressor.
    Au15,
    /// Chin raiser.
    Au17,
    /// Lip stretcher.
    Au20,
    /// Lip tightener.
    Au23,
    /// Lips part.
    Au25,
    /// Jaw drop.
    Au26,
    /// Blink.
    Au45,
}

impl ActionUnit {
    /// All supported AUs in canonical (ascending numeric) order.
    pub const ALL: [ActionUnit; 17] = [
        ActionUnit::Au01,
        ActionUnit::Au02,
        ActionUnit::Au04,
        ActionUnit::Au05,
        ActionUnit::Au06,
        ActionUnit::Au07,
        ActionUnit::Au09,
        ActionUnit::Au10,
        ActionUnit::Au12,
        ActionUnit::Au14,
        ActionUnit::Au15,
        ActionUnit::Au17,
        ActionUnit::Au20,
        ActionUnit::Au23,
        ActionUnit::Au25,
        ActionUnit::Au26,
        ActionUnit::Au45,
    ];

    /// Numeric FACS id (1, 2, 4, ...).
    pub fn number(self) -> u8 {
        match self {
            ActionUnit::Au01 => 1,
            ActionUnit::Au02 => 2,
            ActionUnit::Au04 => 4,
            ActionUnit::Au05 => 5,
            ActionUnit::Au06 => 6,
            ActionUnit::Au07 => 7,
            ActionUnit::Au09 => 9,
            ActionUnit::Au10 => 10,
            ActionUnit::Au12 => 12,
            ActionUnit::Au14 => 14,
            ActionUnit::Au15 => 15,
            ActionUnit::Au17 => 17,
            ActionUnit::Au20 => 20,
            ActionUnit::Au23 => 23,
            ActionUnit::Au25 => 25,
            ActionUnit::Au26 => 26,
            ActionUnit::Au45 => 45,
        }
    }

    /// Zero-padded code such as `AU01`, matching extractor column prefixes.
    pub fn code(self) -> String {
        format!("AU{:02}", self.number())
    }

    /// Position of this AU in canonical order.
    pub fn canonical_index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }

    /// Parse a code such as `AU01` or `AU45`. Returns `None` when the code
    /// is not in the 17-AU vocabulary.
    pub fn from_code(code: &str) -> Option<ActionUnit> {
        let digits = code.strip_prefix("AU")?;
        let number: u8 = digits.parse().ok()?;
        Self::ALL.iter().copied().find(|a| a.number() == number)
    }
}

impl fmt::Display for ActionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AU{:02}", self.number())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_ascending_numeric() {
        let numbers: Vec<u8> = ActionUnit::ALL.iter().map(|a| a.number()).collect();
        let mut sorted = numbers.clone();
        sorted.sort_unstable();
        assert_eq!(numbers, sorted);
        assert_eq!(ActionUnit::ALL.len(), 17);
    }

    #[test]
    fn code_round_trips() {
        for au in ActionUnit::ALL {
            assert_eq!(ActionUnit::from_code(&au.code()), Some(au));
        }
        assert_eq!(ActionUnit::from_code("AU03"), None);
        assert_eq!(ActionUnit::from_code("AU1"), Some(ActionUnit::Au01));
        assert_eq!(ActionUnit::from_code("XY01"), None);
    }

    #[test]
    fn enum_order_matches_canonical_index() {
        for (i, au) in ActionUnit::ALL.iter().enumerate() {
            assert_eq!(au.canonical_index(), i);
        }
        assert!(ActionUnit::Au01 < ActionUnit::Au45);
    }
}
