//! Move label inventories.

use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The eight annotated argumentative move types.
///
/// Declaration order is the canonical label order used for argmax tie-breaks
/// and report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum MoveLabel {
    Title,
    Claim,
    Data,
    CounterClaim,
    CounterData,
    RebuttalClaim,
    RebuttalData,
    NonArgument,
}

impl MoveLabel {
    pub const ALL: [MoveLabel; 8] = [
        MoveLabel::Title,
        MoveLabel::Claim,
        MoveLabel::Data,
        MoveLabel::CounterClaim,
        MoveLabel::CounterData,
        MoveLabel::RebuttalClaim,
        MoveLabel::RebuttalData,
        MoveLabel::NonArgument,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            MoveLabel::Title => "title",
            MoveLabel::Claim => "claim",
            MoveLabel::Data => "data",
            MoveLabel::CounterClaim => "counter_claim",
            MoveLabel::CounterData => "counter_data",
            MoveLabel::RebuttalClaim => "rebuttal_claim",
            MoveLabel::RebuttalData => "rebuttal_data",
            MoveLabel::NonArgument => "non_argument",
        }
    }

    /// Position in [`MoveLabel::ALL`].
    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MoveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?}")]
pub struct UnknownLabel(pub alloc::string::String);

impl FromStr for MoveLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MoveLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.into()))
    }
}

/// A label over candidate moves: a move type, or `none` for a fragment that
/// is not a complete move on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CandidateLabel {
    Move(MoveLabel),
    None,
}

impl CandidateLabel {
    pub const COUNT: usize = 9;

    /// Canonical order: the eight move labels, then `none`.
    pub const ALL: [CandidateLabel; 9] = [
        CandidateLabel::Move(MoveLabel::Title),
        CandidateLabel::Move(MoveLabel::Claim),
        CandidateLabel::Move(MoveLabel::Data),
        CandidateLabel::Move(MoveLabel::CounterClaim),
        CandidateLabel::Move(MoveLabel::CounterData),
        CandidateLabel::Move(MoveLabel::RebuttalClaim),
        CandidateLabel::Move(MoveLabel::RebuttalData),
        CandidateLabel::Move(MoveLabel::NonArgument),
        CandidateLabel::None,
    ];

    pub const fn index(self) -> usize {
        match self {
            CandidateLabel::Move(m) => m.index(),
            CandidateLabel::None => 8,
        }
    }

    pub const fn from_index(i: usize) -> Option<CandidateLabel> {
        if i < Self::COUNT {
            Some(Self::ALL[i])
        } else {
            None
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            CandidateLabel::Move(m) => m.as_str(),
            CandidateLabel::None => "none",
        }
    }

    pub const fn is_none(self) -> bool {
        matches!(self, CandidateLabel::None)
    }

    pub const fn as_move(self) -> Option<MoveLabel> {
        match self {
            CandidateLabel::Move(m) => Some(m),
            CandidateLabel::None => None,
        }
    }
}

impl From<MoveLabel> for CandidateLabel {
    fn from(m: MoveLabel) -> Self {
        CandidateLabel::Move(m)
    }
}

impl fmt::Display for CandidateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            Ok(CandidateLabel::None)
        } else {
            s.parse().map(CandidateLabel::Move)
        }
    }
}

#[cfg(feature = "serde")]
impl Serialize for CandidateLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for CandidateLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
