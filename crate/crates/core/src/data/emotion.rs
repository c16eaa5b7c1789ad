use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DataError;

/// The eight photo-emotion categories of the Deep Emotion dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion8 {
    Amusement,
    Awe,
    Anger,
    Contentment,
    Excitement,
    Disgust,
    Fear,
    Sadness,
}

impl Emotion8 {
    pub const ALL: [Emotion8; 8] = [
        Emotion8::Amusement,
        Emotion8::Awe,
        Emotion8::Anger,
        Emotion8::Contentment,
        Emotion8::Excitement,
        Emotion8::Disgust,
        Emotion8::Fear,
        Emotion8::Sadness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion8::Amusement => "amusement",
            Emotion8::Awe => "awe",
            Emotion8::Anger => "anger",
            Emotion8::Contentment => "contentment",
            Emotion8::Excitement => "excitement",
            Emotion8::Disgust => "disgust",
            Emotion8::Fear => "fear",
            Emotion8::Sadness => "sadness",
        }
    }
}

impl fmt::Display for Emotion8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion8 {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Emotion8::ALL
            .into_iter()
            .find(|e| e.as_str() == lower)
            .ok_or_else(|| DataError::UnknownLabel {
                kind: "emotion",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arousal {
    High,
    Low,
}

impl Valence {
    /// Class order used by valence models.
    pub const CLASSES: [&'static str; 2] = ["negative", "positive"];

    pub fn as_str(self) -> &'static str {
        match self {
            Valence::Negative => "negative",
            Valence::Positive => "positive",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Valence::Negative => "-V",
            Valence::Positive => "+V",
        }
    }
}

impl Arousal {
    /// Class order used by arousal models.
    pub const CLASSES: [&'static str; 2] = ["high", "low"];

    pub fn as_str(self) -> &'static str {
        match self {
            Arousal::High => "high",
            Arousal::Low => "low",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Arousal::High => "+A",
            Arousal::Low => "-A",
        }
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Arousal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Valence {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "+v" | "pos" => Ok(Valence::Positive),
            "negative" | "-v" | "neg" => Ok(Valence::Negative),
            _ => Err(DataError::UnknownLabel {
                kind: "valence",
                value: s.to_string(),
            }),
        }
    }
}

impl FromStr for Arousal {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "+a" => Ok(Arousal::High),
            "low" | "-a" => Ok(Arousal::Low),
            _ => Err(DataError::UnknownLabel {
                kind: "arousal",
                value: s.to_string(),
            }),
        }
    }
}

pub fn regroup_valence(e: Emotion8) -> Valence {
    match e {
        Emotion8::Amusement | Emotion8::Contentment | Emotion8::Awe | Emotion8::Excitement => {
            Valence::Positive
        }
        Emotion8::Anger | Emotion8::Disgust | Emotion8::Fear | Emotion8::Sadness => {
            Valence::Negative
        }
    }
}

/// `None` for amusement and awe, which are left out of arousal training.
pub fn regroup_arousal(e: Emotion8) -> Option<Arousal> {
    match e {
        Emotion8::Anger | Emotion8::Excitement | Emotion8::Disgust | Emotion8::Fear => {
            Some(Arousal::High)
        }
        Emotion8::Contentment | Emotion8::Sadness => Some(Arousal::Low),
        Emotion8::Amusement | Emotion8::Awe => None,
    }
}
