use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Three-way verdict scale used for gold labels and evaluator verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
    Middle,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "true",
            Label::False => "false",
            Label::Middle => "middle",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Label::True),
            "false" => Ok(Label::False),
            "middle" => Ok(Label::Middle),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// An evaluator's self-reported difficulty of a fact check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(format!("unknown difficulty `{other}`")),
        }
    }
}

/// Maps fine-grained source ratings onto the three-way scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub entries: HashMap<String, Label>,
}

impl Default for LabelMap {
    fn default() -> Self {
        let mut entries = HashMap::new();
        for k in ["true", "mostly true"] {
            entries.insert(k.to_string(), Label::True);
        }
        for k in ["false", "mostly false", "pants-on-fire", "pants on fire"] {
            entries.insert(k.to_string(), Label::False);
        }
        for k in ["middle", "half true", "half-true", "mixture", "unproven"] {
            entries.insert(k.to_string(), Label::Middle);
        }
        LabelMap { entries }
    }
}

impl LabelMap {
    pub fn normalize(&self, raw: &str) -> Option<Label> {
        let key = raw.trim().to_lowercase();
        self.entries.get(&key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    pub text: String,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_check_url: Option<String>,
}

impl Claim {
    pub fn new(claim_id: impl Into<String>, text: impl Into<String>) -> Self {
        Claim {
            claim_id: claim_id.into(),
            text: text.into(),
            source: String::new(),
            gold_label: None,
            fact_check_url: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}
