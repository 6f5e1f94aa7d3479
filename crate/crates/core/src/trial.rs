use serde::{Deserialize, Serialize};

use crate::state::{ProbVector, Site};

/// How a single collapse trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// All mass on one site.
    Fixated(Site),
    /// The step budget ran out first.
    Exhausted,
}

impl Outcome {
    pub fn site(self) -> Option<Site> {
        match self {
            Outcome::Fixated(k) => Some(k),
            Outcome::Exhausted => None,
        }
    }
}

/// Result of running one engine to fixation (or to its budget).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub outcome: Outcome,
    /// Steps taken; the fixation time `M` when the trial fixated.
    pub steps: u64,
    pub final_p: ProbVector,
}

impl TrialResult {
    pub(crate) fn new(final_p: ProbVector, steps: u64) -> Self {
        let outcome = match final_p.fixated() {
            Some(k) => Outcome::Fixated(k),
            None => Outcome::Exhausted,
        };
        Self {
            outcome,
            steps,
            final_p,
        }
    }
}
