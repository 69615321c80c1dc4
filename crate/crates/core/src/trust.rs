//! Evidential trust per (principal, norm) from terminal outcomes.
//!
//! The score is the mean of a Beta(s+1, v+1) distribution, (s+1)/(s+v+2),
//! where s and v count satisfied and violated instances the principal was
//! subject of. Expired instances never came due and are ignored.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::eval::{EvalState, InstanceKey, NormInstance};
use crate::lang::NormState;
use crate::ledger::PrincipalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrustScore {
    pub satisfied: u64,
    pub violated: u64,
}

impl TrustScore {
    /// The score as an exact fraction (numerator, denominator).
    pub fn ratio(&self) -> (u64, u64) {
        (self.satisfied + 1, self.satisfied + self.violated + 2)
    }

    pub fn score(&self) -> f64 {
        let (n, d) = self.ratio();
        n as f64 / d as f64
    }

    /// The score rounded to six decimal places.
    pub fn score_6dp(&self) -> f64 {
        (self.score() * 1e6).round() / 1e6
    }

    pub fn observations(&self) -> u64 {
        self.satisfied + self.violated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrustError {
    #[error("instance {} {:?} already counted", .0.norm_id, .0.bindings)]
    DoubleCount(InstanceKey),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustTable {
    scores: BTreeMap<(PrincipalId, String), TrustScore>,
    counted: BTreeSet<InstanceKey>,
}

impl TrustTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score for a pair; the neutral prior if nothing was observed.
    pub fn get(&self, principal: &str, norm_id: &str) -> TrustScore {
        self.scores.get(&(principal.to_string(), norm_id.to_string())).copied().unwrap_or_default()
    }

    /// Rows with at least one counted outcome, ordered by principal then norm.
    pub fn rows(&self) -> impl Iterator<Item = (&PrincipalId, &String, &TrustScore)> {
        self.scores.iter().filter(|(_, s)| s.observations() > 0).map(|((p, n), s)| (p, n, s))
    }

    pub fn is_counted(&self, key: &InstanceKey) -> bool {
        self.counted.contains(key)
    }
}

/// Folds terminal outcomes into the table. Non-terminal instances are
/// skipped; on a repeated instance the table is left unchanged.
pub fn update_trust<'a>(
    table: &TrustTable,
    outcomes: impl IntoIterator<Item = &'a NormInstance>,
) -> Result<TrustTable, TrustError> {
    let mut next = table.clone();
    for inst in outcomes {
        if !inst.state.is_terminal() {
            continue;
        }
        let key = inst.key();
        if !next.counted.insert(key.clone()) {
            return Err(TrustError::DoubleCount(key));
        }
        let entry = next.scores.entry((inst.subject.clone(), inst.norm_id.clone())).or_default();
        match inst.state {
            NormState::Satisfied => entry.satisfied += 1,
            NormState::Violated => entry.violated += 1,
            _ => {}
        }
    }
    Ok(next)
}

/// Trust table over every terminal instance of an evaluation.
pub fn trust_report(state: &EvalState) -> TrustTable {
    update_trust(&TrustTable::new(), state.instances.values()).expect("instance keys are unique")
}
