//! JSON evaluation report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{Bindings, EvalState, NormInstance};
use crate::lang::{FactRef, NormKind, NormState};
use crate::ledger::{Position, PrincipalId};
use crate::trust::{trust_report, update_trust, TrustTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub compact: String,
    pub chain_tip: String,
    pub chain_height: u64,
    pub instances: Vec<InstanceRecord>,
    pub facts: Vec<FactRecord>,
    pub trust: Vec<TrustRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub norm_id: String,
    pub kind: String,
    pub bindings: Bindings,
    pub subject: PrincipalId,
    pub object: PrincipalId,
    pub context: PrincipalId,
    pub state: String,
    pub created_at: Position,
    pub detached_at: Option<Position>,
    pub closed_at: Option<Position>,
    pub violating_event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_id: Option<String>,
    pub bindings: Bindings,
    pub witness: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRecord {
    pub principal: PrincipalId,
    pub norm_id: String,
    pub satisfied: u64,
    pub violated: u64,
    /// Rounded to six decimal places.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub converged: bool,
    pub rounds_used: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("unknown norm kind `{0}`")]
    UnknownKind(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error(transparent)]
    Trust(#[from] crate::trust::TrustError),
}

impl InstanceRecord {
    pub fn from_instance(i: &NormInstance) -> Self {
        InstanceRecord {
            norm_id: i.norm_id.clone(),
            kind: i.kind.keyword().to_string(),
            bindings: i.key_bindings.clone(),
            subject: i.subject.clone(),
            object: i.object.clone(),
            context: i.context.clone(),
            state: i.state.name().to_string(),
            created_at: i.created_at,
            detached_at: i.detached_at,
            closed_at: i.closed_at,
            violating_event: i.violating_event.clone(),
        }
    }

    pub fn to_instance(&self) -> Result<NormInstance, ReportError> {
        let kind = match self.kind.as_str() {
            "commitment" => NormKind::Commitment,
            "prohibition" => NormKind::Prohibition,
            other => return Err(ReportError::UnknownKind(other.into())),
        };
        let state = NormState::from_name(&self.state).ok_or_else(|| ReportError::UnknownState(self.state.clone()))?;
        Ok(NormInstance {
            norm_id: self.norm_id.clone(),
            kind,
            key_bindings: self.bindings.clone(),
            subject: self.subject.clone(),
            object: self.object.clone(),
            context: self.context.clone(),
            state,
            created_at: self.created_at,
            detached_at: self.detached_at,
            closed_at: self.closed_at,
            violating_event: self.violating_event.clone(),
        })
    }
}

pub fn trust_records(table: &TrustTable) -> Vec<TrustRecord> {
    table
        .rows()
        .map(|(p, n, s)| TrustRecord {
            principal: p.clone(),
            norm_id: n.clone(),
            satisfied: s.satisfied,
            violated: s.violated,
            score: s.score_6dp(),
        })
        .collect()
}

/// Recomputes the trust section from a report's instances.
pub fn trust_from_records(records: &[InstanceRecord]) -> Result<Vec<TrustRecord>, ReportError> {
    let instances = records.iter().map(InstanceRecord::to_instance).collect::<Result<Vec<_>, _>>()?;
    let table = update_trust(&TrustTable::new(), &instances)?;
    Ok(trust_records(&table))
}

impl Report {
    pub fn build(compact: &str, state: &EvalState) -> Self {
        Report {
            compact: compact.to_string(),
            chain_tip: state.tip.to_hex(),
            chain_height: state.height.unwrap_or(0),
            instances: state.instances.values().map(InstanceRecord::from_instance).collect(),
            facts: state
                .facts
                .iter()
                .map(|f| FactRecord {
                    name: f.name().to_string(),
                    norm_id: match &f.fact {
                        FactRef::State(_, n) => Some(n.clone()),
                        FactRef::Institutional(_) => None,
                    },
                    bindings: f.bindings.clone(),
                    witness: f.witness,
                    event: f.source_event.clone(),
                })
                .collect(),
            trust: trust_records(&trust_report(state)),
            network: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
