//! End-to-end run: gossip a scenario through the network, verify the
//! resulting chain, evaluate the compact over it and report.

use thiserror::Error;

use crate::eval::{evaluate, CompiledSpec, EvalError, EvalState};
use crate::lang::CompactSpec;
use crate::ledger::{
    run_network, verify_chain, BadBlock, Chain, ChainPolicy, LedgerError, NetworkConfig, NetworkResult, Submission,
};
use crate::report::{NetworkSummary, Report};
use crate::validator::{IntegrityRuleSet, RuleSetError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("integrity rules: {0}")]
    Rules(#[from] RuleSetError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("context principal `{0}` is not on the roster")]
    ContextNotRostered(String),
    #[error("active chain failed verification: {0}")]
    Verify(BadBlock),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub network: NetworkResult,
    pub chain: Chain,
    pub state: EvalState,
    pub report: Report,
}

/// The full verification policy for chains produced under `net`.
pub fn chain_policy(spec: &CompactSpec, net: &NetworkConfig) -> Result<ChainPolicy, PipelineError> {
    Ok(ChainPolicy::new(net.target, net.principals.clone()).with_integrity(IntegrityRuleSet::from_spec(spec)?))
}

pub fn run_scenario(
    spec: &CompactSpec,
    scenario: &[Submission],
    net: &NetworkConfig,
) -> Result<RunOutcome, PipelineError> {
    let compiled = CompiledSpec::new(spec)?;
    if !net.principals.contains(&spec.context) {
        return Err(PipelineError::ContextNotRostered(spec.context.clone()));
    }
    let policy = chain_policy(spec, net)?;
    let network = run_network(scenario, net, policy.integrity.as_ref())?;
    let chain = network.active_chain().clone();
    verify_chain(&chain, &policy).map_err(PipelineError::Verify)?;
    let state = evaluate(&chain, &compiled)?;
    let mut report = Report::build(&spec.name, &state);
    report.network = Some(NetworkSummary { converged: network.converged, rounds_used: network.rounds_used });
    Ok(RunOutcome { network, chain, state, report })
}
