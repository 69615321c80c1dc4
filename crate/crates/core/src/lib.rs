//! Compacts: declarative, violable contracts evaluated over a simulated
//! permissioned blockchain.

pub mod eval;
pub mod governance;
pub mod lang;
pub mod ledger;
pub mod pipeline;
pub mod report;
pub mod trust;
pub mod validator;
