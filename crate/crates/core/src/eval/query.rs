use super::{EvalState, NormInstance};
use crate::lang::NormState;

/// Conjunctive instance filter; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceFilter {
    pub norm_id: Option<String>,
    pub state: Option<NormState>,
    /// Subject, object or context of the instance.
    pub principal: Option<String>,
}

impl InstanceFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn norm(mut self, id: impl Into<String>) -> Self {
        self.norm_id = Some(id.into());
        self
    }

    pub fn state(mut self, s: NormState) -> Self {
        self.state = Some(s);
        self
    }

    pub fn principal(mut self, p: impl Into<String>) -> Self {
        self.principal = Some(p.into());
        self
    }

    fn accepts(&self, i: &NormInstance) -> bool {
        self.norm_id.as_ref().is_none_or(|n| *n == i.norm_id)
            && self.state.is_none_or(|s| s == i.state)
            && self.principal.as_ref().is_none_or(|p| i.involves(p))
    }
}

/// Matching instances ordered by norm id, then key bindings.
pub fn query_instances<'a>(state: &'a EvalState, filter: &InstanceFilter) -> Vec<&'a NormInstance> {
    state.instances.values().filter(|i| filter.accepts(i)).collect()
}
