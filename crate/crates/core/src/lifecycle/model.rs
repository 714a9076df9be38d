//! The transaction lifecycle state machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{BlockHash, TxHash};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleState {
    Created,
    Pending,
    Executed,
    Dropped,
    Reversed,
    Finalized,
}

use LifecycleState::*;

/// Every permitted transition.
pub const EDGES: [(LifecycleState, LifecycleState); 7] = [
    (Created, Pending),
    (Pending, Executed),
    (Pending, Dropped),
    (Executed, Reversed),
    (Executed, Finalized),
    (Reversed, Executed),
    (Reversed, Dropped),
];

impl LifecycleState {
    pub const ALL: [LifecycleState; 6] = [Created, Pending, Executed, Dropped, Reversed, Finalized];

    pub fn is_terminal(self) -> bool {
        matches!(self, Dropped | Finalized)
    }

    pub fn can_transition_to(self, next: LifecycleState) -> bool {
        EDGES.contains(&(self, next))
    }

    pub fn successors(self) -> impl Iterator<Item = LifecycleState> {
        EDGES.iter().filter(move |(a, _)| *a == self).map(|(_, b)| *b)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Created => "created",
            Pending => "pending",
            Executed => "executed",
            Dropped => "dropped",
            Reversed => "reversed",
            Finalized => "finalized",
        }
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LifecycleState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LifecycleState::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown lifecycle state `{s}`"))
    }
}

/// A lifecycle state together with how many times it has been entered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stage {
    pub state: LifecycleState,
    pub visit: u32,
}

impl Stage {
    pub const fn new(state: LifecycleState, visit: u32) -> Self {
        Stage { state, visit }
    }

    pub const fn first(state: LifecycleState) -> Self {
        Stage { state, visit: 1 }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.state, self.visit)
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (state, visit) = s.split_once('#').unwrap_or((s, "1"));
        let visit = visit.parse().map_err(|_| format!("bad visit index in `{s}`"))?;
        Ok(Stage { state: state.parse()?, visit })
    }
}

/// The states a traversal drives a transaction through, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LifecycleState>", into = "Vec<LifecycleState>")]
pub struct TraversalPlan(Vec<LifecycleState>);

impl TraversalPlan {
    /// Created → Pending → Executed → Reversed → Executed → Finalized.
    pub fn bug_exposing() -> Self {
        TraversalPlan(vec![Created, Pending, Executed, Reversed, Executed, Finalized])
    }

    /// Created → Pending → Executed → Finalized.
    pub fn normal() -> Self {
        TraversalPlan(vec![Created, Pending, Executed, Finalized])
    }

    pub fn new(states: Vec<LifecycleState>) -> Result<Self, String> {
        match states.first() {
            Some(Created) => {}
            _ => return Err("a plan starts at created".into()),
        }
        for pair in states.windows(2) {
            if !pair[0].can_transition_to(pair[1]) {
                return Err(format!("{} -> {} is not a lifecycle transition", pair[0], pair[1]));
            }
        }
        Ok(TraversalPlan(states))
    }

    pub fn states(&self) -> &[LifecycleState] {
        &self.0
    }

    /// The stage label each plan position lands on.
    pub fn stages(&self) -> Vec<Stage> {
        let mut counts = [0u32; 6];
        self.0
            .iter()
            .map(|s| {
                let c = &mut counts[*s as usize];
                *c += 1;
                Stage::new(*s, *c)
            })
            .collect()
    }
}

impl Default for TraversalPlan {
    fn default() -> Self {
        Self::bug_exposing()
    }
}

impl TryFrom<Vec<LifecycleState>> for TraversalPlan {
    type Error = String;

    fn try_from(v: Vec<LifecycleState>) -> Result<Self, Self::Error> {
        TraversalPlan::new(v)
    }
}

impl From<TraversalPlan> for Vec<LifecycleState> {
    fn from(p: TraversalPlan) -> Self {
        p.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: LifecycleState,
    pub visit_index: u32,
    pub logical_timestamp: u64,
    /// Position in the controller-wide transition order.
    pub sequence: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_context: Option<BlockHash>,
}

impl TraceStep {
    pub fn stage(&self) -> Stage {
        Stage::new(self.state, self.visit_index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleTrace {
    pub tx_hash: TxHash,
    pub steps: Vec<TraceStep>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl LifecycleTrace {
    pub fn current(&self) -> LifecycleState {
        self.steps.last().map(|s| s.state).unwrap_or(Created)
    }

    pub fn visits(&self, state: LifecycleState) -> u32 {
        self.steps.iter().filter(|s| s.state == state).count() as u32
    }

    pub fn states(&self) -> Vec<LifecycleState> {
        self.steps.iter().map(|s| s.state).collect()
    }

    /// Checks the structural invariants of a trace.
    pub fn validate(&self) -> Result<(), String> {
        if self.steps.first().map(|s| s.state) != Some(Created) {
            return Err("trace must start at created".into());
        }
        let mut counts = [0u32; 6];
        for (i, step) in self.steps.iter().enumerate() {
            counts[step.state as usize] += 1;
            if step.visit_index != counts[step.state as usize] {
                return Err(format!("step {i}: visit index {} out of sequence", step.visit_index));
            }
            if i > 0 {
                let prev = self.steps[i - 1].state;
                if !prev.can_transition_to(step.state) {
                    return Err(format!("step {i}: {prev} -> {} is not an edge", step.state));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub tx_hash: TxHash,
    pub from: LifecycleState,
    pub to: LifecycleState,
    pub visit_index: u32,
    pub logical_timestamp: u64,
    pub sequence: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_context: Option<BlockHash>,
}

impl TransitionRecord {
    pub fn stage(&self) -> Stage {
        Stage::new(self.to, self.visit_index)
    }
}
