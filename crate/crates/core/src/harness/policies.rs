//! Policies for the rule-based strategies and the strategy dispatcher.

use crate::agents::{AgentPolicy, Model, QubitPolicy};
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::harness::episode::Policy;
use crate::preinfo::PreInfo;
use crate::rng::{stream, StreamRng};
use crate::schedulers::{greedy_matrix, mst_matrix, mst_plan, random_matrix, ActionMatrix, PlanEdge, StrategyConfig, StrategyKind};

pub struct RandomPolicy {
    rng: StreamRng,
    threshold: f64,
}

impl RandomPolicy {
    pub fn new(seed: u64, threshold: f64) -> Self {
        Self { rng: stream(seed, "random-policy", 0), threshold }
    }
}

impl Policy for RandomPolicy {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix> {
        Ok(random_matrix(state, &mut self.rng, self.threshold))
    }
}

pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix> {
        Ok(greedy_matrix(state, &state.preinfo, state.config.t_mem_steps))
    }
}

pub struct MstPolicy {
    plan: Vec<PlanEdge>,
}

impl MstPolicy {
    pub fn new(preinfo: &PreInfo, t_mem_steps: f64) -> Self {
        Self { plan: mst_plan(preinfo, t_mem_steps) }
    }
}

impl Policy for MstPolicy {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix> {
        Ok(mst_matrix(&self.plan, state))
    }
}

/// Build the policy for `strategy`. Learned strategies need a model of the
/// matching variant.
pub fn build_policy<'a>(
    strategy: &StrategyConfig,
    preinfo: &PreInfo,
    t_mem_steps: f64,
    model: Option<&'a Model>,
    mixing_weight: f64,
    seed: u64,
) -> Result<Box<dyn Policy + 'a>> {
    let need = |what: &str| Error::Config(format!("strategy {} needs a {what} model", strategy.kind));
    Ok(match strategy.kind {
        StrategyKind::Random => Box::new(RandomPolicy::new(seed, strategy.action_threshold)),
        StrategyKind::Greedy => Box::new(GreedyPolicy),
        StrategyKind::StaticMst => Box::new(MstPolicy::new(preinfo, t_mem_steps)),
        StrategyKind::TransformerQuPairs => match model {
            Some(m @ Model::Transformer(_)) => Box::new(AgentPolicy::new(m, mixing_weight)?),
            _ => return Err(need("transformer")),
        },
        StrategyKind::Fc => match model {
            Some(m @ Model::Fc(_)) => Box::new(AgentPolicy::new(m, mixing_weight)?),
            _ => return Err(need("fully connected")),
        },
        StrategyKind::TransformerQubit => match model {
            Some(Model::Qubit(q)) => Box::new(QubitPolicy::new(q, mixing_weight)),
            _ => return Err(need("qubit-level transformer")),
        },
    })
}
