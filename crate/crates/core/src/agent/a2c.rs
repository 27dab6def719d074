//! Synchronous advantage actor-critic learner.
//!
//! For a trajectory with rewards `r_t` the returns are
//! `R_t = sum_k gamma^k r_{t+k}` (plus `gamma^n v(s_n)` when truncated) and
//! the advantages `A_t = R_t - v(s_t)`. The learner minimises
//!
//! ```text
//! actor:  -sum_t A_t log pi(a_t | s_t) - entropy_w * sum_t H(pi(. | s_t))
//! critic:  sum_t (R_t - v(s_t))^2
//! ```
//!
//! with advantages held constant in the actor loss. The policy terms use the
//! unshaped masked logits even when actions were drawn from a shaped
//! distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::KvFile;
use crate::env::ActionMask;
use crate::error::{Error, Result};
use crate::model::NodeId;

use super::net::{Adam, DenseNet};
use super::policy::{masked_log_softmax, masked_softmax};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    /// Actor learning rate.
    pub alpha: f64,
    /// Critic learning rate.
    pub alpha_critic: f64,
    /// Heuristic influence; 0 disables shaping.
    pub beta: f64,
    pub gamma: f64,
    pub entropy_w: f64,
    /// Shaping margin.
    pub eta: f64,
    pub hidden: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { alpha: 1e-4, alpha_critic: 2.5e-3, beta: 0.0, gamma: 0.99, entropy_w: 0.01, eta: 1.0, hidden: 128 }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha_critic > 0.0
            && self.beta >= 0.0
            && self.beta.is_finite()
            && self.gamma > 0.0
            && self.gamma <= 1.0
            && self.entropy_w >= 0.0
            && self.eta > 0.0
            && self.eta.is_finite()
            && self.hidden > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid agent hyperparameters {self:?}")))
        }
    }

    pub fn read(kv: &mut KvFile) -> Result<Self> {
        let d = Self::default();
        let h = Hyper {
            alpha: kv.take_or("alpha", d.alpha)?,
            alpha_critic: kv.take_or("alpha_critic", d.alpha_critic)?,
            beta: kv.take_or("beta", d.beta)?,
            gamma: kv.take_or("gamma", d.gamma)?,
            entropy_w: kv.take_or("entropy_w", d.entropy_w)?,
            eta: kv.take_or("eta", d.eta)?,
            hidden: kv.take_or("hidden", d.hidden)?,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn write(&self, out: &mut String) {
        out.push_str(&format!(
            "alpha = {}\nalpha_critic = {}\nbeta = {}\ngamma = {}\nentropy_w = {}\neta = {}\nhidden = {}\n",
            self.alpha, self.alpha_critic, self.beta, self.gamma, self.entropy_w, self.eta, self.hidden
        ));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub hyper: Hyper,
}

impl AgentParams {
    /// Two hidden ReLU layers of width `hyper.hidden` for both networks.
    pub fn init(inputs: usize, actions: usize, hyper: Hyper, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = [hyper.hidden, hyper.hidden];
        let actor = DenseNet::mlp(inputs, &hidden, actions, &mut rng);
        let critic = DenseNet::mlp(inputs, &hidden, 1, &mut rng);
        AgentParams { actor, critic, hyper }
    }

    pub fn value(&self, features: &[f64]) -> f64 {
        self.critic.forward(features)[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub features: Vec<f64>,
    pub mask: ActionMask,
    pub action: NodeId,
    pub reward: f64,
    /// Unshaped actor logits when the action was chosen.
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// True when the episode ended; otherwise `bootstrap` holds the next features.
    pub terminal: bool,
    pub bootstrap: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Mean policy entropy over the steps.
    pub entropy: f64,
    pub actor_grad_norm: f64,
    pub critic_grad_norm: f64,
    pub steps: usize,
}

/// Discounted returns, bootstrapped from the critic when truncated.
pub fn discounted_returns(params: &AgentParams, traj: &Trajectory) -> Result<Vec<f64>> {
    let mut tail = if traj.terminal {
        0.0
    } else {
        let feats = traj
            .bootstrap
            .as_ref()
            .ok_or_else(|| Error::Contract("truncated trajectory without bootstrap features".into()))?;
        params.value(feats)
    };
    let mut out = vec![0.0; traj.steps.len()];
    for (t, step) in traj.steps.iter().enumerate().rev() {
        tail = step.reward + params.hyper.gamma * tail;
        out[t] = tail;
    }
    Ok(out)
}

/// Losses and their gradients over a batch of trajectories.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub diagnostics: Diagnostics,
}

fn entropy_of(probs: &[f64], logp: &[f64]) -> f64 {
    probs.iter().zip(logp).filter(|(&p, _)| p > 0.0).map(|(p, l)| -p * l).sum()
}

pub fn compute_gradients(params: &AgentParams, trajs: &[Trajectory]) -> Result<Gradients> {
    let mut actor_g = params.actor.zeros_like();
    let mut critic_g = params.critic.zeros_like();
    let mut diag = Diagnostics::default();
    let ew = params.hyper.entropy_w;

    for traj in trajs {
        if traj.steps.is_empty() {
            return Err(Error::Contract("empty trajectory".into()));
        }
        let returns = discounted_returns(params, traj)?;
        for (step, ret) in traj.steps.iter().zip(returns) {
            if !step.reward.is_finite() {
                return Err(Error::Numerical("non-finite reward".into()));
            }
            if !step.mask.is_eligible(step.action) {
                return Err(Error::Contract(format!("recorded action {} is masked", step.action)));
            }

            let (v, c_tape) = params.critic.forward_tape(&step.features);
            let v = v[0];
            let err = ret - v;
            diag.critic_loss += err * err;
            params.critic.backward(&c_tape, &[-2.0 * err], &mut critic_g);

            let adv = err;
            let (logits, a_tape) = params.actor.forward_tape(&step.features);
            let probs = masked_softmax(&logits, &step.mask.0);
            let logp = masked_log_softmax(&logits, &step.mask.0);
            let log_pa = logp[step.action];
            let entropy = entropy_of(&probs, &logp);
            diag.actor_loss += -adv * log_pa - ew * entropy;
            diag.entropy += entropy;

            let mut grad_logits = vec![0.0; logits.len()];
            for j in 0..logits.len() {
                if !step.mask.0[j] {
                    continue;
                }
                let p = probs[j];
                let indicator = if j == step.action { 1.0 } else { 0.0 };
                grad_logits[j] = -adv * (indicator - p) + ew * p * (logp[j] + entropy);
            }
            params.actor.backward(&a_tape, &grad_logits, &mut actor_g);
            diag.steps += 1;
        }
    }
    if diag.steps > 0 {
        diag.entropy /= diag.steps as f64;
    }
    diag.actor_grad_norm = actor_g.norm();
    diag.critic_grad_norm = critic_g.norm();
    let finite = diag.actor_loss.is_finite()
        && diag.critic_loss.is_finite()
        && diag.actor_grad_norm.is_finite()
        && diag.critic_grad_norm.is_finite();
    if !finite {
        return Err(Error::Numerical("non-finite loss or gradient".into()));
    }
    Ok(Gradients { actor: actor_g, critic: critic_g, diagnostics: diag })
}

/// Actor and critic losses exactly as differentiated by [`compute_gradients`].
pub fn losses(params: &AgentParams, trajs: &[Trajectory]) -> Result<(f64, f64)> {
    let mut actor = 0.0;
    let mut critic = 0.0;
    for traj in trajs {
        let returns = discounted_returns(params, traj)?;
        for (step, ret) in traj.steps.iter().zip(returns) {
            let v = params.value(&step.features);
            let adv = ret - v;
            critic += adv * adv;
            let logits = params.actor.forward(&step.features);
            let probs = masked_softmax(&logits, &step.mask.0);
            let logp = masked_log_softmax(&logits, &step.mask.0);
            actor += -adv * logp[step.action] - params.hyper.entropy_w * entropy_of(&probs, &logp);
        }
    }
    Ok((actor, critic))
}

/// Learner state: parameters plus optimiser moments.
#[derive(Debug, Clone)]
pub struct Agent {
    pub params: AgentParams,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl Agent {
    pub fn new(params: AgentParams) -> Self {
        let actor_opt = Adam::new(params.hyper.alpha, params.actor.param_count());
        let critic_opt = Adam::new(params.hyper.alpha_critic, params.critic.param_count());
        Agent { params, actor_opt, critic_opt }
    }

    pub fn update(&mut self, traj: &Trajectory) -> Result<Diagnostics> {
        self.update_batch(std::slice::from_ref(traj))
    }

    /// One optimiser step on the summed losses; parameters are untouched on error.
    pub fn update_batch(&mut self, trajs: &[Trajectory]) -> Result<Diagnostics> {
        let grads = compute_gradients(&self.params, trajs)?;
        let mut actor = self.params.actor.clone();
        let mut critic = self.params.critic.clone();
        let mut actor_opt = self.actor_opt.clone();
        let mut critic_opt = self.critic_opt.clone();
        actor_opt.apply(&mut actor, &grads.actor);
        critic_opt.apply(&mut critic, &grads.critic);
        if !actor.is_finite() || !critic.is_finite() {
            return Err(Error::Numerical("update produced non-finite parameters".into()));
        }
        self.params.actor = actor;
        self.params.critic = critic;
        self.actor_opt = actor_opt;
        self.critic_opt = critic_opt;
        Ok(grads.diagnostics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_traj(rewards: &[f64]) -> Trajectory {
        Trajectory {
            steps: rewards
                .iter()
                .enumerate()
                .map(|(i, &r)| TrajectoryStep {
                    features: vec![0.1 * i as f64, 0.5, -0.2],
                    mask: ActionMask(vec![true, true, i % 2 == 0]),
                    action: 1,
                    reward: r,
                    logits: vec![],
                })
                .collect(),
            terminal: true,
            bootstrap: None,
        }
    }

    #[test]
    fn returns_are_discounted() {
        let hyper = Hyper { gamma: 0.5, hidden: 4, ..Default::default() };
        let params = AgentParams::init(3, 3, hyper, 0);
        let r = discounted_returns(&params, &toy_traj(&[1.0, 2.0, 4.0])).unwrap();
        assert_eq!(r, vec![1.0 + 0.5 * 2.0 + 0.25 * 4.0, 2.0 + 0.5 * 4.0, 4.0]);
        let mut open = toy_traj(&[1.0]);
        open.terminal = false;
        assert!(discounted_returns(&params, &open).is_err());
        open.bootstrap = Some(vec![0.0, 0.0, 0.0]);
        let v = params.value(&[0.0, 0.0, 0.0]);
        assert!((discounted_returns(&params, &open).unwrap()[0] - (1.0 + 0.5 * v)).abs() < 1e-12);
    }

    #[test]
    fn zero_advantage_leaves_actor_unchanged() {
        let hyper = Hyper { entropy_w: 0.0, hidden: 8, ..Default::default() };
        let mut params = AgentParams::init(3, 3, hyper, 1);
        // A zero critic and zero rewards make every advantage 0.
        params.critic = params.critic.zeros_like();
        let mut agent = Agent::new(params.clone());
        agent.update(&toy_traj(&[0.0, 0.0])).unwrap();
        assert_eq!(agent.params.actor, params.actor);
    }

    #[test]
    fn masked_recorded_action_is_a_contract_error() {
        let params = AgentParams::init(3, 3, Hyper { hidden: 4, ..Default::default() }, 2);
        let mut t = toy_traj(&[1.0, 1.0]);
        t.steps[1].action = 2;
        assert!(matches!(compute_gradients(&params, &[t]), Err(Error::Contract(_))));
    }

    #[test]
    fn non_finite_reward_keeps_parameters() {
        let params = AgentParams::init(3, 3, Hyper { hidden: 4, ..Default::default() }, 3);
        let mut agent = Agent::new(params.clone());
        let t = toy_traj(&[f64::NAN]);
        assert!(matches!(agent.update(&t), Err(Error::Numerical(_))));
        assert_eq!(agent.params, params);
    }

    #[test]
    fn defaults_match_published_learning_rates() {
        let h = Hyper::default();
        assert_eq!(h.alpha, 1e-4);
        assert_eq!(h.alpha_critic, 2.5e-3);
    }
}
