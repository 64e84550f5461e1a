//! MADDPG, RMADDPG and HRTMADDPG learners: replay, exploration, centralized
//! critics over encoded observation histories, and target networks.

mod actor;
mod checkpoint;
mod config;
mod critic;
mod learner;
mod noise;
mod replay;
mod window;

pub use actor::Actor;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{Algorithm, LearnerConfig};
pub use critic::{Critic, HistoryEncoder};
pub use learner::{critic_loss, AgentLearner, Batch, LearnerSet, UpdateStats};
pub use noise::{gaussian, gumbel, softmax, NoiseSchedule};
pub use replay::{ReplayBuffer, Transition, TransitionShape};
pub use window::ObservationWindow;
