use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;

use super::config::ExperimentConfig;
use super::metrics::{MetricsWriter, MetricsFormat, RunMetrics, export_metrics};
use super::rng::{stream, Stream};
use crate::envs::{observe_all, scenario_init_with, world_step, AgentAction, WorldState};
use crate::marl::{Batch, Checkpoint, LearnerSet, NoiseSchedule, ObservationWindow, ReplayBuffer, Transition};
use crate::{Error, Result};

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const TIMING_FILE: &str = "timing.txt";
pub const FINAL_CHECKPOINT: &str = "checkpoint.bin";

pub fn periodic_checkpoint_name(episode: usize) -> String {
    format!("checkpoint_ep{episode:06}.bin")
}

/// Everything a finished training run leaves in memory.
#[derive(Debug)]
pub struct TrainOutcome {
    pub metrics: RunMetrics,
    pub learners: LearnerSet,
    pub buffer_len: usize,
    pub updates: usize,
}

/// A fresh learner set for `cfg`, initialized from the run's init stream.
pub fn build_learners(cfg: &ExperimentConfig) -> Result<(LearnerSet, WorldState)> {
    cfg.validate()?;
    let probe = scenario_init_with(cfg.scenario, 0, cfg.env_options())?;
    let set = LearnerSet::new(&mut stream(cfg.seed, Stream::Init), cfg.learner_config(), &probe.obs_dims(), &probe.action_specs())?;
    Ok((set, probe))
}

fn windows_of(ws: &[ObservationWindow]) -> Vec<Vec<Vec<f64>>> {
    ws.iter().map(ObservationWindow::materialize).collect()
}

/// Trains a fresh learner set for `cfg.train_episodes` episodes.
pub fn run_training(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    run_training_with(cfg, |_, _| {})
}

/// As [`run_training`], calling `progress(episode, metrics)` after each
/// episode.
pub fn run_training_with(cfg: &ExperimentConfig, mut progress: impl FnMut(usize, &RunMetrics)) -> Result<TrainOutcome> {
    let started = Instant::now();
    let (mut learners, probe) = build_learners(cfg)?;
    let out = cfg.out_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let write = |name: &str, text: &str| -> Result<PathBuf> {
        let p = out.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    write(CONFIG_FILE, &cfg.to_text())?;

    let lc = learners.cfg.clone();
    let n = learners.num_agents();
    let mut env_rng = stream(cfg.seed, Stream::Env);
    let mut noise_rng = stream(cfg.seed, Stream::Noise);
    let mut sample_rng = stream(cfg.seed, Stream::Sampling);
    let mut buffer = ReplayBuffer::new(learners.transition_shape(), lc.buffer_capacity);
    let schedule = NoiseSchedule { start: lc.noise_start, end: lc.noise_end, steps: (cfg.train_episodes * cfg.episode_len) as u64 };
    let mut metrics = RunMetrics::new(cfg.scenario, lc.algorithm, lc.depth, cfg.seed, n, cfg.to_text());
    let mut writer = MetricsWriter::create(&out.join(METRICS_CSV), &metrics.header())?;
    let hash = cfg.model_hash();
    let specs = probe.action_specs();
    let mut steps: u64 = 0;
    let mut updates = 0;

    for ep in 0..cfg.train_episodes {
        let mut state = scenario_init_with(cfg.scenario, env_rng.next_u64(), cfg.env_options())?;
        let mut obs = observe_all(&state);
        let mut windows: Vec<ObservationWindow> = learners.obs_dims.iter().map(|&d| ObservationWindow::new(lc.window, d)).collect();
        for (w, o) in windows.iter_mut().zip(&obs) {
            w.push(o)?;
        }
        let mut returns = vec![0.0; n];
        loop {
            let h = windows_of(&windows);
            let sigma = schedule.sigma(steps);
            let actions = (0..n)
                .map(|i| learners.select_action(i, &obs[i], &h[i], true, sigma, &mut noise_rng))
                .collect::<Result<Vec<_>>>()?;
            let joint = actions.iter().zip(&specs).map(|(a, &s)| AgentAction::from_flat(s, a)).collect::<Result<Vec<_>>>()?;
            let res = world_step(&state, &joint)?;
            for (w, o) in windows.iter_mut().zip(&res.observations) {
                w.push(o)?;
            }
            for (acc, r) in returns.iter_mut().zip(&res.rewards) {
                *acc += r;
            }
            buffer.store(Transition {
                obs,
                window: h,
                actions,
                rewards: res.rewards,
                next_obs: res.observations.clone(),
                next_window: windows_of(&windows),
            })?;
            steps += 1;
            if steps.is_multiple_of(lc.learn_every as u64) && buffer.len() >= lc.batch_size {
                let batch = Batch::from_transitions(&buffer.sample(lc.batch_size, &mut sample_rng)?)?;
                learners.update(&batch)?;
                updates += 1;
            }
            obs = res.observations;
            state = res.state;
            if res.done {
                break;
            }
        }
        metrics.push(returns);
        writer.line(&metrics.csv_row(ep))?;
        progress(ep + 1, &metrics);
        if (ep + 1) % cfg.checkpoint_every == 0 {
            Checkpoint::capture(&learners, hash).save(&out.join(periodic_checkpoint_name(ep + 1)))?;
        }
    }

    Checkpoint::capture(&learners, hash).save(&out.join(FINAL_CHECKPOINT))?;
    export_metrics(&metrics, &out.join(METRICS_JSON), MetricsFormat::Json)?;
    metrics.wall_clock_secs = started.elapsed().as_secs_f64();
    write(TIMING_FILE, &format!("wall_clock_secs = {}\n", metrics.wall_clock_secs))?;
    Ok(TrainOutcome { metrics, learners, buffer_len: buffer.len(), updates })
}

/// Trains every config, in parallel when the `parallel` feature is on.
/// Configs must point at distinct output directories.
pub fn run_many(cfgs: &[ExperimentConfig]) -> Vec<Result<TrainOutcome>> {
    crate::par::map_range(cfgs.len(), |i| run_training(&cfgs[i]))
}

/// Sequential counterpart of [`run_many`].
pub fn run_many_seq(cfgs: &[ExperimentConfig]) -> Vec<Result<TrainOutcome>> {
    crate::par::map_range_seq(cfgs.len(), |i| run_training(&cfgs[i]))
}

/// Loads the config saved in a run directory.
pub fn load_run_config(dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&dir.join(CONFIG_FILE))
}
