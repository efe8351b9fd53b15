use crate::config::{ConfigError, SessionConfig};
use crate::session::{JammerUpdate, Session, SessionError};

use super::{Direction, JamMeasurement};

/// Knobs for the dwell-time / jamming-power search.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Link under test. The jammer, diversion and traffic fields are
    /// overridden by the search.
    pub session: SessionConfig,
    pub min_power_dbm: f64,
    pub max_power_dbm: f64,
    /// Jammed airtime on the link channel per power step.
    pub exposure_s: f64,
    /// Loss fraction at which the link counts as broken.
    pub loss_threshold: f64,
    /// The sender drops a frame after this many transmissions; a frame the
    /// receiver did not accept by then is lost.
    pub max_attempts: u32,
    /// Time before the jammer starts, long enough for the handshake.
    pub settle_s: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let mut session = SessionConfig::default();
        session.phy.fast = true;
        session.phy.jammer.enabled = true;
        SweepSettings {
            session,
            min_power_dbm: -30.0,
            max_power_dbm: 10.0,
            exposure_s: 50.0,
            loss_threshold: 0.5,
            max_attempts: 3,
            settle_s: 0.1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("power step must be positive, got {0}")]
    BadStep(f64),
    #[error("dwell time must be positive, got {0}")]
    BadDwell(f64),
    #[error("no dwell times given")]
    NoDwellTimes,
    #[error("{direction} search at dwell {dwell_s} s: no power in [{min_dbm}, {max_dbm}] dBm breaks the link")]
    NoConvergence {
        dwell_s: f64,
        direction: Direction,
        min_dbm: f64,
        max_dbm: f64,
    },
    #[error("link never came up: {0}")]
    Session(#[from] SessionError),
}

/// Loss measured over one power step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub power_dbm: f64,
    pub frames: usize,
    pub lost: usize,
}

impl StepResult {
    pub fn loss(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.lost as f64 / self.frames as f64
        }
    }
}

/// A link held under a two-channel sweep jammer whose power can be
/// stepped without restarting the sweep.
struct JamRig {
    session: Session,
    address: u8,
    link_channel: usize,
    dwell_us: u64,
    step_us: u64,
    clock: u64,
    cursor: usize,
    max_attempts: u32,
}

impl JamRig {
    fn new(settings: &SweepSettings, dwell_s: f64, power_dbm: f64) -> Result<Self, ExperimentError> {
        let mut cfg = settings.session.clone();
        let c0 = cfg.initial_channel;
        let c1 = (c0 + 1) % cfg.phy.plan.channel_count;
        cfg.diversion = false;
        cfg.voice_interval_us = 0;
        cfg.dtmf_audio = false;
        cfg.trace = false;
        cfg.auto_traffic = Some('x');
        cfg.retry_limit = settings.max_attempts;
        cfg.phy.jammer.dwell_s = dwell_s;
        cfg.phy.jammer.power_dbm = power_dbm;
        cfg.phy.jammer.order = Some(vec![c0, c1]);
        cfg.phy.jammer.start_s = settings.settle_s;
        let visits = (settings.exposure_s / dwell_s - 1e-9).ceil().max(1.0) as u64;
        cfg.validate().map_err(SessionError::from)?;
        let address = cfg.node_a;
        let session = Session::new(cfg)?;
        let dwell_us = (dwell_s * 1e6).round() as u64;
        Ok(JamRig {
            session,
            address,
            link_channel: c0,
            dwell_us,
            step_us: 2 * visits * dwell_us,
            clock: (settings.settle_s * 1e6).round() as u64,
            cursor: 0,
            max_attempts: settings.max_attempts,
        })
    }

    fn step(&mut self, power_dbm: f64) -> Result<StepResult, ExperimentError> {
        self.session.run_until(self.clock);
        // every step replays the same sweep so only the power changes
        self.session.set_jammer(&JammerUpdate {
            power_dbm: Some(power_dbm),
            restart: true,
            ..Default::default()
        })?;
        let start = self.clock;
        let end = start + self.step_us;
        self.session.run_until(end);
        if let Some(e) = self.session.failure() {
            return Err(SessionError::Link(e.clone()).into());
        }
        self.clock = end;
        let jam_start = self.session.medium().jammer.as_ref().map_or(0, |j| (j.start_time * 1e6).round() as u64);
        let records = self.session.data_records(self.address)?;
        let (mut frames, mut lost) = (0, 0);
        for r in &records[self.cursor..] {
            if r.first_tx_us >= end {
                break;
            }
            if r.first_tx_us < start || r.first_tx_us < jam_start {
                continue;
            }
            let visit = (r.first_tx_us - jam_start) / self.dwell_us;
            if !visit.is_multiple_of(2) || r.channel != self.link_channel {
                continue;
            }
            frames += 1;
            if r.delivered_after.is_none_or(|a| a > self.max_attempts) {
                lost += 1;
            }
        }
        self.cursor = records.partition_point(|r| r.first_tx_us < end);
        Ok(StepResult {
            power_dbm,
            frames,
            lost,
        })
    }
}

fn powers(settings: &SweepSettings, step: f64, direction: Direction) -> Vec<f64> {
    let n = ((settings.max_power_dbm - settings.min_power_dbm) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| settings.min_power_dbm + i as f64 * step).collect();
    if direction == Direction::Decreasing {
        v.reverse();
    }
    v
}

/// Steps the jammer power in one direction at a fixed dwell time and
/// returns every step run.
///
/// The increasing search stops at the first power that breaks the link.
/// The decreasing search starts at the top of the range and stops at the
/// first power at which the link survives.
pub fn search(
    settings: &SweepSettings,
    dwell_s: f64,
    power_step: f64,
    direction: Direction,
) -> Result<Vec<StepResult>, ExperimentError> {
    if !(power_step > 0.0) {
        return Err(ExperimentError::BadStep(power_step));
    }
    if !(dwell_s > 0.0) {
        return Err(ExperimentError::BadDwell(dwell_s));
    }
    let plan = powers(settings, power_step, direction);
    let mut rig = JamRig::new(settings, dwell_s, plan[0])?;
    let jammer_active = settings.session.phy.jammer.enabled;
    let mut steps = Vec::new();
    for p in plan {
        let r = rig.step(p)?;
        let broken = r.loss() >= settings.loss_threshold;
        steps.push(r);
        let done = match direction {
            Direction::Increasing => broken,
            Direction::Decreasing => !broken,
        };
        // power cannot matter with the jammer off, so one probe settles it
        if done || !jammer_active {
            break;
        }
    }
    Ok(steps)
}

/// Required jamming power at one dwell time in one direction.
pub fn measure(
    settings: &SweepSettings,
    dwell_s: f64,
    power_step: f64,
    direction: Direction,
) -> Result<JamMeasurement, ExperimentError> {
    let no_conv = || ExperimentError::NoConvergence {
        dwell_s,
        direction,
        min_dbm: settings.min_power_dbm,
        max_dbm: settings.max_power_dbm,
    };
    let steps = search(settings, dwell_s, power_step, direction)?;
    let broken = |r: &StepResult| r.loss() >= settings.loss_threshold;
    let power = match direction {
        Direction::Increasing => steps.last().filter(|r| broken(r)).map(|r| r.power_dbm),
        Direction::Decreasing => steps.iter().take_while(|r| broken(r)).last().map(|r| r.power_dbm),
    };
    power
        .map(|jam_power| JamMeasurement {
            dwell_time: dwell_s,
            jam_power,
            direction,
        })
        .ok_or_else(no_conv)
}

/// Both directions at each dwell time, run in parallel. One entry per
/// dwell time, in input order.
pub fn sweep(
    settings: &SweepSettings,
    dwell_times: &[f64],
    power_step: f64,
) -> Vec<[Result<JamMeasurement, ExperimentError>; 2]> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = dwell_times
            .iter()
            .map(|&d| {
                let inc = scope.spawn(move || measure(settings, d, power_step, Direction::Increasing));
                let dec = scope.spawn(move || measure(settings, d, power_step, Direction::Decreasing));
                (inc, dec)
            })
            .collect();
        handles
            .into_iter()
            .map(|(i, d)| [i.join().expect("search thread"), d.join().expect("search thread")])
            .collect()
    })
}

/// Required jamming power for every dwell time in both directions,
/// failing on the first point that does not converge.
pub fn run_sweep_experiment(
    settings: &SweepSettings,
    dwell_times: &[f64],
    power_step: f64,
) -> Result<Vec<JamMeasurement>, ExperimentError> {
    if dwell_times.is_empty() {
        return Err(ExperimentError::NoDwellTimes);
    }
    if !(power_step > 0.0) {
        return Err(ExperimentError::BadStep(power_step));
    }
    if let Some(&d) = dwell_times.iter().find(|d| !(**d > 0.0)) {
        return Err(ExperimentError::BadDwell(d));
    }
    let mut out = Vec::new();
    for pair in sweep(settings, dwell_times, power_step) {
        for m in pair {
            out.push(m?);
        }
    }
    Ok(out)
}

impl From<ConfigError> for ExperimentError {
    fn from(e: ConfigError) -> Self {
        ExperimentError::Session(e.into())
    }
}
