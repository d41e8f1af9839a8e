//! The simulation thread: owns the engine, paces ticks, drains controls at
//! tick boundaries and publishes the latest frame.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;
use swarmsim::{merge_partial, EngineError, ParamPatchF64, ScenarioF64, Simulation, SwarmParamsF64, ValidationReport};
use tokio::sync::{oneshot, watch};

use crate::protocol::{agents_of, ClientMessage, Frame, MapView, PatchRequest, ServerMessage, Snapshot, PROTOCOL_VERSION};

/// Pre-serialized state shared with every client task.
#[derive(Debug)]
pub struct Published {
    pub epoch: u64,
    pub frame: String,
}

pub(crate) enum Command {
    Client {
        msg: ClientMessage,
        reply: oneshot::Sender<ServerMessage>,
    },
    Scenario(oneshot::Sender<ScenarioF64>),
    Snapshot(oneshot::Sender<String>),
    Shutdown,
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    /// Broadcast rate (frames per wall-clock second).
    pub frame_rate: f64,
    /// Simulation pace (ticks per wall-clock second); `None` is real time.
    pub ticks_per_second: Option<f64>,
    pub start_paused: bool,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            frame_rate: 30.0,
            ticks_per_second: None,
            start_paused: false,
        }
    }
}

struct Session {
    base: ScenarioF64,
    sim: Simulation<f64>,
    epoch: u64,
    paused: bool,
    rate: f64,
    frame_interval: Duration,
    // pacing anchor: ticks done since `anchor`
    anchor: Instant,
    anchor_tick: u64,
    last_publish: Option<Instant>,
    tx: watch::Sender<Arc<Published>>,
}

pub(crate) fn start(
    scenario: ScenarioF64,
    opts: SessionOptions,
) -> Result<(mpsc::Sender<Command>, watch::Receiver<Arc<Published>>, thread::JoinHandle<()>), EngineError> {
    let sim = Simulation::new(&scenario)?;
    let rate = opts.ticks_per_second.unwrap_or(1.0 / scenario.sim.dt);
    let (tx, rx) = watch::channel(Arc::new(Published {
        epoch: 0,
        frame: String::new(),
    }));
    let mut session = Session {
        base: scenario,
        sim,
        epoch: 0,
        paused: opts.start_paused,
        rate,
        frame_interval: Duration::from_secs_f64(1.0 / opts.frame_rate.max(1e-3)),
        anchor: Instant::now(),
        anchor_tick: 0,
        last_publish: None,
        tx,
    };
    session.publish();
    let (cmd_tx, cmd_rx) = mpsc::channel();
    let handle = thread::Builder::new()
        .name("swarmsim-session".into())
        .spawn(move || session.run(cmd_rx))
        .expect("spawn session thread");
    Ok((cmd_tx, rx, handle))
}

impl Session {
    fn run(mut self, inbox: mpsc::Receiver<Command>) {
        loop {
            let wait = self.next_wake();
            match inbox.recv_timeout(wait) {
                Ok(Command::Shutdown) | Err(RecvTimeoutError::Disconnected) => return,
                Ok(cmd) => {
                    self.handle(cmd);
                    while let Ok(more) = inbox.try_recv() {
                        if matches!(more, Command::Shutdown) {
                            return;
                        }
                        self.handle(more);
                    }
                }
                Err(RecvTimeoutError::Timeout) => {}
            }
            self.advance();
            if self.frame_due() {
                self.publish();
            }
        }
    }

    fn running(&self) -> bool {
        !self.paused && !self.sim.is_finished()
    }

    fn next_wake(&self) -> Duration {
        let frame = self
            .last_publish
            .map(|t| self.frame_interval.saturating_sub(t.elapsed()))
            .unwrap_or_default();
        if !self.running() {
            return frame.max(Duration::from_millis(1)).min(Duration::from_millis(50));
        }
        let due = self.anchor_tick as f64 + self.anchor.elapsed().as_secs_f64() * self.rate;
        let done = self.sim.tick() as f64;
        let tick = Duration::from_secs_f64(((done + 1.0 - due) / self.rate).max(0.0));
        tick.min(frame).min(Duration::from_millis(50))
    }

    fn repace(&mut self) {
        self.anchor = Instant::now();
        self.anchor_tick = self.sim.tick();
    }

    /// Steps every tick that is due, giving up after one frame interval so
    /// controls and broadcasts keep flowing when the engine falls behind.
    fn advance(&mut self) {
        if !self.running() {
            return;
        }
        let budget = Instant::now() + self.frame_interval;
        loop {
            let due = self.anchor_tick + (self.anchor.elapsed().as_secs_f64() * self.rate) as u64;
            if self.sim.tick() >= due || !self.running() {
                break;
            }
            if let Err(e) = self.sim.step() {
                tracing::error!("simulation aborted: {e}");
                self.paused = true;
                break;
            }
            if Instant::now() >= budget {
                // fell behind; drop the backlog instead of racing to catch up
                self.repace();
                break;
            }
        }
        if self.sim.is_finished() {
            self.publish();
        }
    }

    fn frame_due(&self) -> bool {
        self.last_publish
            .map_or(true, |t| t.elapsed() >= self.frame_interval)
    }

    fn effective_scenario(&self) -> ScenarioF64 {
        let mut s = self.sim.scenario().clone();
        s.patches = self.sim.applied_patches().to_vec();
        s
    }

    fn snapshot(&self) -> String {
        let snap = ServerMessage::Snapshot(Snapshot {
            version: PROTOCOL_VERSION,
            epoch: self.epoch,
            tick: self.sim.tick(),
            t: self.sim.time(),
            paused: self.paused,
            ticks_per_second: self.rate,
            scenario: self.effective_scenario(),
            map: MapView::of(self.sim.map()),
            agents: agents_of(&self.sim),
        });
        to_json(&snap)
    }

    fn publish(&mut self) {
        let frame = ServerMessage::Frame(Frame {
            version: PROTOCOL_VERSION,
            epoch: self.epoch,
            tick: self.sim.tick(),
            t: self.sim.time(),
            paused: self.paused,
            finished: self.sim.is_finished(),
            map_digest: self.sim.map().digest(),
            agents: agents_of(&self.sim),
            metrics: self
                .sim
                .last_frame()
                .filter(|f| f.tick == self.sim.tick())
                .cloned(),
        });
        let published = Published {
            epoch: self.epoch,
            frame: to_json(&frame),
        };
        // no receivers is fine: the session keeps running without clients
        let _ = self.tx.send(Arc::new(published));
        self.last_publish = Some(Instant::now());
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Client { msg, reply } => {
                let id = msg.id();
                let control = msg.name().to_string();
                let out = match self.control(msg) {
                    Ok(tick) => ServerMessage::Ack {
                        id,
                        control,
                        tick,
                        epoch: self.epoch,
                    },
                    Err(e) => e.into_message(id),
                };
                let _ = reply.send(out);
            }
            Command::Scenario(reply) => {
                let _ = reply.send(self.effective_scenario());
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(self.snapshot());
            }
            Command::Shutdown => {}
        }
    }

    fn control(&mut self, msg: ClientMessage) -> Result<u64, ControlError> {
        let tick = match msg {
            ClientMessage::ParamPatch { patch, .. } => {
                let patch = build_patch(&patch, self.sim.params(), self.sim.tick())?;
                let at = patch.tick;
                self.sim.submit_patch(patch).map_err(ControlError::from_engine)?;
                at
            }
            ClientMessage::Pause { .. } => {
                self.paused = true;
                self.sim.tick()
            }
            ClientMessage::Resume { .. } => {
                self.paused = false;
                self.repace();
                self.sim.tick()
            }
            ClientMessage::SetRate { ticks_per_second, .. } => {
                if !(ticks_per_second > 0.0 && ticks_per_second.is_finite()) {
                    return Err(ControlError::plain(format!(
                        "ticks_per_second must be finite and > 0, got {ticks_per_second}"
                    )));
                }
                self.rate = ticks_per_second;
                self.repace();
                self.sim.tick()
            }
            ClientMessage::Reset { seed, .. } => {
                let mut scenario = self.base.clone();
                if let Some(seed) = seed {
                    scenario.sim.seed = seed;
                }
                self.sim = Simulation::new(&scenario).map_err(ControlError::from_engine)?;
                self.epoch += 1;
                self.repace();
                0
            }
        };
        self.publish();
        Ok(tick)
    }
}

fn to_json(msg: &ServerMessage) -> String {
    serde_json::to_string(msg).expect("server messages serialize")
}

struct ControlError {
    message: String,
    report: Option<ValidationReport>,
}

impl ControlError {
    fn plain(message: String) -> Self {
        Self { message, report: None }
    }

    fn from_engine(e: EngineError) -> Self {
        match e {
            EngineError::Config(report) => Self {
                message: "patch rejected: parameters violate swarm invariants".into(),
                report: Some(report),
            },
            other => Self::plain(other.to_string()),
        }
    }

    fn into_message(self, id: Option<u64>) -> ServerMessage {
        ServerMessage::Error {
            id,
            message: self.message,
            violations: self.report.map(|r| r.violations).unwrap_or_default(),
        }
    }
}

fn merge_gains<G: serde::Serialize + serde::de::DeserializeOwned>(
    current: &G,
    update: &serde_json::Map<String, Value>,
    block: &str,
) -> Result<G, ControlError> {
    merge_partial(current, update).map_err(|e| ControlError::plain(format!("{block}: {e}")))
}

/// Resolves a client request against the current parameters.
fn build_patch(req: &PatchRequest, current: &SwarmParamsF64, now: u64) -> Result<ParamPatchF64, ControlError> {
    let mut p = ParamPatchF64::at(req.tick.unwrap_or(now));
    p.v_ref = req.v_ref;
    p.u_mig = req.u_mig;
    p.d_ref = req.d_ref;
    if let Some(g) = &req.olfati_saber {
        p.olfati_saber = Some(merge_gains(&current.olfati_saber, g, "olfati_saber")?);
    }
    if let Some(g) = &req.vasarhelyi {
        p.vasarhelyi = Some(merge_gains(&current.vasarhelyi, g, "vasarhelyi")?);
    }
    Ok(p)
}
