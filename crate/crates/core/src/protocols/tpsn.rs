//! Timing-sync Protocol for Sensor Networks: level discovery from a root,
//! then two-way timestamp exchange of each child with its parent.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::engine::{run_in_band, Delivery, InBand, Net};
use super::{index_of, NodeReport, ProtocolError, ProtocolKind, SamplingConfig, SyncResult, VehicleNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpsnConfig {
    pub root_id: u32,
    pub round_period_s: f64,
    /// Delay between successive tree levels within a round.
    pub level_gap_s: f64,
    /// Spacing between exchanges of nodes on the same level.
    pub slot_s: f64,
    /// Parent's delay between receiving a request and replying.
    pub turnaround_s: f64,
}

impl Default for TpsnConfig {
    fn default() -> Self {
        Self { root_id: 0, round_period_s: 1.0, level_gap_s: 0.1, slot_s: 0.002, turnaround_s: 0.001 }
    }
}

impl TpsnConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.round_period_s > 0.0) || !(self.level_gap_s > 0.0) || !(self.slot_s > 0.0) || !(self.turnaround_s >= 0.0) {
            return Err(ProtocolError::InvalidConfig("TPSN periods must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Msg {
    Request { t1: f64 },
    Reply { t1: f64, t2: f64, t3: f64 },
}

enum Timer {
    Round,
    Exchange,
    Reply { to: usize, t1: f64, t2: f64 },
}

struct NodeState {
    offset: f64,
    synced: bool,
    parent: Option<usize>,
    level: Option<u32>,
}

struct Tpsn {
    cfg: TpsnConfig,
    root: usize,
    rounds: u64,
    state: Vec<NodeState>,
}

impl Tpsn {
    fn now(&self, nodes: &[VehicleNode], i: usize, t: f64) -> f64 {
        nodes[i].clock.read(t) + self.state[i].offset
    }

    /// Breadth-first levels over the current connectivity, lowest-id
    /// parent first. One discovery broadcast per reached node.
    fn discover(&mut self, net: &mut Net<'_, Msg, Timer>, t: f64) -> Vec<Vec<usize>> {
        for s in &mut self.state {
            s.parent = None;
            s.level = None;
        }
        let mut levels: Vec<Vec<usize>> = Vec::new();
        if !net.nodes[self.root].active_at(t) {
            return levels;
        }
        self.state[self.root].level = Some(0);
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            net.messages += 1;
            let lu = self.state[u].level.expect("queued nodes have a level");
            for v in net.neighbors(u, t) {
                if self.state[v].level.is_none() {
                    self.state[v].level = Some(lu + 1);
                    self.state[v].parent = Some(u);
                    let l = (lu + 1) as usize;
                    if levels.len() < l {
                        levels.resize(l, Vec::new());
                    }
                    levels[l - 1].push(v);
                    queue.push_back(v);
                }
            }
        }
        levels
    }
}

impl InBand for Tpsn {
    type Msg = Msg;
    type Timer = Timer;

    fn start(&mut self, net: &mut Net<'_, Msg, Timer>) {
        net.timer(0.0, self.root, Timer::Round);
    }

    fn on_timer(&mut self, net: &mut Net<'_, Msg, Timer>, t: f64, node: usize, timer: Timer) {
        match timer {
            Timer::Round => {
                self.rounds += 1;
                let levels = self.discover(net, t);
                for (l, members) in levels.iter().enumerate() {
                    for (k, &child) in members.iter().enumerate() {
                        let at = t + (l + 1) as f64 * self.cfg.level_gap_s + k as f64 * self.cfg.slot_s;
                        net.timer(at, child, Timer::Exchange);
                    }
                }
                net.timer(t + self.cfg.round_period_s, node, Timer::Round);
            }
            Timer::Exchange => {
                if let Some(parent) = self.state[node].parent {
                    let t1 = self.now(net.nodes, node, t);
                    net.unicast(t, node, parent, |_, _| Msg::Request { t1 });
                }
            }
            Timer::Reply { to, t1, t2 } => {
                let t3 = self.now(net.nodes, node, t);
                net.unicast(t, node, to, |_, _| Msg::Reply { t1, t2, t3 });
            }
        }
    }

    fn on_deliver(&mut self, net: &mut Net<'_, Msg, Timer>, t: f64, node: usize, d: Delivery<Msg>) {
        match d.msg {
            Msg::Request { t1 } => {
                let t2 = self.now(net.nodes, node, t);
                net.timer(t + self.cfg.turnaround_s, node, Timer::Reply { to: d.from, t1, t2 });
            }
            Msg::Reply { t1, t2, t3 } => {
                let t4 = self.now(net.nodes, node, t);
                let s = &mut self.state[node];
                s.offset += ((t2 - t1) - (t4 - t3)) / 2.0;
                s.synced = true;
            }
        }
    }

    fn logical(&self, nodes: &[VehicleNode], node: usize, t: f64) -> Option<f64> {
        self.state[node].synced.then(|| self.now(nodes, node, t))
    }
}

pub fn run_tpsn(
    nodes: &[VehicleNode],
    channel: &super::ChannelModel,
    cfg: &TpsnConfig,
    sampling: &SamplingConfig,
) -> Result<SyncResult, ProtocolError> {
    cfg.validate()?;
    let root = index_of(nodes, cfg.root_id)?;
    let mut p = Tpsn {
        cfg: *cfg,
        root,
        rounds: 0,
        state: (0..nodes.len()).map(|i| NodeState { offset: 0.0, synced: i == root, parent: None, level: None }).collect(),
    };
    let (traces, messages) = run_in_band(&mut p, nodes, channel, sampling)?;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| nodes[i].node_id);
    let reports = order
        .iter()
        .map(|&i| {
            let mut r = NodeReport::plain(nodes[i].node_id, p.state[i].synced);
            r.level = p.state[i].level;
            r
        })
        .collect();
    Ok(SyncResult::assemble(ProtocolKind::Tpsn, traces, sampling, messages, p.rounds, reports))
}
