//! Convergent group time sync: every node beacons its group, group size,
//! hop count and time. A node hearing a larger group (ties to the lower
//! group id) adopts that group's time; members re-sync to senders closer to
//! the group origin.

use serde::{Deserialize, Serialize};

use super::engine::{run_in_band, Delivery, InBand, Net};
use super::{id_order, index_of, NodeReport, ProtocolError, ProtocolKind, SamplingConfig, SyncResult, VehicleNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtsConfig {
    pub beacon_period_s: f64,
    /// Groups already synchronized at start, by node id. The lowest id of
    /// each group is its origin and everyone starts on its clock.
    pub initial_groups: Vec<Vec<u32>>,
}

impl Default for CtsConfig {
    fn default() -> Self {
        Self { beacon_period_s: 1.0, initial_groups: Vec::new() }
    }
}

impl CtsConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.beacon_period_s > 0.0) {
            return Err(ProtocolError::InvalidConfig("CTS beacon period must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Beacon {
    sender: u32,
    group_id: u32,
    group_size: u32,
    hops: u32,
    time: f64,
}

/// Periods after which heard members and reported sizes expire, and after
/// which a member with no upstream beacon acts as origin.
const MEMORY_PERIODS: f64 = 2.5;

#[derive(Debug, Clone)]
struct NodeState {
    id: u32,
    offset: f64,
    group_id: u32,
    hops: u32,
    synced: bool,
    /// Same-group senders and when they were last heard.
    heard: Vec<(u32, f64)>,
    /// Size known on joining or from the initial grouping, and when. Not
    /// refreshed by beacons so it cannot circulate.
    reported: (u32, f64),
    last_upstream: f64,
}

impl NodeState {
    fn group_size(&self, t: f64, memory: f64) -> u32 {
        let direct = 1 + self.heard.iter().filter(|(_, at)| t - at <= memory).count() as u32;
        let reported = if t - self.reported.1 <= memory { self.reported.0 } else { 0 };
        direct.max(reported)
    }

    /// Order among acting origins of one group: the true origin first, then
    /// lower ids.
    fn origin_rank(id: u32, group_id: u32) -> (bool, u32) {
        (id != group_id, id)
    }

    fn join(&mut self, b: &Beacon, t: f64) {
        self.group_id = b.group_id;
        self.hops = b.hops + 1;
        self.heard = vec![(b.sender, t)];
        self.reported = (b.group_size, t);
        self.last_upstream = t;
        self.synced = true;
    }
}

struct Cts {
    cfg: CtsConfig,
    mean_delay: f64,
    state: Vec<NodeState>,
}

impl Cts {
    fn memory(&self) -> f64 {
        MEMORY_PERIODS * self.cfg.beacon_period_s
    }

    fn now(&self, nodes: &[VehicleNode], i: usize, t: f64) -> f64 {
        nodes[i].clock.read(t) + self.state[i].offset
    }

    fn set_time(&mut self, nodes: &[VehicleNode], i: usize, t: f64, value: f64) {
        self.state[i].offset = value - nodes[i].clock.read(t);
    }
}

impl InBand for Cts {
    type Msg = Beacon;
    type Timer = ();

    fn start(&mut self, net: &mut Net<'_, Beacon, ()>) {
        for &i in &net.order.clone() {
            let phase = net.backoff(0.0, self.cfg.beacon_period_s);
            let start = net.nodes[i].active_from_s.max(0.0);
            self.state[i].last_upstream = start;
            net.timer(start + phase, i, ());
        }
    }

    fn on_timer(&mut self, net: &mut Net<'_, Beacon, ()>, t: f64, node: usize, _: ()) {
        let memory = self.memory();
        if net.nodes[node].active_at(t) {
            let s = &mut self.state[node];
            if s.hops > 0 && t - s.last_upstream > memory {
                s.hops = 0;
            }
            let (sender, group_id, hops) = (s.id, s.group_id, s.hops);
            let group_size = s.group_size(t, memory);
            // application-level stamp: transmit delay is not observed
            let time = self.now(net.nodes, node, t);
            net.broadcast(t, node, |_, _| Beacon { sender, group_id, group_size, hops, time });
        }
        if net.nodes[node].active_until_s.is_none_or(|u| t < u) {
            net.timer(t + self.cfg.beacon_period_s, node, ());
        }
    }

    fn on_deliver(&mut self, net: &mut Net<'_, Beacon, ()>, t: f64, node: usize, d: Delivery<Beacon>) {
        let b = d.msg;
        let estimate = b.time + self.mean_delay;
        let memory = self.memory();
        let s = &self.state[node];
        if b.group_id != s.group_id {
            let mine = s.group_size(t, memory);
            if b.group_size > mine || (b.group_size == mine && b.group_id < s.group_id) {
                self.set_time(net.nodes, node, t, estimate);
                self.state[node].join(&b, t);
            }
            return;
        }
        let upstream = if s.hops == 0 {
            b.hops == 0 && NodeState::origin_rank(b.sender, b.group_id) < NodeState::origin_rank(s.id, s.group_id)
        } else {
            b.hops < s.hops
        };
        let s = &mut self.state[node];
        match s.heard.iter_mut().find(|(id, _)| *id == b.sender) {
            Some(entry) => entry.1 = t,
            None => s.heard.push((b.sender, t)),
        }
        s.synced = true;
        if upstream {
            s.hops = b.hops + 1;
            s.last_upstream = t;
            self.set_time(net.nodes, node, t, estimate);
        }
    }

    fn logical(&self, nodes: &[VehicleNode], node: usize, t: f64) -> Option<f64> {
        self.state[node].synced.then(|| self.now(nodes, node, t))
    }
}

pub fn run_cts(
    nodes: &[VehicleNode],
    channel: &super::ChannelModel,
    cfg: &CtsConfig,
    sampling: &SamplingConfig,
) -> Result<SyncResult, ProtocolError> {
    cfg.validate()?;
    let order = id_order(nodes)?;
    let mut state: Vec<NodeState> = nodes
        .iter()
        .map(|n| NodeState {
            id: n.node_id,
            offset: 0.0,
            group_id: n.node_id,
            hops: 0,
            synced: false,
            heard: Vec::new(),
            reported: (1, 0.0),
            last_upstream: 0.0,
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    for group in &cfg.initial_groups {
        let Some(&origin_id) = group.iter().min() else { continue };
        let origin = index_of(nodes, origin_id)?;
        for &id in group {
            if !seen.insert(id) {
                return Err(ProtocolError::InvalidConfig(format!("node {id} is in more than one initial group")));
            }
            let i = index_of(nodes, id)?;
            // start on the origin's clock
            let s = &mut state[i];
            s.offset = nodes[origin].clock.offset_s - nodes[i].clock.offset_s;
            s.group_id = origin_id;
            s.hops = u32::from(i != origin);
            s.synced = group.len() >= 2;
            s.reported = (group.len() as u32, 0.0);
        }
    }
    let mut p = Cts { cfg: cfg.clone(), mean_delay: channel.mean_delay_s(), state };
    let (traces, messages) = run_in_band(&mut p, nodes, channel, sampling)?;
    let rounds = (sampling.duration_s / cfg.beacon_period_s).floor() as u64;
    let reports = order
        .iter()
        .map(|&i| {
            let s = &p.state[i];
            let mut r = NodeReport::plain(nodes[i].node_id, s.synced);
            r.group_id = Some(s.group_id);
            r.level = Some(s.hops);
            r
        })
        .collect();
    Ok(SyncResult::assemble(ProtocolKind::Cts, traces, sampling, messages, rounds, reports))
}
