//! Flooding Time Synchronization Protocol: an elected root floods beacons
//! carrying its global time; every node fits offset and skew by linear
//! regression over recent (local, global) pairs and re-floods once synced.
//! Timestamps are taken at the link layer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::engine::{run_in_band, Delivery, InBand, Net};
use super::{id_order, NodeReport, ProtocolError, ProtocolKind, SamplingConfig, SyncResult, VehicleNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtspConfig {
    pub beacon_period_s: f64,
    /// Regression table size.
    pub window: usize,
    /// Entries needed before a node counts as synchronized and re-floods.
    pub min_entries: usize,
    /// Beacon periods without a new root beacon before claiming root.
    pub root_timeout_periods: f64,
}

impl Default for FtspConfig {
    fn default() -> Self {
        Self { beacon_period_s: 1.0, window: 8, min_entries: 3, root_timeout_periods: 3.0 }
    }
}

impl FtspConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.beacon_period_s > 0.0)
            || self.window < 2
            || self.min_entries == 0
            || self.min_entries > self.window
            || !(self.root_timeout_periods > 0.0)
        {
            return Err(ProtocolError::InvalidConfig("FTSP needs a positive period, window >= 2 and 1 <= min_entries <= window".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Beacon {
    root_id: u32,
    seq: u64,
    global: f64,
}

/// `global ≈ local + offset + rate · (local − x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Fit {
    x0: f64,
    offset: f64,
    rate: f64,
}

impl Fit {
    fn apply(&self, local: f64) -> f64 {
        local + self.offset + self.rate * (local - self.x0)
    }

    /// Least squares of `global − local` on `local − x0`; offset only for a
    /// single pair.
    fn from_pairs(pairs: &VecDeque<(f64, f64)>) -> Option<Self> {
        let (x0, _) = *pairs.front()?;
        let n = pairs.len() as f64;
        let xs = pairs.iter().map(|(l, _)| l - x0);
        let ys = pairs.iter().map(|(l, g)| g - l);
        let mx = xs.clone().sum::<f64>() / n;
        let my = ys.clone().sum::<f64>() / n;
        let sxx: f64 = xs.clone().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let rate = if pairs.len() >= 2 && sxx > 0.0 { sxy / sxx } else { 0.0 };
        Some(Self { x0, offset: my - rate * mx, rate })
    }
}

struct NodeState {
    root_id: Option<u32>,
    is_root: bool,
    seq: u64,
    highest_seq: u64,
    last_heard: f64,
    table: VecDeque<(f64, f64)>,
    fit: Option<Fit>,
    /// Mapping frozen when a synced node takes over as root.
    root_fit: Option<Fit>,
    ever_synced: bool,
}

struct Ftsp {
    cfg: FtspConfig,
    ids: Vec<u32>,
    state: Vec<NodeState>,
}

impl Ftsp {
    fn synced(&self, i: usize) -> bool {
        let s = &self.state[i];
        s.is_root || (s.fit.is_some() && s.table.len() >= self.cfg.min_entries)
    }

    fn global_at(&self, nodes: &[VehicleNode], i: usize, t: f64) -> f64 {
        let s = &self.state[i];
        let local = nodes[i].clock.read(t);
        let fit = if s.is_root { s.root_fit } else { s.fit };
        fit.map_or(local, |f| f.apply(local))
    }

    fn clear(&mut self, i: usize) {
        let s = &mut self.state[i];
        s.table.clear();
        s.fit = None;
    }
}

impl InBand for Ftsp {
    type Msg = Beacon;
    type Timer = ();

    fn start(&mut self, net: &mut Net<'_, Beacon, ()>) {
        let period = self.cfg.beacon_period_s;
        for &i in &net.order.clone() {
            let phase = net.backoff(0.0, period);
            let start = net.nodes[i].active_from_s.max(0.0);
            self.state[i].last_heard = start;
            net.timer(start + phase, i, ());
        }
    }

    fn on_timer(&mut self, net: &mut Net<'_, Beacon, ()>, t: f64, node: usize, _: ()) {
        let period = self.cfg.beacon_period_s;
        if !net.nodes[node].active_at(t) {
            if net.nodes[node].active_until_s.is_none_or(|u| t < u) {
                net.timer(t + period, node, ());
            }
            return;
        }
        let me = self.ids[node];
        if !self.state[node].is_root && t - self.state[node].last_heard > self.cfg.root_timeout_periods * period {
            let frozen = self.synced(node).then(|| self.state[node].fit).flatten();
            let s = &mut self.state[node];
            s.is_root = true;
            s.root_id = Some(me);
            s.root_fit = frozen;
            s.ever_synced = true;
        }
        if self.state[node].is_root {
            self.state[node].seq += 1;
        }
        if self.synced(node) {
            let (root_id, seq) = {
                let s = &self.state[node];
                (s.root_id.unwrap_or(me), if s.is_root { s.seq } else { s.highest_seq })
            };
            let this = &*self;
            let nodes = net.nodes;
            net.broadcast(t, node, |t_tx, mac_jitter| Beacon { root_id, seq, global: this.global_at(nodes, node, t_tx) + mac_jitter });
        }
        net.timer(t + period, node, ());
    }

    fn on_deliver(&mut self, net: &mut Net<'_, Beacon, ()>, t: f64, node: usize, d: Delivery<Beacon>) {
        let b = d.msg;
        let current = self.state[node].root_id;
        let adopt = match current {
            None => true,
            Some(r) => b.root_id < r,
        };
        if adopt {
            self.clear(node);
            let s = &mut self.state[node];
            s.is_root = false;
            s.root_fit = None;
            s.root_id = Some(b.root_id);
            s.highest_seq = 0;
        } else if Some(b.root_id) != self.state[node].root_id || self.state[node].is_root || b.seq <= self.state[node].highest_seq {
            return;
        }
        let local = net.nodes[node].clock.read(d.t_air + d.mac_rx_jitter_s);
        let window = self.cfg.window;
        let s = &mut self.state[node];
        s.table.push_back((local, b.global));
        while s.table.len() > window {
            s.table.pop_front();
        }
        s.highest_seq = b.seq;
        s.last_heard = t;
        s.fit = Fit::from_pairs(&s.table);
        if s.table.len() >= self.cfg.min_entries {
            s.ever_synced = true;
        }
    }

    fn logical(&self, nodes: &[VehicleNode], node: usize, t: f64) -> Option<f64> {
        self.synced(node).then(|| self.global_at(nodes, node, t))
    }
}

pub fn run_ftsp(
    nodes: &[VehicleNode],
    channel: &super::ChannelModel,
    cfg: &FtspConfig,
    sampling: &SamplingConfig,
) -> Result<SyncResult, ProtocolError> {
    cfg.validate()?;
    let order = id_order(nodes)?;
    let mut p = Ftsp {
        cfg: *cfg,
        ids: nodes.iter().map(|n| n.node_id).collect(),
        state: nodes
            .iter()
            .map(|n| NodeState {
                // every node claims root until it hears a lower id
                root_id: Some(n.node_id),
                is_root: false,
                seq: 0,
                highest_seq: 0,
                last_heard: 0.0,
                table: VecDeque::new(),
                fit: None,
                root_fit: None,
                ever_synced: false,
            })
            .collect(),
    };
    let (traces, messages) = run_in_band(&mut p, nodes, channel, sampling)?;
    let rounds = (sampling.duration_s / cfg.beacon_period_s).floor() as u64;
    let reports = order
        .iter()
        .map(|&i| {
            let s = &p.state[i];
            let mut r = NodeReport::plain(nodes[i].node_id, s.ever_synced);
            r.group_id = s.root_id;
            // global = local / (1 + s)  =>  rate = −s / (1 + s)
            r.skew_estimate = if s.is_root { Some(0.0) } else { s.fit.map(|f| -f.rate / (1.0 + f.rate)) };
            r
        })
        .collect();
    Ok(SyncResult::assemble(ProtocolKind::Ftsp, traces, sampling, messages, rounds, reports))
}
