//! Reference Broadcast Synchronization: a sender broadcasts beacons, the
//! receivers compare their reception timestamps. Sender-side delay is common
//! to all receivers and cancels.

use serde::{Deserialize, Serialize};

use super::engine::{run_in_band, Delivery, InBand, Net};
use super::{id_order, index_of, NodeReport, ProtocolError, ProtocolKind, SamplingConfig, SyncResult, VehicleNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbsConfig {
    /// Beacon sender; defaults to the lowest id.
    pub sender_id: Option<u32>,
    pub beacons_per_round: usize,
    pub beacon_spacing_s: f64,
    pub round_period_s: f64,
}

impl Default for RbsConfig {
    fn default() -> Self {
        Self { sender_id: None, beacons_per_round: 30, beacon_spacing_s: 0.01, round_period_s: 1.0 }
    }
}

impl RbsConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.beacons_per_round == 0 || !(self.beacon_spacing_s > 0.0) || !(self.round_period_s > 0.0) {
            return Err(ProtocolError::InvalidConfig("RBS needs at least one beacon and positive periods".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Msg {
    Beacon {
        round: u64,
        k: usize,
    },
    /// A receiver's reception stamps for one round, indexed by beacon.
    Stamps {
        round: u64,
        stamps: Vec<Option<f64>>,
    },
}

enum Timer {
    Round,
    Beacon { round: u64, k: usize },
    Exchange { round: u64 },
}

struct NodeState {
    offset: f64,
    synced: bool,
    round: u64,
    stamps: Vec<Option<f64>>,
}

struct Rbs {
    cfg: RbsConfig,
    sender: usize,
    reference: usize,
    rounds: u64,
    state: Vec<NodeState>,
}

impl Rbs {
    fn now(&self, nodes: &[VehicleNode], i: usize, t: f64) -> f64 {
        nodes[i].clock.read(t) + self.state[i].offset
    }
}

impl InBand for Rbs {
    type Msg = Msg;
    type Timer = Timer;

    fn start(&mut self, net: &mut Net<'_, Msg, Timer>) {
        net.timer(0.0, self.sender, Timer::Round);
    }

    fn on_timer(&mut self, net: &mut Net<'_, Msg, Timer>, t: f64, node: usize, timer: Timer) {
        match timer {
            Timer::Round => {
                self.rounds += 1;
                let round = self.rounds;
                let m = self.cfg.beacons_per_round;
                for k in 0..m {
                    net.timer(t + k as f64 * self.cfg.beacon_spacing_s, node, Timer::Beacon { round, k });
                }
                // Receivers publish their stamps after the last beacon lands.
                let exchange_at = t + m as f64 * self.cfg.beacon_spacing_s + 0.02;
                for &r in &net.order.clone() {
                    if r != self.sender {
                        net.timer(exchange_at, r, Timer::Exchange { round });
                    }
                }
                net.timer(t + self.cfg.round_period_s, node, Timer::Round);
            }
            Timer::Beacon { round, k } => {
                if net.nodes[node].active_at(t) {
                    net.broadcast(t, node, |_, _| Msg::Beacon { round, k });
                }
            }
            Timer::Exchange { round } => {
                let s = &self.state[node];
                if s.round == round && s.stamps.iter().any(Option::is_some) && net.nodes[node].active_at(t) {
                    let stamps = s.stamps.clone();
                    net.broadcast(t, node, |_, _| Msg::Stamps { round, stamps });
                }
            }
        }
    }

    fn on_deliver(&mut self, net: &mut Net<'_, Msg, Timer>, t: f64, node: usize, d: Delivery<Msg>) {
        match d.msg {
            Msg::Beacon { round, k } => {
                if node == self.sender {
                    return;
                }
                let stamp = self.now(net.nodes, node, t);
                let s = &mut self.state[node];
                if s.round != round {
                    s.round = round;
                    s.stamps = vec![None; self.cfg.beacons_per_round];
                }
                s.stamps[k] = Some(stamp);
            }
            Msg::Stamps { round, stamps } => {
                if d.from != self.reference || node == self.sender || node == self.reference {
                    return;
                }
                let s = &mut self.state[node];
                if s.round != round {
                    return;
                }
                let diffs: Vec<f64> = stamps.iter().zip(&s.stamps).filter_map(|(r, m)| Some((*r)? - (*m)?)).collect();
                if !diffs.is_empty() {
                    s.offset += diffs.iter().sum::<f64>() / diffs.len() as f64;
                    s.synced = true;
                }
            }
        }
    }

    fn logical(&self, nodes: &[VehicleNode], node: usize, t: f64) -> Option<f64> {
        (node != self.sender && self.state[node].synced).then(|| self.now(nodes, node, t))
    }
}

pub fn run_rbs(
    nodes: &[VehicleNode],
    channel: &super::ChannelModel,
    cfg: &RbsConfig,
    sampling: &SamplingConfig,
) -> Result<SyncResult, ProtocolError> {
    cfg.validate()?;
    let order = id_order(nodes)?;
    let sender = match cfg.sender_id {
        Some(id) => index_of(nodes, id)?,
        None => order[0],
    };
    let receivers: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| i != sender && (nodes[i].position_at(0.0) - nodes[sender].position_at(0.0)).norm() <= channel.comm_range_m)
        .filter(|&i| nodes[i].active_at(0.0) || nodes[i].active_at(sampling.duration_s))
        .collect();
    if receivers.len() < 2 {
        return Err(ProtocolError::InsufficientReceivers { have: receivers.len() });
    }
    let reference = receivers[0];
    let mut p = Rbs {
        cfg: *cfg,
        sender,
        reference,
        rounds: 0,
        state: (0..nodes.len()).map(|i| NodeState { offset: 0.0, synced: i == reference, round: 0, stamps: Vec::new() }).collect(),
    };
    let (traces, messages) = run_in_band(&mut p, nodes, channel, sampling)?;
    let reports = order.iter().filter(|&&i| i != sender).map(|&i| NodeReport::plain(nodes[i].node_id, p.state[i].synced)).collect();
    Ok(SyncResult::assemble(ProtocolKind::Rbs, traces, sampling, messages, p.rounds, reports))
}
