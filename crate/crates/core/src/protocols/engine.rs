//! Discrete-event core shared by the in-band protocols.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{id_order, sample_pairs, ChannelModel, PairError, ProtocolError, SamplingConfig, VehicleNode};
use crate::rng::{derive_seed, seeded_rng, SimRng};
use crate::SPEED_OF_LIGHT;

/// A message as seen by one receiver.
#[derive(Debug, Clone)]
pub(crate) struct Delivery<M> {
    pub from: usize,
    pub msg: M,
    /// Instant the signal reaches the receiver antenna.
    pub t_air: f64,
    /// Error of the receiver's link-layer timestamp, s.
    pub mac_rx_jitter_s: f64,
}

pub(crate) enum Event<M, T> {
    Deliver(Delivery<M>),
    Timer(T),
}

struct Scheduled<E> {
    t: f64,
    node_id: u32,
    seq: u64,
    node: usize,
    ev: E,
}

impl<E> Scheduled<E> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then(self.node_id.cmp(&other.node_id)).then(self.seq.cmp(&other.seq))
    }
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl<E> Eq for Scheduled<E> {}
impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Scheduled<E> {
    // BinaryHeap is a max-heap; invert for earliest-first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Independent random streams so that, e.g., changing transmit jitter
/// leaves receive-side draws untouched.
struct Streams {
    tx: SimRng,
    rx: SimRng,
    mac: SimRng,
    backoff: SimRng,
}

pub(crate) struct Net<'a, M, T> {
    pub nodes: &'a [VehicleNode],
    pub order: Vec<usize>,
    pub channel: &'a ChannelModel,
    queue: BinaryHeap<Scheduled<Event<M, T>>>,
    seq: u64,
    streams: Streams,
    pub messages: u64,
}

impl<'a, M: Clone, T> Net<'a, M, T> {
    pub fn new(nodes: &'a [VehicleNode], channel: &'a ChannelModel) -> Result<Self, ProtocolError> {
        channel.validate()?;
        let order = id_order(nodes)?;
        let s = |name: &str| seeded_rng(derive_seed(channel.seed, name));
        Ok(Self {
            nodes,
            order,
            channel,
            queue: BinaryHeap::new(),
            seq: 0,
            streams: Streams { tx: s("channel-tx"), rx: s("channel-rx"), mac: s("channel-mac"), backoff: s("channel-backoff") },
            messages: 0,
        })
    }

    fn push(&mut self, t: f64, node: usize, ev: Event<M, T>) {
        self.seq += 1;
        self.queue.push(Scheduled { t, node_id: self.nodes[node].node_id, seq: self.seq, node, ev });
    }

    pub fn timer(&mut self, t: f64, node: usize, timer: T) {
        self.push(t, node, Event::Timer(timer));
    }

    pub fn in_range(&self, a: usize, b: usize, t: f64) -> bool {
        a != b
            && self.nodes[a].active_at(t)
            && self.nodes[b].active_at(t)
            && (self.nodes[a].position_at(t) - self.nodes[b].position_at(t)).norm() <= self.channel.comm_range_m
    }

    pub fn neighbors(&self, a: usize, t: f64) -> Vec<usize> {
        self.order.iter().copied().filter(|&b| self.in_range(a, b, t)).collect()
    }

    pub fn backoff(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.streams.backoff.random_range(lo..hi)
        } else {
            lo
        }
    }

    /// Sends from `from` at `t_send` to `targets` (already filtered for
    /// range). `build` gets the transmit instant and the sender's link-layer
    /// stamp error. Counts one message.
    fn send(&mut self, t_send: f64, from: usize, targets: &[usize], build: impl FnOnce(f64, f64) -> M) {
        self.messages += 1;
        let z_tx: f64 = self.streams.tx.sample(StandardNormal);
        let z_mac_tx: f64 = self.streams.mac.sample(StandardNormal);
        let t_tx = t_send + self.channel.tx_delay.from_normal(z_tx) + self.nodes[from].radio.extra_tx_s;
        let msg = build(t_tx, z_mac_tx * self.channel.mac_stamp_jitter_us * 1e-6);
        let p_from = self.nodes[from].position_at(t_tx);
        for &to in targets {
            let z_rx: f64 = self.streams.rx.sample(StandardNormal);
            let z_mac_rx: f64 = self.streams.mac.sample(StandardNormal);
            let t_air = t_tx + (self.nodes[to].position_at(t_tx) - p_from).norm() / SPEED_OF_LIGHT;
            let t_rx = t_air + self.channel.rx_delay.from_normal(z_rx) + self.nodes[to].radio.extra_rx_s;
            let d = Delivery { from, msg: msg.clone(), t_air, mac_rx_jitter_s: z_mac_rx * self.channel.mac_stamp_jitter_us * 1e-6 };
            self.push(t_rx, to, Event::Deliver(d));
        }
    }

    pub fn broadcast(&mut self, t_send: f64, from: usize, build: impl FnOnce(f64, f64) -> M) {
        let targets = self.neighbors(from, t_send);
        self.send(t_send, from, &targets, build);
    }

    /// Returns false (and sends nothing) when `to` is out of range.
    pub fn unicast(&mut self, t_send: f64, from: usize, to: usize, build: impl FnOnce(f64, f64) -> M) -> bool {
        if !self.in_range(from, to, t_send) {
            return false;
        }
        self.send(t_send, from, &[to], build);
        true
    }
}

pub(crate) trait InBand {
    type Msg: Clone;
    type Timer;

    fn start(&mut self, net: &mut Net<'_, Self::Msg, Self::Timer>);
    fn on_timer(&mut self, net: &mut Net<'_, Self::Msg, Self::Timer>, t: f64, node: usize, timer: Self::Timer);
    fn on_deliver(&mut self, net: &mut Net<'_, Self::Msg, Self::Timer>, t: f64, node: usize, d: Delivery<Self::Msg>);
    /// Logical time of `node` at true time `t`, `None` while unsynchronized.
    fn logical(&self, nodes: &[VehicleNode], node: usize, t: f64) -> Option<f64>;
}

/// Runs the protocol to `sampling.duration_s`, sampling pairwise errors on
/// the grid. Returns the traces and message count.
pub(crate) fn run_in_band<P: InBand>(
    protocol: &mut P,
    nodes: &[VehicleNode],
    channel: &ChannelModel,
    sampling: &SamplingConfig,
) -> Result<(Vec<PairError>, u64), ProtocolError> {
    sampling.validate()?;
    let mut net: Net<'_, P::Msg, P::Timer> = Net::new(nodes, channel)?;
    protocol.start(&mut net);
    let times = sampling.times();
    let mut next_sample = 0usize;
    let mut traces = Vec::new();
    let take = |protocol: &P, t: f64, order: &[usize], traces: &mut Vec<PairError>| {
        sample_pairs(nodes, order, t, sampling.pairs, |i, t| protocol.logical(nodes, i, t), traces);
    };
    while let Some(ev) = net.queue.pop() {
        if ev.t > sampling.duration_s {
            break;
        }
        while next_sample < times.len() && times[next_sample] <= ev.t {
            take(protocol, times[next_sample], &net.order, &mut traces);
            next_sample += 1;
        }
        match ev.ev {
            Event::Timer(timer) => protocol.on_timer(&mut net, ev.t, ev.node, timer),
            Event::Deliver(d) => {
                if nodes[ev.node].active_at(ev.t) {
                    protocol.on_deliver(&mut net, ev.t, ev.node, d);
                }
            }
        }
    }
    for &t in &times[next_sample..] {
        take(protocol, t, &net.order, &mut traces);
    }
    Ok((traces, net.messages))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::line;
    use super::*;
    use crate::clocks::QuartzClock;

    #[test]
    fn queue_orders_by_time_then_node_then_seq() {
        let nodes = line(3, 10.0, 10.0, QuartzClock::perfect);
        let ch = ChannelModel::ideal(0);
        let mut net: Net<'_, (), u32> = Net::new(&nodes, &ch).unwrap();
        net.timer(2.0, 0, 1);
        net.timer(1.0, 2, 2);
        net.timer(1.0, 1, 3);
        net.timer(1.0, 1, 4);
        let got: Vec<u32> = std::iter::from_fn(|| net.queue.pop())
            .map(|s| match s.ev {
                Event::Timer(v) => v,
                Event::Deliver(_) => unreachable!(),
            })
            .collect();
        assert_eq!(got, vec![3, 4, 2, 1]);
    }

    #[test]
    fn broadcast_reaches_only_nodes_in_range() {
        let nodes = line(4, 400.0, 10.0, QuartzClock::perfect);
        let ch = ChannelModel::ideal(0);
        let mut net: Net<'_, u8, ()> = Net::new(&nodes, &ch).unwrap();
        net.broadcast(0.0, 0, |_, _| 7);
        let mut reached: Vec<(usize, f64)> = std::iter::from_fn(|| net.queue.pop()).map(|s| (s.node, s.t)).collect();
        reached.sort_by_key(|r| r.0);
        assert_eq!(reached.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2]);
        assert!((reached[0].1 - 400.0 / SPEED_OF_LIGHT).abs() < 1e-15);
        assert_eq!(net.messages, 1);
        assert!(!net.unicast(0.0, 0, 3, |_, _| 1));
        assert_eq!(net.messages, 1);
    }
}
