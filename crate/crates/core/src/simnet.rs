//! Slot-level simulation of the two-flow relay topology, plus the
//! deterministic single-flow TDMA schedule.
//!
//! Two flows S1-A-D1 and S2-B-D2 run far enough apart that they do not
//! interfere with each other; the watchdog W sits between them and hears
//! all four senders. Every sender accesses the channel independently each
//! slot with its access probability, transmitting a dummy when it has no
//! data. A receiver decodes a slot iff exactly one transmitter it can
//! hear is active and the receiver itself is silent (half duplex). The
//! relay A forwards packets it actually received, FIFO.
//!
//! Per delivered flow-1 packet the simulation records whether W overheard
//! the source copy and the forwarded copy; the watchdog can compare the
//! packet only if it overheard both.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    S1,
    A,
    D1,
    S2,
    B,
    D2,
    W,
}

impl Node {
    pub fn name(self) -> &'static str {
        match self {
            Node::S1 => "S1",
            Node::A => "A",
            Node::D1 => "D1",
            Node::S2 => "S2",
            Node::B => "B",
            Node::D2 => "D2",
            Node::W => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyMode {
    SingleFlow,
    TwoFlows,
}

/// Who hears whom. Receivers decode slots where exactly one audible
/// transmitter is active.
#[derive(Debug, Clone)]
pub struct Topology {
    pub mode: TopologyMode,
    audibility: Vec<(Node, Vec<Node>)>,
}

impl Topology {
    /// The two-flow layout: each relay hears its own source, each
    /// destination hears its own relay, and W hears all four senders.
    pub fn two_flows() -> Topology {
        Topology {
            mode: TopologyMode::TwoFlows,
            audibility: vec![
                (Node::A, vec![Node::S1]),
                (Node::D1, vec![Node::A]),
                (Node::B, vec![Node::S2]),
                (Node::D2, vec![Node::B]),
                (Node::W, vec![Node::S1, Node::A, Node::S2, Node::B]),
            ],
        }
    }

    /// The single-flow layout (S1, A, D1, W standing for S, A, D, W).
    pub fn single_flow() -> Topology {
        Topology {
            mode: TopologyMode::SingleFlow,
            audibility: vec![
                (Node::A, vec![Node::S1]),
                (Node::D1, vec![Node::A, Node::W]),
                (Node::W, vec![Node::S1, Node::A]),
            ],
        }
    }

    pub fn hears(&self, receiver: Node) -> &[Node] {
        self.audibility
            .iter()
            .find(|(rx, _)| *rx == receiver)
            .map(|(_, txs)| txs.as_slice())
            .unwrap_or(&[])
    }

    pub fn receivers(&self) -> impl Iterator<Item = Node> + '_ {
        self.audibility.iter().map(|(rx, _)| *rx)
    }
}

/// What a sender put on the air in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Data { flow: u8, id: u64 },
    Dummy { origin: Node },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxOutcome {
    Received(Payload),
    Collision,
    Idle,
}

/// One slot: who transmitted what, and what every receiver saw.
#[derive(Debug, Clone)]
pub struct SlotEvent {
    pub slot: u64,
    pub transmitters: Vec<(Node, Payload)>,
    pub receptions: Vec<(Node, RxOutcome)>,
}

/// Watchdog bookkeeping for one delivered flow-1 packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationRecord {
    pub packet_id: u64,
    pub overheard_from_source: bool,
    pub overheard_from_relay: bool,
}

impl ObservationRecord {
    /// The watchdog can compare the two copies only if it overheard both.
    pub fn comparable(&self) -> bool {
        self.overheard_from_source && self.overheard_from_relay
    }
}

/// Per-sender access probabilities. The uniform constructor models the
/// symmetric system; individual overrides support diagnostics such as
/// silencing the second flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAlphas {
    pub s1: f64,
    pub a: f64,
    pub s2: f64,
    pub b: f64,
}

impl NodeAlphas {
    pub fn uniform(alpha: f64) -> NodeAlphas {
        assert!((0.0..=1.0).contains(&alpha));
        NodeAlphas { s1: alpha, a: alpha, s2: alpha, b: alpha }
    }
}

/// Aggregate results of a run.
#[derive(Debug, Clone)]
pub struct SimStats {
    pub slots: u64,
    pub seed: u64,
    pub alphas: NodeAlphas,
    /// Slots in which A decoded a packet from S1.
    pub s1a_successes: u64,
    pub s2b_successes: u64,
    /// Flow-1 packets forwarded by A (D1 hears only A, so forwarded
    /// means delivered end-to-end).
    pub delivered_flow1: u64,
    pub delivered_flow2: u64,
    pub comparable_flow1: u64,
    /// Of the S1->A successes, how many source copies W overheard.
    pub source_overheard: u64,
    /// Of the forwarded flow-1 packets, how many relay copies W overheard.
    pub relay_overheard: u64,
    /// One record per delivered flow-1 packet, in delivery order.
    pub records: Vec<ObservationRecord>,
}

impl SimStats {
    pub fn s1a_rate(&self) -> f64 {
        self.s1a_successes as f64 / self.slots as f64
    }

    /// Empirical pair-observation probability: comparable packets over
    /// packets delivered end-to-end on flow 1.
    pub fn q_hat(&self) -> f64 {
        self.comparable_flow1 as f64 / self.delivered_flow1 as f64
    }

    /// P(W overheard the source copy | S1->A success).
    pub fn source_cond_rate(&self) -> f64 {
        self.source_overheard as f64 / self.s1a_successes as f64
    }

    /// P(W overheard the relay copy | packet forwarded).
    pub fn relay_cond_rate(&self) -> f64 {
        self.relay_overheard as f64 / self.delivered_flow1 as f64
    }
}

/// The two-flow slotted-ALOHA simulator. One instance is strictly
/// sequential; run independent replicas with different seeds for
/// parallel estimation.
pub struct TwoFlowSim {
    topology: Topology,
    alphas: NodeAlphas,
    rng: ChaCha8Rng,
    seed: u64,
    slot: u64,
    next_id_flow1: u64,
    next_id_flow2: u64,
    /// In-flight flow-1 packets at A: (id, source copy overheard by W).
    queue_a: VecDeque<(u64, bool)>,
    queue_b: VecDeque<u64>,
    s1a_successes: u64,
    s2b_successes: u64,
    delivered_flow1: u64,
    delivered_flow2: u64,
    comparable_flow1: u64,
    source_overheard: u64,
    relay_overheard: u64,
    records: Vec<ObservationRecord>,
}

impl TwoFlowSim {
    pub fn new(alphas: NodeAlphas, seed: u64) -> TwoFlowSim {
        for a in [alphas.s1, alphas.a, alphas.s2, alphas.b] {
            assert!((0.0..=1.0).contains(&a));
        }
        TwoFlowSim {
            topology: Topology::two_flows(),
            alphas,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            slot: 0,
            next_id_flow1: 0,
            next_id_flow2: 0,
            queue_a: VecDeque::new(),
            queue_b: VecDeque::new(),
            s1a_successes: 0,
            s2b_successes: 0,
            delivered_flow1: 0,
            delivered_flow2: 0,
            comparable_flow1: 0,
            source_overheard: 0,
            relay_overheard: 0,
            records: Vec::new(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Advance one slot. Access decisions are drawn in the fixed order
    /// S1, A, S2, B; sources are saturated (always have data), relays
    /// send the head of their queue or a dummy.
    pub fn step_slot(&mut self) -> SlotEvent {
        let tx_s1 = self.rng.random_bool(self.alphas.s1);
        let tx_a = self.rng.random_bool(self.alphas.a);
        let tx_s2 = self.rng.random_bool(self.alphas.s2);
        let tx_b = self.rng.random_bool(self.alphas.b);

        let mut transmitters: Vec<(Node, Payload)> = Vec::with_capacity(4);
        let mut a_sent: Option<(u64, bool)> = None;
        if tx_s1 {
            let id = self.next_id_flow1;
            self.next_id_flow1 += 1;
            transmitters.push((Node::S1, Payload::Data { flow: 1, id }));
        }
        if tx_a {
            let payload = match self.queue_a.pop_front() {
                Some((id, src_flag)) => {
                    a_sent = Some((id, src_flag));
                    Payload::Data { flow: 1, id }
                }
                None => Payload::Dummy { origin: Node::A },
            };
            transmitters.push((Node::A, payload));
        }
        if tx_s2 {
            let id = self.next_id_flow2;
            self.next_id_flow2 += 1;
            transmitters.push((Node::S2, Payload::Data { flow: 2, id }));
        }
        if tx_b {
            let payload = match self.queue_b.pop_front() {
                Some(id) => Payload::Data { flow: 2, id },
                None => Payload::Dummy { origin: Node::B },
            };
            transmitters.push((Node::B, payload));
        }

        let is_transmitting = |node: Node| transmitters.iter().any(|(tx, _)| *tx == node);
        let mut receptions: Vec<(Node, RxOutcome)> = Vec::with_capacity(5);
        for rx in self.topology.receivers() {
            let audible: Vec<Payload> = transmitters
                .iter()
                .filter(|(tx, _)| self.topology.hears(rx).contains(tx))
                .map(|(_, p)| *p)
                .collect();
            let outcome = if is_transmitting(rx) {
                // Half duplex: a transmitting node never receives.
                if audible.is_empty() {
                    RxOutcome::Idle
                } else {
                    RxOutcome::Collision
                }
            } else {
                match audible.len() {
                    0 => RxOutcome::Idle,
                    1 => RxOutcome::Received(audible[0]),
                    _ => RxOutcome::Collision,
                }
            };
            receptions.push((rx, outcome));
        }
        debug_assert!(receptions
            .iter()
            .all(|(rx, out)| !(is_transmitting(*rx) && matches!(out, RxOutcome::Received(_)))));

        let received_by = |node: Node| {
            receptions.iter().find(|(rx, _)| *rx == node).map(|(_, out)| *out)
        };
        let w_received = received_by(Node::W);

        // S1 -> A leg: A queues the packet; W's simultaneous overhearing
        // of the source copy is remembered alongside it.
        if let Some(RxOutcome::Received(Payload::Data { flow: 1, id })) = received_by(Node::A) {
            let src_heard =
                w_received == Some(RxOutcome::Received(Payload::Data { flow: 1, id }));
            self.queue_a.push_back((id, src_heard));
            self.s1a_successes += 1;
            if src_heard {
                self.source_overheard += 1;
            }
        }
        if let Some(RxOutcome::Received(Payload::Data { flow: 2, id })) = received_by(Node::B) {
            self.queue_b.push_back(id);
            self.s2b_successes += 1;
        }

        // A -> D1 leg: D1 hears only A, so a forwarded packet is
        // delivered in the same slot it is sent.
        if let Some((id, src_heard)) = a_sent {
            debug_assert_eq!(
                received_by(Node::D1),
                Some(RxOutcome::Received(Payload::Data { flow: 1, id }))
            );
            let relay_heard =
                w_received == Some(RxOutcome::Received(Payload::Data { flow: 1, id }));
            self.delivered_flow1 += 1;
            if relay_heard {
                self.relay_overheard += 1;
            }
            let record = ObservationRecord {
                packet_id: id,
                overheard_from_source: src_heard,
                overheard_from_relay: relay_heard,
            };
            if record.comparable() {
                self.comparable_flow1 += 1;
            }
            self.records.push(record);
        }
        if tx_b {
            if let Some((_, Payload::Data { flow: 2, .. })) =
                transmitters.iter().find(|(tx, _)| *tx == Node::B)
            {
                self.delivered_flow2 += 1;
            }
        }

        let event = SlotEvent { slot: self.slot, transmitters, receptions };
        self.slot += 1;
        event
    }

    pub fn run(&mut self, slots: u64) {
        for _ in 0..slots {
            self.step_slot();
        }
    }

    pub fn stats(&self) -> SimStats {
        SimStats {
            slots: self.slot,
            seed: self.seed,
            alphas: self.alphas,
            s1a_successes: self.s1a_successes,
            s2b_successes: self.s2b_successes,
            delivered_flow1: self.delivered_flow1,
            delivered_flow2: self.delivered_flow2,
            comparable_flow1: self.comparable_flow1,
            source_overheard: self.source_overheard,
            relay_overheard: self.relay_overheard,
            records: self.records.clone(),
        }
    }

    pub fn into_stats(self) -> SimStats {
        SimStats {
            slots: self.slot,
            seed: self.seed,
            alphas: self.alphas,
            s1a_successes: self.s1a_successes,
            s2b_successes: self.s2b_successes,
            delivered_flow1: self.delivered_flow1,
            delivered_flow2: self.delivered_flow2,
            comparable_flow1: self.comparable_flow1,
            source_overheard: self.source_overheard,
            relay_overheard: self.relay_overheard,
            records: self.records,
        }
    }
}

/// Run the symmetric two-flow system for a fixed number of slots.
/// Identical arguments produce bit-identical stats.
pub fn run_sim(alpha: f64, slots: u64, seed: u64) -> SimStats {
    let mut sim = TwoFlowSim::new(NodeAlphas::uniform(alpha), seed);
    sim.run(slots);
    sim.into_stats()
}

/// Slot trace as CSV: slot, active transmitters, then one outcome column
/// per receiver (A, D1, B, D2, W). Outcomes are idle, collision, or
/// data:flow:id / dummy:node.
pub fn write_trace_csv<W: Write>(sim: &mut TwoFlowSim, slots: u64, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "slot,transmitters,rx_A,rx_D1,rx_B,rx_D2,rx_W")?;
    for _ in 0..slots {
        let ev = sim.step_slot();
        let txs: Vec<String> =
            ev.transmitters.iter().map(|(n, _)| n.name().to_string()).collect();
        let fmt = |node: Node| -> String {
            match ev.receptions.iter().find(|(rx, _)| *rx == node).map(|(_, o)| *o) {
                Some(RxOutcome::Idle) | None => "idle".to_string(),
                Some(RxOutcome::Collision) => "collision".to_string(),
                Some(RxOutcome::Received(Payload::Data { flow, id })) => {
                    format!("data:{flow}:{id}")
                }
                Some(RxOutcome::Received(Payload::Dummy { origin })) => {
                    format!("dummy:{}", origin.name())
                }
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            ev.slot,
            txs.join("+"),
            fmt(Node::A),
            fmt(Node::D1),
            fmt(Node::B),
            fmt(Node::D2),
            fmt(Node::W)
        )?;
    }
    Ok(())
}

/// Arrows of the single-flow schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    SourceToRelay,
    RelayToDestination,
    WatchdogToDestination,
}

/// Whether two arrows share a node and therefore cannot be scheduled in
/// the same symbol-time.
pub fn arrows_interfere(a: Arrow, b: Arrow) -> bool {
    use Arrow::*;
    matches!(
        (a, b),
        (SourceToRelay, RelayToDestination)
            | (RelayToDestination, SourceToRelay)
            | (RelayToDestination, WatchdogToDestination)
            | (WatchdogToDestination, RelayToDestination)
    ) || a == b
}

/// The optimal centralized single-flow schedule for one packet of l_sym
/// symbols with m_check checking symbols: l_sym symbol-times source to
/// relay, l_sym relay to destination, m_check watchdog to destination.
#[derive(Debug, Clone)]
pub struct SingleFlowSchedule {
    l_sym: usize,
    m_check: usize,
    slots: Vec<Arrow>,
}

impl SingleFlowSchedule {
    pub fn new(l_sym: usize, m_check: usize) -> SingleFlowSchedule {
        assert!(l_sym >= 1);
        let mut slots = Vec::with_capacity(2 * l_sym + m_check);
        slots.extend(std::iter::repeat(Arrow::SourceToRelay).take(l_sym));
        slots.extend(std::iter::repeat(Arrow::RelayToDestination).take(l_sym));
        slots.extend(std::iter::repeat(Arrow::WatchdogToDestination).take(m_check));
        SingleFlowSchedule { l_sym, m_check, slots }
    }

    pub fn len_per_packet(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Arrow] {
        &self.slots
    }

    /// Data symbols reaching the destination per symbol-time, counted
    /// from the schedule itself.
    pub fn realized_throughput(&self) -> f64 {
        let delivered =
            self.slots.iter().filter(|a| matches!(a, Arrow::RelayToDestination)).count();
        delivered as f64 / self.slots.len() as f64
    }

    pub fn l_sym(&self) -> usize {
        self.l_sym
    }

    pub fn m_check(&self) -> usize {
        self.m_check
    }
}
