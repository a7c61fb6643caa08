//! Per-user FIFO packet queues and the quadratic Lyapunov function.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slice {
    Embb,
    Hrllc,
}

impl Slice {
    pub fn as_str(self) -> &'static str {
        match self {
            Slice::Embb => "embb",
            Slice::Hrllc => "hrllc",
        }
    }
}

/// Whole packets a user can send in one slot at `rate_bits_per_s`.
pub fn service_capacity(rate_bits_per_s: f64, slot_s: f64, packet_bits: u32) -> u64 {
    let packets = rate_bits_per_s * slot_s / packet_bits as f64;
    if packets.is_finite() && packets > 0.0 {
        packets.floor() as u64
    } else {
        0
    }
}

/// Packet queue of one user. Packets are stored as runs of
/// `(enqueue_slot, count)` so that long backlogs stay cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct UserQueue {
    pub slice: Slice,
    fifo: VecDeque<(u64, u64)>,
    backlog: u64,
    /// Fractional service left over from earlier slots (only used when
    /// credit carry-over is enabled).
    credit: f64,
}

/// Packets that left a queue in one slot, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Departures {
    pub count: u64,
    /// `(enqueue_slot, count)` runs in FIFO order.
    pub runs: Vec<(u64, u64)>,
}

impl UserQueue {
    pub fn new(slice: Slice) -> Self {
        Self {
            slice,
            fifo: VecDeque::new(),
            backlog: 0,
            credit: 0.0,
        }
    }

    pub fn backlog(&self) -> u64 {
        self.backlog
    }

    /// Enqueue slot of every waiting packet, oldest first.
    pub fn enqueue_slots(&self) -> impl Iterator<Item = u64> + '_ {
        self.fifo
            .iter()
            .flat_map(|&(slot, n)| std::iter::repeat_n(slot, n as usize))
    }

    pub fn clear(&mut self) {
        self.fifo.clear();
        self.backlog = 0;
        self.credit = 0.0;
    }

    /// Whole packets served at `rate` this slot, optionally carrying the
    /// fractional remainder to the next slot.
    pub fn service_packets(&mut self, rate: f64, slot_s: f64, packet_bits: u32, carry: bool) -> u64 {
        if !carry {
            return service_capacity(rate, slot_s, packet_bits);
        }
        let exact = rate * slot_s / packet_bits as f64 + self.credit;
        let whole = exact.floor();
        self.credit = exact - whole;
        whole as u64
    }

    /// Checks that the run list agrees with the backlog counter and is
    /// ordered by enqueue slot.
    pub fn is_consistent(&self) -> bool {
        let total: u64 = self.fifo.iter().map(|&(_, n)| n).sum();
        let ordered = self
            .fifo
            .iter()
            .zip(self.fifo.iter().skip(1))
            .all(|(a, b)| a.0 <= b.0);
        total == self.backlog && ordered && self.fifo.iter().all(|&(_, n)| n > 0)
    }
}

/// One slot of `[q + a - s]^+` queue dynamics. Arrivals of `slot` join the
/// tail first and are eligible for service in the same slot.
pub fn update_queue(q: &mut UserQueue, arrivals: u64, served: u64, slot: u64) -> Departures {
    if arrivals > 0 {
        match q.fifo.back_mut() {
            Some((last, n)) if *last == slot => *n += arrivals,
            _ => q.fifo.push_back((slot, arrivals)),
        }
        q.backlog += arrivals;
    }
    let mut remaining = served.min(q.backlog);
    let mut out = Departures {
        count: remaining,
        runs: Vec::new(),
    };
    while remaining > 0 {
        let front = q.fifo.front_mut().expect("backlog counter matches fifo");
        let take = front.1.min(remaining);
        out.runs.push((front.0, take));
        front.1 -= take;
        remaining -= take;
        if front.1 == 0 {
            q.fifo.pop_front();
        }
    }
    q.backlog -= out.count;
    out
}

/// End-to-end delay in seconds of every departed packet: queueing time in
/// whole slots plus the fixed processing delay.
pub fn packet_delays(departures: &Departures, slot: u64, slot_s: f64, d_proc_s: f64) -> Vec<f64> {
    departures
        .runs
        .iter()
        .flat_map(|&(enq, n)| {
            let d = (slot - enq) as f64 * slot_s + d_proc_s;
            std::iter::repeat_n(d, n as usize)
        })
        .collect()
}

fn half_sum_sq(backlogs: &[u64]) -> f64 {
    0.5 * backlogs.iter().map(|&q| (q as f64) * (q as f64)).sum::<f64>()
}

/// `L = (sum F^2 + sum G^2) / 2`.
pub fn lyapunov_value(backlogs_hrllc: &[u64], backlogs_embb: &[u64]) -> f64 {
    half_sum_sq(backlogs_hrllc) + half_sum_sq(backlogs_embb)
}

/// One-step change of the Lyapunov function, split by slice.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Drift {
    pub total: f64,
    pub embb: f64,
    pub hrllc: f64,
}

/// Running Lyapunov value with the last drift.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovState {
    pub value: f64,
    pub previous: f64,
    pub drift: Drift,
    hrllc: Vec<u64>,
    embb: Vec<u64>,
}

impl LyapunovState {
    pub fn new(backlogs_hrllc: &[u64], backlogs_embb: &[u64]) -> Self {
        let value = lyapunov_value(backlogs_hrllc, backlogs_embb);
        Self {
            value,
            previous: value,
            drift: Drift::default(),
            hrllc: backlogs_hrllc.to_vec(),
            embb: backlogs_embb.to_vec(),
        }
    }

    pub fn backlogs(&self) -> (&[u64], &[u64]) {
        (&self.hrllc, &self.embb)
    }

    /// Moves to the new backlogs and returns the drift.
    pub fn advance(&mut self, backlogs_hrllc: &[u64], backlogs_embb: &[u64]) -> Drift {
        let drift = lyapunov_drift(self, backlogs_hrllc, backlogs_embb);
        self.previous = self.value;
        self.value += drift.total;
        self.drift = drift;
        self.hrllc.copy_from_slice(backlogs_hrllc);
        self.embb.copy_from_slice(backlogs_embb);
        drift
    }
}

/// Drift from the backlogs held in `prev` to the given ones, computed per
/// user as `(q'^2 - q^2) / 2`.
pub fn lyapunov_drift(prev: &LyapunovState, backlogs_hrllc: &[u64], backlogs_embb: &[u64]) -> Drift {
    fn part(old: &[u64], new: &[u64]) -> f64 {
        assert_eq!(old.len(), new.len(), "backlog vector length changed");
        old.iter()
            .zip(new)
            .map(|(&a, &b)| {
                let (a, b) = (a as f64, b as f64);
                0.5 * (b * b - a * a)
            })
            .sum()
    }
    let hrllc = part(&prev.hrllc, backlogs_hrllc);
    let embb = part(&prev.embb, backlogs_embb);
    Drift {
        total: hrllc + embb,
        embb,
        hrllc,
    }
}
