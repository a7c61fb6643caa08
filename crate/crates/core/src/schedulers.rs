//! PRB allocations and the non-learning schedulers.
//!
//! All ties are broken toward the lowest user index (and the lowest PRB
//! index when choosing among PRBs), so every scheduler is deterministic.

use crate::channel::ChannelSlot;
use crate::error::{Error, Result};

/// Integer PRB allocation: which user owns each PRB, plus per-user counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    counts: Vec<usize>,
    assignment: Vec<usize>,
}

impl Allocation {
    /// Builds an allocation from a PRB -> user map and checks that every
    /// user owns at least one PRB.
    pub fn from_assignment(assignment: Vec<usize>, num_users: usize) -> Result<Self> {
        let alloc = Self::from_assignment_unchecked(assignment, num_users);
        alloc.check(alloc.assignment.len(), num_users)?;
        Ok(alloc)
    }

    pub(crate) fn from_assignment_unchecked(assignment: Vec<usize>, num_users: usize) -> Self {
        let mut counts = vec![0; num_users];
        for &u in &assignment {
            if u < num_users {
                counts[u] += 1;
            }
        }
        Self { counts, assignment }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_prbs(&self) -> usize {
        self.assignment.len()
    }

    /// Full budget used, every user served, counts consistent with the map.
    pub fn check(&self, num_prbs: usize, num_users: usize) -> Result<()> {
        if self.assignment.len() != num_prbs {
            return Err(Error::Invariant(format!(
                "allocation covers {} PRBs, expected {num_prbs}",
                self.assignment.len()
            )));
        }
        if self.counts.len() != num_users {
            return Err(Error::Invariant(format!(
                "allocation has {} users, expected {num_users}",
                self.counts.len()
            )));
        }
        if let Some(&bad) = self.assignment.iter().find(|&&u| u >= num_users) {
            return Err(Error::Invariant(format!("PRB assigned to unknown user {bad}")));
        }
        let total: usize = self.counts.iter().sum();
        if total != num_prbs {
            return Err(Error::Invariant(format!(
                "allocated {total} PRBs, budget is {num_prbs}"
            )));
        }
        if let Some(u) = self.counts.iter().position(|&c| c == 0) {
            return Err(Error::Invariant(format!("user {u} received no PRB")));
        }
        Ok(())
    }
}

/// What every policy gets to see when deciding a slot. Users are ordered
/// eMBB first, then HRLLC.
#[derive(Debug, Clone, Copy)]
pub struct SchedulerContext<'a> {
    pub slot: u64,
    pub num_embb: usize,
    pub num_hrllc: usize,
    /// Backlog at the start of the slot, before this slot's arrivals.
    pub backlogs: &'a [u64],
    pub arrivals: &'a [u64],
    pub channel: &'a ChannelSlot,
    /// Dexterity index per HRLLC user.
    pub dxi: &'a [f64],
}

impl SchedulerContext<'_> {
    pub fn num_users(&self) -> usize {
        self.num_embb + self.num_hrllc
    }

    pub fn num_prbs(&self) -> usize {
        self.channel.num_prbs()
    }

    /// Packets waiting for service this slot (backlog plus arrivals).
    pub fn pending(&self, user: usize) -> u64 {
        self.backlogs[user] + self.arrivals[user]
    }
}

/// Channel-agnostic cyclic dealing of PRBs starting from a persistent cursor.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    pub cursor: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocate(&mut self, num_prbs: usize, num_users: usize) -> Allocation {
        let assignment: Vec<usize> = (0..num_prbs)
            .map(|j| (self.cursor + j) % num_users)
            .collect();
        self.cursor = (self.cursor + num_prbs) % num_users;
        Allocation::from_assignment_unchecked(assignment, num_users)
    }
}

/// Proportional-fair: each PRB goes to the user with the best ratio of
/// instantaneous PRB rate to its average throughput.
#[derive(Debug, Clone)]
pub struct ProportionalFair {
    pub ewma: Vec<f64>,
    pub factor: f64,
}

impl ProportionalFair {
    pub fn new(num_users: usize, factor: f64, init: f64) -> Self {
        Self {
            ewma: vec![init; num_users],
            factor,
        }
    }

    pub fn allocate(&self, channel: &ChannelSlot) -> Allocation {
        let users = channel.num_users();
        let prbs = channel.num_prbs();
        let mut assignment = Vec::with_capacity(prbs);
        for j in 0..prbs {
            let mut best = 0;
            let mut best_metric = f64::NEG_INFINITY;
            for (i, avg) in self.ewma.iter().enumerate() {
                let metric = channel.rate(i, j) / avg;
                if metric > best_metric {
                    best = i;
                    best_metric = metric;
                }
            }
            assignment.push(best);
        }
        repair_minimum(&mut assignment, users, |u, j| channel.rate(u, j));
        Allocation::from_assignment_unchecked(assignment, users)
    }

    /// Folds the rates achieved this slot into the averages.
    pub fn observe(&mut self, rates: &[f64]) {
        for (avg, &r) in self.ewma.iter_mut().zip(rates) {
            *avg = (1.0 - self.factor) * *avg + self.factor * r;
        }
    }
}

/// Gives every user without a PRB one PRB taken from the user holding the
/// most; the moved PRB is the donor's PRB that is best for the receiver.
fn repair_minimum(assignment: &mut [usize], num_users: usize, score: impl Fn(usize, usize) -> f64) {
    let mut counts = vec![0usize; num_users];
    for &u in assignment.iter() {
        counts[u] += 1;
    }
    for receiver in 0..num_users {
        if counts[receiver] > 0 {
            continue;
        }
        let donor = argmax_first(counts.iter().map(|&c| c as f64));
        let prb = assignment
            .iter()
            .enumerate()
            .filter(|(_, &owner)| owner == donor)
            .map(|(j, _)| j)
            .fold(None::<(usize, f64)>, |best, j| {
                let s = score(receiver, j);
                match best {
                    Some((_, bs)) if bs >= s => best,
                    _ => Some((j, s)),
                }
            })
            .map(|(j, _)| j)
            .expect("donor owns at least two PRBs");
        assignment[prb] = receiver;
        counts[donor] -= 1;
        counts[receiver] += 1;
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Splits `slice_prbs` among a slice's users: one PRB each, then the rest
/// by largest remainder in proportion to `weights`. All-zero weights split
/// uniformly. Ties go to the lower index.
pub fn intra_slice_divide(slice_prbs: usize, weights: &[f64]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(slice_prbs >= n, "slice has fewer PRBs than users");
    let rest = slice_prbs - n;
    let total: f64 = weights.iter().sum();
    let shares: Vec<f64> = if total > 0.0 && total.is_finite() {
        weights.iter().map(|w| w / total * rest as f64).collect()
    } else {
        vec![rest as f64 / n as f64; n]
    };
    let mut counts: Vec<usize> = shares.iter().map(|s| 1 + s.floor() as usize).collect();
    let given: usize = counts.iter().sum::<usize>() - n;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower indices first among equal remainders
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra)
    });
    for &i in order.iter().take(rest - given) {
        counts[i] += 1;
    }
    counts
}

/// Turns per-user counts into a PRB -> user map. Users take turns, largest
/// count first, each picking its best remaining PRB until its count is met.
pub fn materialize_assignment(counts: &[usize], channel: &ChannelSlot) -> Vec<usize> {
    let prbs = channel.num_prbs();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let mut need = counts.to_vec();
    let mut free = vec![true; prbs];
    let mut assignment = vec![usize::MAX; prbs];
    let mut remaining: usize = counts.iter().sum();
    assert_eq!(remaining, prbs, "counts must sum to the PRB budget");
    while remaining > 0 {
        for &u in &order {
            if need[u] == 0 {
                continue;
            }
            let gains = channel.gains_of(u);
            let mut pick = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for (j, &g) in gains.iter().enumerate() {
                if free[j] && g > best {
                    pick = j;
                    best = g;
                }
            }
            free[pick] = false;
            assignment[pick] = u;
            need[u] -= 1;
            remaining -= 1;
        }
    }
    assignment
}

/// Counts plus materialization in one step.
pub fn allocation_from_counts(counts: &[usize], channel: &ChannelSlot) -> Allocation {
    let assignment = materialize_assignment(counts, channel);
    Allocation::from_assignment_unchecked(assignment, counts.len())
}
