//! Derived clock domains of the top module.
//!
//! Each domain is a toggle divider on the 12 MHz system clock: a counter
//! increments on every sysclk rising edge and the output flips when it hits
//! `half_period - 1`. The scheduler jumps straight from one toggle boundary to
//! the next instead of stepping every cycle; the resulting tick sequence is
//! identical to cycle-by-cycle evaluation.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// System clock frequency in Hz.
pub const SYSCLK_HZ: u64 = 12_000_000;

/// Sysclk cycles per microsecond.
pub const CYCLES_PER_US: u64 = SYSCLK_HZ / 1_000_000;

/// A derived clock. The declaration order is the tie-break order for edges
/// landing on the same sysclk cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    Hz1000,
    Hz1500,
    Hz500,
    Hz10,
    S5,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Hz1000,
        Domain::Hz1500,
        Domain::Hz500,
        Domain::Hz10,
        Domain::S5,
    ];

    /// Sysclk cycles between output toggles.
    pub const fn half_period(self) -> u64 {
        match self {
            Domain::Hz1000 => 6_000,
            Domain::Hz1500 => 4_000,
            Domain::Hz500 => 12_000,
            Domain::Hz10 => 600_024,
            Domain::S5 => 30_001_200,
        }
    }

    /// Sysclk cycles per full output period.
    pub const fn period(self) -> u64 {
        2 * self.half_period()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Domain::Hz1000 => "HZ1000",
            Domain::Hz1500 => "HZ1500",
            Domain::Hz500 => "HZ500",
            Domain::Hz10 => "HZ10",
            Domain::S5 => "S5",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact output frequency of a domain in Hz.
pub fn frequency_of(domain: Domain) -> Ratio<u64> {
    Ratio::new(SYSCLK_HZ, domain.period())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickEvent {
    /// 1-based index of the sysclk rising edge on which the toggle happened.
    pub sysclk_index: u64,
    pub domain: Domain,
    pub edge: Edge,
}

impl TickEvent {
    pub fn is_rising(&self, domain: Domain) -> bool {
        self.domain == domain && self.edge == Edge::Rising
    }

    /// Time of the edge in whole microseconds (floor).
    pub fn t_us(&self) -> u64 {
        self.sysclk_index / CYCLES_PER_US
    }
}

/// State of one divider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockDomain {
    pub domain: Domain,
    pub level: bool,
    /// Cycles counted since the last toggle; always `< half_period`.
    pub counter: u64,
}

impl ClockDomain {
    fn new(domain: Domain) -> Self {
        Self {
            domain,
            level: false,
            counter: 0,
        }
    }

    fn remaining(&self) -> u64 {
        self.domain.half_period() - self.counter
    }
}

/// All five dividers plus the global sysclk cycle count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduler {
    now: u64,
    clocks: [ClockDomain; 5],
}

impl Default for Scheduler {
    fn default() -> Self {
        Self::new()
    }
}

impl Scheduler {
    pub fn new() -> Self {
        Self {
            now: 0,
            clocks: Domain::ALL.map(ClockDomain::new),
        }
    }

    /// Sysclk edges elapsed so far.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn clock(&self, domain: Domain) -> &ClockDomain {
        &self.clocks[domain.index()]
    }

    /// Asynchronous reset: counters and levels cleared, elapsed time kept.
    pub fn reset(&mut self) {
        for clock in &mut self.clocks {
            clock.counter = 0;
            clock.level = false;
        }
    }

    /// Let `n` sysclk cycles pass with every divider held in reset.
    pub fn idle(&mut self, n: u64) {
        self.reset();
        self.now += n;
    }

    /// Advance by `n` cycles and collect the toggles.
    pub fn advance(&mut self, n: u64) -> Vec<TickEvent> {
        let mut events = Vec::new();
        self.advance_with(n, |ev| events.push(ev));
        events
    }

    /// Advance by `n` cycles, handing each toggle to `on_tick` in order.
    pub fn advance_with(&mut self, n: u64, mut on_tick: impl FnMut(TickEvent)) {
        let target = self.now + n;
        loop {
            let step = self
                .clocks
                .iter()
                .map(ClockDomain::remaining)
                .min()
                .expect("five domains");
            if self.now + step > target {
                let rest = target - self.now;
                for clock in &mut self.clocks {
                    clock.counter += rest;
                }
                self.now = target;
                return;
            }
            self.now += step;
            for clock in &mut self.clocks {
                clock.counter += step;
                if clock.counter == clock.domain.half_period() {
                    clock.counter = 0;
                    clock.level = !clock.level;
                    on_tick(TickEvent {
                        sysclk_index: self.now,
                        domain: clock.domain,
                        edge: if clock.level {
                            Edge::Rising
                        } else {
                            Edge::Falling
                        },
                    });
                }
            }
        }
    }

    /// Advance until the global cycle count reaches `target` (no-op if past).
    pub fn advance_to_with(&mut self, target: u64, on_tick: impl FnMut(TickEvent)) {
        let n = target.saturating_sub(self.now);
        self.advance_with(n, on_tick);
    }
}
