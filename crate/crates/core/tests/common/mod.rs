//! Oracles and trace builders shared by the integration tests.
#![allow(dead_code)]

use dice_sim::timing::{Domain, Edge, TickEvent};
use dice_sim::trace::{Signal, TraceEvent};

/// Divider evaluation one sysclk edge at a time, written straight from the
/// counter/compare/toggle description.
pub fn cycle_stepping_ticks(cycles: u64) -> Vec<TickEvent> {
    let mut counters = [0u64; 5];
    let mut levels = [false; 5];
    let mut events = Vec::new();
    for index in 1..=cycles {
        for (i, domain) in Domain::ALL.iter().enumerate() {
            if counters[i] == domain.half_period() - 1 {
                levels[i] = !levels[i];
                counters[i] = 0;
                events.push(TickEvent {
                    sysclk_index: index,
                    domain: *domain,
                    edge: if levels[i] {
                        Edge::Rising
                    } else {
                        Edge::Falling
                    },
                });
            } else {
                counters[i] += 1;
            }
        }
    }
    events
}

/// A 32-bit word as individual bits, bit 0 first.
pub type Bits = [bool; 32];

pub fn to_bits(x: u32) -> Bits {
    let mut b = [false; 32];
    for (i, bit) in b.iter_mut().enumerate() {
        *bit = (x >> i) & 1 == 1;
    }
    b
}

pub fn from_bits(b: &Bits) -> u32 {
    b.iter()
        .enumerate()
        .fold(0, |acc, (i, &bit)| acc | (u32::from(bit) << i))
}

fn shr(b: &Bits, k: usize) -> Bits {
    let mut out = [false; 32];
    for i in 0..32 {
        if i + k < 32 {
            out[i] = b[i + k];
        }
    }
    out
}

fn shl(b: &Bits, k: usize) -> Bits {
    let mut out = [false; 32];
    out[k..].copy_from_slice(&b[..32 - k]);
    out
}

fn xor(a: &Bits, b: &Bits) -> Bits {
    let mut out = [false; 32];
    for i in 0..32 {
        out[i] = a[i] != b[i];
    }
    out
}

/// temp = x ^ x>>7; temp2 = temp ^ temp<<9; rand = temp2 ^ temp2>>13
pub fn bitvec_xorshift(x: u32) -> u32 {
    let seg = to_bits(x);
    let temp = xor(&seg, &shr(&seg, 7));
    let temp2 = xor(&temp, &shl(&temp, 9));
    from_bits(&xor(&temp2, &shr(&temp2, 13)))
}

/// Microseconds from reset release to the k-th HZ10 rising edge (k from 0).
pub fn hz10_rising_us(release_us: u64, k: u64) -> u64 {
    // 600_024 cycles per half period = 50_002 us
    release_us + 50_002 * (2 * k + 1)
}

/// Builds traces aligned to the HZ10 sampling edges after a reset pulse.
pub struct TraceBuilder {
    pub events: Vec<TraceEvent>,
    pub release_us: u64,
}

impl TraceBuilder {
    /// Reset asserted at 0 and released at `release_us`, tilt starting at `tilt`.
    pub fn with_reset(release_us: u64, tilt: bool) -> Self {
        let events = vec![
            TraceEvent::new(0, Signal::Tilt, u16::from(tilt)),
            TraceEvent::new(0, Signal::Reset, 1),
            TraceEvent::new(release_us, Signal::Reset, 0),
        ];
        Self { events, release_us }
    }

    pub fn edge(&self, k: u64) -> u64 {
        hz10_rising_us(self.release_us, k)
    }

    pub fn at(&mut self, t_us: u64, signal: Signal, value: u16) -> &mut Self {
        self.events.push(TraceEvent::new(t_us, signal, value));
        self
    }

    /// Press the given buttons so that exactly the k-th HZ10 edge samples them.
    pub fn press(&mut self, k: u64, up: bool, down: bool) -> &mut Self {
        let edge = self.edge(k);
        for (on, sig) in [(up, Signal::BtnU), (down, Signal::BtnD)] {
            if on {
                self.at(edge - 30_000, sig, 1);
                self.at(edge + 20_000, sig, 0);
            }
        }
        self
    }

    /// Alternate tilt low for `off_us` and high for `on_us` over `[start, end)`,
    /// ending with tilt high.
    pub fn shake(&mut self, start: u64, end: u64, off_us: u64, on_us: u64) -> &mut Self {
        let mut t = start;
        while t < end {
            self.at(t, Signal::Tilt, 0);
            if t + off_us < end {
                self.at(t + off_us, Signal::Tilt, 1);
            }
            t += off_us + on_us;
        }
        self.at(end, Signal::Tilt, 1)
    }

    pub fn build(&self) -> Vec<TraceEvent> {
        let mut evs = self.events.clone();
        evs.sort_by_key(|e| e.t_us);
        evs
    }
}

/// Reset; hold upright 1.5 s; press up six times (d20); shake 1.5 s;
/// hold upright; press both buttons at ~8 s.
pub fn d20_scenario() -> (Vec<TraceEvent>, ScenarioTimes) {
    let mut b = TraceBuilder::with_reset(100, true);
    for k in 8..14 {
        b.press(k, true, false);
    }
    let shake_start = 1_500_100;
    let shake_end = 3_000_100;
    b.shake(shake_start, shake_end, 250_000, 100_000);
    let both_k = 80;
    b.press(both_k, true, true);
    let times = ScenarioTimes {
        shake_start,
        shake_end,
        both_press_us: b.edge(both_k),
        duration_us: 25_000_000,
    };
    (b.build(), times)
}

pub struct ScenarioTimes {
    pub shake_start: u64,
    pub shake_end: u64,
    pub both_press_us: u64,
    pub duration_us: u64,
}
