//! Behavioral simulator of a handheld FPGA dice.
//!
//! The device rolls by running a 32-bit xorshift generator seeded from ADC
//! samples, debounces a tilt switch with a 10-sample vote, lets the user pick
//! one of eight dice sizes with two buttons, shows the result on a
//! multiplexed 4-digit seven-segment display and logs it over a 1000 baud
//! UART. Everything is driven from a virtual 12 MHz clock and is bit-exact
//! and deterministic.
//!
//! * [`timing`]: derived clock dividers and the tick scheduler
//! * [`prng`]: seed register and the xorshift transform
//! * [`device`]: tilt vote, dice selection, roll digits, keep-awake
//! * [`display`]: digit blanking, glyphs, multiplexer
//! * [`uart`]: 8N1 transmitter FSM and stream decoder
//! * [`stats`]: histograms, chi-square, modulo bias
//! * [`trace`]: stimulus scripts, replay and run logs

pub mod device;
pub mod display;
pub mod prng;
pub mod stats;
pub mod timing;
pub mod trace;
pub mod uart;

pub use device::{Device, DeviceConfig, TiltMode, DICE_SIDES};
pub use display::BcdWord;
pub use prng::{xorshift_inverse, xorshift_step, PrngMode, PrngState, SeedRegister};
pub use timing::{Domain, Scheduler, TickEvent};
pub use trace::{emit_log, parse_trace, replay, LogFormat, ReplayConfig, RunLog};

/// `(rand mod sides) + 1`: the reduction the device uses to turn a raw word
/// into a face value.
pub fn face_of(rand: u32, sides: u8) -> u32 {
    rand % u32::from(sides) + 1
}
