//! Control logic of the dice unit.
//!
//! Everything here is clocked by ticks from [`crate::timing`]:
//!
//! * HZ10 rising: seed shift, tilt vote, dice selection, roll digits
//! * HZ1000 rising: UART transmitter and its message-rate gate
//! * HZ500 rising: display multiplexer
//! * S5 rising: keep-awake toggler
//!
//! Within one HZ10 tick the sub-updates run in that order and each sees the
//! results of the ones before it. The roll uses the `rand` value that was
//! current before the seed shift of the same tick.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::display::{bcd_select, BcdWord, DisplayFrame, Multiplexer, BLANK, LETTER_D};
use crate::prng::{xorshift_step, PrngMode, PrngState, SeedRegister};
use crate::timing::{Domain, TickEvent};
use crate::uart::{payload_pack, uart_ready_gate, UartTxState};

/// Dice sizes in selection order.
pub const DICE_SIDES: [u8; 8] = [2, 4, 6, 8, 10, 12, 20, 100];

/// Tilt samples in the vote window.
pub const TILT_WINDOW: u32 = 10;
/// Minimum number of set samples for the unit to count as upright.
pub const UPRIGHT_THRESHOLD: u32 = 7;

const WINDOW_MASK: u16 = (1 << TILT_WINDOW) - 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiltMode {
    /// Vote over the window as it was before this tick's sample was shifted in.
    #[default]
    Faithful,
    /// Vote over the window including this tick's sample.
    Intuitive,
}

impl std::str::FromStr for TiltMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "faithful" => Ok(TiltMode::Faithful),
            "intuitive" => Ok(TiltMode::Intuitive),
            other => Err(format!(
                "unknown tilt mode `{other}` (expected faithful|intuitive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiltState {
    /// Newest sample in bit 0.
    pub tiltlog: u16,
    pub sumtilt: u8,
    pub upright: bool,
}

impl TiltState {
    pub fn update(&mut self, sample: bool, mode: TiltMode) {
        let shifted = ((self.tiltlog << 1) | u16::from(sample)) & WINDOW_MASK;
        let voted = match mode {
            TiltMode::Faithful => self.tiltlog,
            TiltMode::Intuitive => shifted,
        };
        self.sumtilt = voted.count_ones() as u8;
        self.upright = u32::from(self.sumtilt) >= UPRIGHT_THRESHOLD;
        self.tiltlog = shifted;
    }
}

/// Faithful tilt vote for one HZ10 tick.
pub fn tilt_update(state: TiltState, sample: bool) -> TiltState {
    let mut next = state;
    next.update(sample, TiltMode::Faithful);
    next
}

/// One row of the dice selection table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiceRow {
    pub diceval: u8,
    /// `[thou, huns, tens, ones]` shown while in set mode.
    pub set: [u8; 4],
}

/// Selection table. Panics if `dselect > 7`.
pub fn dice_table(dselect: u8) -> DiceRow {
    const F: u8 = BLANK;
    const D: u8 = LETTER_D;
    let (diceval, set) = match dselect {
        0 => (2, [D, 2, F, F]),
        1 => (4, [D, 4, F, F]),
        2 => (6, [D, 6, F, F]),
        3 => (8, [D, 8, F, F]),
        4 => (10, [D, 1, 0, F]),
        5 => (12, [D, 1, 2, F]),
        6 => (20, [D, 2, 0, F]),
        7 => (100, [D, 1, 0, 0]),
        _ => panic!("dselect {dselect} out of range 0..=7"),
    };
    DiceRow { diceval, set }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionState {
    pub setmode: bool,
    pub dselect: u8,
    pub diceval: u8,
    pub set: [u8; 4],
    pub keepon: bool,
    pub btn_ur: bool,
    pub btn_dr: bool,
}

impl Default for SelectionState {
    fn default() -> Self {
        let row = dice_table(0);
        Self {
            setmode: false,
            dselect: 0,
            diceval: row.diceval,
            set: row.set,
            keepon: true,
            btn_ur: false,
            btn_dr: false,
        }
    }
}

impl SelectionState {
    /// Buttons are plain per-tick samples: a held button fires on every tick.
    pub fn update(&mut self, upright: bool, btn_u: bool, btn_d: bool) {
        self.btn_ur = btn_u;
        self.btn_dr = btn_d;
        if !upright {
            self.setmode = false;
            return;
        }
        match (self.btn_ur, self.btn_dr) {
            (true, true) => self.keepon = false,
            (true, false) => {
                self.setmode = true;
                self.dselect = (self.dselect + 1) % 8;
            }
            (false, true) => {
                self.setmode = true;
                self.dselect = (self.dselect + 7) % 8;
            }
            (false, false) => {}
        }
        let row = dice_table(self.dselect);
        self.diceval = row.diceval;
        self.set = row.set;
    }
}

pub fn selection_update(
    state: SelectionState,
    upright: bool,
    btn_u: bool,
    btn_d: bool,
) -> SelectionState {
    let mut next = state;
    next.update(upright, btn_u, btn_d);
    next
}

/// Roll digits: the live set feeds the display, the held set keeps the last
/// fresh roll while the unit is upright.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollDigits {
    /// Last freshly computed roll, 0 before the first one.
    pub out: u8,
    /// Dice size `out` was computed for.
    pub diceval: u8,
    /// `[thou, huns, tens, ones]`
    pub live: [u8; 4],
    pub held: [u8; 4],
}

impl RollDigits {
    /// Panics if `diceval` is 0.
    pub fn update(&mut self, rand: u32, diceval: u8, upright: bool) {
        assert!(diceval != 0, "diceval must be nonzero");
        if !upright {
            let out = (rand % u32::from(diceval)) as u8 + 1;
            self.out = out;
            self.diceval = diceval;
            // units go to the tens position, tens to hundreds, hundreds to thousands
            self.held = [out / 100 % 10, out / 10 % 10, out % 10, BLANK];
        }
        self.live = self.held;
    }

    /// Value shown by the held digits.
    pub fn held_value(&self) -> u32 {
        let [thou, huns, tens, _] = self.held.map(u32::from);
        thou * 100 + huns * 10 + tens
    }
}

pub fn roll_update(state: RollDigits, rand: u32, diceval: u8, upright: bool) -> RollDigits {
    let mut next = state;
    next.update(rand, diceval, upright);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerState {
    /// Drives `onpin`.
    pub onsig: bool,
    /// Drives `led[0]`.
    pub clk5: bool,
}

impl Default for PowerState {
    fn default() -> Self {
        Self {
            onsig: true,
            clk5: false,
        }
    }
}

impl PowerState {
    /// One S5 rising edge. `rstn` is sampled here only; there is no async reset.
    pub fn update(&mut self, keepon: bool, rstn: bool) {
        if !rstn {
            *self = PowerState::default();
        } else if keepon {
            self.onsig = !self.onsig;
            self.clk5 = !self.clk5;
        } else {
            self.onsig = false;
            self.clk5 = false;
        }
    }
}

pub fn keepawake_update(state: PowerState, keepon: bool, rstn: bool) -> PowerState {
    let mut next = state;
    next.update(keepon, rstn);
    next
}

/// Source of 16-bit ADC samples, one per HZ10 tick.
pub trait SampleSource {
    fn next_sample(&mut self) -> u16;
}

/// Initial state of the synthetic ADC generator.
pub const SYNTHETIC_ADC_SEED: u32 = 0x0000_5EED;

/// Reproducible stand-in for the analog front end: the 32-bit LCG
/// `s = 1664525 * s + 1013904223 (mod 2^32)`, sampling the high 16 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticAdc {
    state: u32,
}

impl Default for SyntheticAdc {
    fn default() -> Self {
        Self::new(SYNTHETIC_ADC_SEED)
    }
}

impl SyntheticAdc {
    pub fn new(seed: u32) -> Self {
        Self { state: seed }
    }
}

impl SampleSource for SyntheticAdc {
    fn next_sample(&mut self) -> u16 {
        self.state = self
            .state
            .wrapping_mul(1_664_525)
            .wrapping_add(1_013_904_223);
        (self.state >> 16) as u16
    }
}

/// ADC input as seen by a replay: synthetic until the first explicit sample,
/// then held at the last written value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcFeed {
    Synthetic(SyntheticAdc),
    Held(u16),
}

impl Default for AdcFeed {
    fn default() -> Self {
        AdcFeed::Synthetic(SyntheticAdc::default())
    }
}

impl SampleSource for AdcFeed {
    fn next_sample(&mut self) -> u16 {
        match self {
            AdcFeed::Synthetic(lcg) => lcg.next_sample(),
            AdcFeed::Held(v) => *v,
        }
    }
}

/// Raw switch levels at the time of a tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLevels {
    pub tilt: bool,
    pub btn_u: bool,
    pub btn_d: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub prng_mode: PrngMode,
    pub tilt_mode: TiltMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DeviceError {
    #[error("tick at sysclk {got} arrived after sysclk {last}")]
    OutOfOrderTick { last: u64, got: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceOutputs {
    pub onpin: bool,
    /// Mirrors the raw tilt input.
    pub led1: bool,
    /// Mirrors `clk5`.
    pub led0: bool,
    /// Mirrors `upright`; the colon is lit (active-low) when this is false.
    pub dp: bool,
    pub bcd: BcdWord,
    pub frame: DisplayFrame,
    pub tx: bool,
    pub uart_valid: bool,
    /// Byte whose frame completed on this tick.
    pub uart_byte: Option<u8>,
}

/// Serializable view of the whole device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSnapshot {
    pub rstn: bool,
    pub seed: u32,
    pub rand_reg: u32,
    pub tilt: TiltState,
    pub selection: SelectionState,
    pub roll: RollDigits,
    pub power: PowerState,
    pub uart_ready: bool,
    pub bcd: BcdWord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    config: DeviceConfig,
    rstn: bool,
    seed: SeedRegister,
    prng: PrngState,
    /// Sysclk index at which `prng.rand_reg` is current (feedback mode).
    prng_at: u64,
    tilt: TiltState,
    selection: SelectionState,
    roll: RollDigits,
    power: PowerState,
    uart_ready: bool,
    uart: UartTxState,
    mux: Multiplexer,
    tilt_input: bool,
    last_index: u64,
}

impl Device {
    /// Power-on: every register at its reset value, reset released.
    pub fn new(config: DeviceConfig) -> Self {
        let mut mux = Multiplexer::new();
        mux.release();
        Self {
            config,
            rstn: true,
            seed: SeedRegister::default(),
            prng: PrngState::new(config.prng_mode),
            prng_at: 0,
            tilt: TiltState::default(),
            selection: SelectionState::default(),
            roll: RollDigits::default(),
            power: PowerState::default(),
            uart_ready: false,
            uart: UartTxState::new(),
            mux,
            tilt_input: false,
            last_index: 0,
        }
    }

    pub fn config(&self) -> DeviceConfig {
        self.config
    }

    /// Drive the active-low reset line. While asserted every register with an
    /// asynchronous reset is held at its reset value.
    pub fn set_reset(&mut self, asserted: bool) {
        if asserted {
            self.seed = SeedRegister::default();
            self.prng.clear();
            self.tilt = TiltState::default();
            self.selection = SelectionState::default();
            self.roll = RollDigits::default();
            self.uart_ready = false;
            self.uart.reset();
            self.mux.reset();
        } else if !self.rstn {
            self.mux.release();
        }
        self.rstn = !asserted;
    }

    pub fn in_reset(&self) -> bool {
        !self.rstn
    }

    pub fn upright(&self) -> bool {
        self.tilt.upright
    }

    pub fn tilt(&self) -> &TiltState {
        &self.tilt
    }

    pub fn selection(&self) -> &SelectionState {
        &self.selection
    }

    pub fn roll(&self) -> &RollDigits {
        &self.roll
    }

    pub fn power(&self) -> &PowerState {
        &self.power
    }

    pub fn seed(&self) -> SeedRegister {
        self.seed
    }

    /// `rand` as of sysclk edge `sysclk_index`.
    pub fn rand_at(&mut self, sysclk_index: u64) -> u32 {
        if !self.rstn {
            return xorshift_step(0);
        }
        match self.config.prng_mode {
            PrngMode::Stateless => xorshift_step(self.seed.value()),
            PrngMode::Feedback => {
                if !self.prng.is_seeded() {
                    return 0;
                }
                self.prng.jump(sysclk_index.saturating_sub(self.prng_at));
                self.prng_at = self.prng_at.max(sysclk_index);
                self.prng.rand_reg()
            }
        }
    }

    /// The word the display logic currently selects.
    pub fn bcd(&self) -> BcdWord {
        bcd_select(self.selection.setmode, self.selection.set, self.roll.live)
    }

    pub fn outputs(&self) -> DeviceOutputs {
        DeviceOutputs {
            onpin: self.power.onsig,
            led1: self.tilt_input,
            led0: self.power.clk5,
            dp: self.tilt.upright,
            bcd: self.bcd(),
            frame: self.mux.frame(),
            tx: self.uart.tx_level,
            uart_valid: self.uart.ap_valid,
            uart_byte: None,
        }
    }

    pub fn snapshot(&self) -> DeviceSnapshot {
        DeviceSnapshot {
            rstn: self.rstn,
            seed: self.seed.value(),
            rand_reg: self.prng.rand_reg(),
            tilt: self.tilt,
            selection: self.selection,
            roll: self.roll,
            power: self.power,
            uart_ready: self.uart_ready,
            bcd: self.bcd(),
        }
    }

    /// Apply one clock tick with the given input levels.
    pub fn step(
        &mut self,
        tick: TickEvent,
        inputs: &InputLevels,
        adc: &mut impl SampleSource,
    ) -> Result<DeviceOutputs, DeviceError> {
        if tick.sysclk_index < self.last_index {
            return Err(DeviceError::OutOfOrderTick {
                last: self.last_index,
                got: tick.sysclk_index,
            });
        }
        self.last_index = tick.sysclk_index;
        self.tilt_input = inputs.tilt;
        let mut uart_byte = None;

        if tick.is_rising(Domain::S5) {
            self.power.update(self.selection.keepon, self.rstn);
        }
        if self.rstn {
            match tick.domain {
                Domain::Hz10 if tick.is_rising(Domain::Hz10) => {
                    self.on_hz10(tick.sysclk_index, inputs, adc)
                }
                Domain::Hz1000 if tick.is_rising(Domain::Hz1000) => {
                    let data = payload_pack(self.roll.live[1], self.roll.live[2]);
                    let out = self.uart.step(self.uart_ready, data);
                    self.uart_ready = uart_ready_gate(self.uart_ready, self.rstn);
                    uart_byte = out.completed;
                }
                Domain::Hz500 if tick.is_rising(Domain::Hz500) => {
                    let bcd = self.bcd();
                    self.mux.step(bcd, self.tilt.upright);
                }
                _ => {}
            }
        }

        let mut out = self.outputs();
        out.uart_byte = uart_byte;
        Ok(out)
    }

    fn on_hz10(&mut self, index: u64, inputs: &InputLevels, adc: &mut impl SampleSource) {
        let rand = self.rand_at(index);
        self.seed = self.seed.shift(adc.next_sample());
        if self.prng.adopt_seed(self.seed) {
            self.prng_at = index;
        }
        self.tilt.update(inputs.tilt, self.config.tilt_mode);
        let upright = self.tilt.upright;
        self.selection.update(upright, inputs.btn_u, inputs.btn_d);
        self.roll.update(rand, self.selection.diceval, upright);
    }
}
