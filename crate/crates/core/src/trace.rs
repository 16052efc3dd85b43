//! Timed stimulus scripts, replay through the device, and the run log.
//!
//! A trace is plain text, one event per line:
//!
//! ```text
//! # t_us SIGNAL value
//! 0      RESET  1
//! 100    RESET  0
//! 100    TILT   1
//! 2000000 ADC   0x1234
//! ```
//!
//! Signals are `TILT`, `BTNU`, `BTND`, `RESET` (1 asserts reset) and `ADC`
//! (16-bit sample). Timestamps must be non-decreasing; events at the same
//! time apply in file order. An event at `t` is visible to every sysclk edge
//! after `t * 12`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{
    AdcFeed, Device, DeviceConfig, DeviceOutputs, DeviceSnapshot, InputLevels, TiltMode,
};
use crate::display::{render_word, BcdWord};
use crate::prng::PrngMode;
use crate::timing::{Domain, Scheduler, TickEvent, CYCLES_PER_US};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    Tilt,
    BtnU,
    BtnD,
    Reset,
    Adc,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::Tilt => "TILT",
            Signal::BtnU => "BTNU",
            Signal::BtnD => "BTND",
            Signal::Reset => "RESET",
            Signal::Adc => "ADC",
        }
    }
}

impl FromStr for Signal {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TILT" => Ok(Signal::Tilt),
            "BTNU" => Ok(Signal::BtnU),
            "BTND" => Ok(Signal::BtnD),
            "RESET" => Ok(Signal::Reset),
            "ADC" => Ok(Signal::Adc),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_us: u64,
    pub signal: Signal,
    pub value: u16,
}

impl TraceEvent {
    pub fn new(t_us: u64, signal: Signal, value: u16) -> Self {
        Self {
            t_us,
            signal,
            value,
        }
    }
}

/// Write events back out in the trace text format.
pub fn format_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        let _ = writeln!(out, "{} {} {}", ev.t_us, ev.signal.name(), ev.value);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Time,
    Signal,
    Value,
    Line,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Field::Time => "t_us",
            Field::Signal => "signal",
            Field::Value => "value",
            Field::Line => "line",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {field}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: Field,
    pub message: String,
}

fn parse_number(text: &str) -> Option<u64> {
    match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => text.parse().ok(),
    }
}

/// Parse and validate a trace.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, ParseError> {
    let mut events: Vec<TraceEvent> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |field, message: String| ParseError {
            line,
            field,
            message,
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                Field::Line,
                format!(
                    "expected `<t_us> <SIGNAL> <value>`, got {} fields",
                    fields.len()
                ),
            ));
        }
        let t_us: u64 = fields[0].parse().map_err(|_| {
            err(
                Field::Time,
                format!("`{}` is not a non-negative integer", fields[0]),
            )
        })?;
        let signal: Signal = fields[1].parse().map_err(|_| {
            err(
                Field::Signal,
                format!(
                    "unknown signal `{}` (expected TILT, BTNU, BTND, RESET or ADC)",
                    fields[1]
                ),
            )
        })?;
        let value = parse_number(fields[2])
            .ok_or_else(|| err(Field::Value, format!("`{}` is not a number", fields[2])))?;
        let max = if signal == Signal::Adc { 0xFFFF } else { 1 };
        if value > max {
            return Err(err(
                Field::Value,
                format!("{value} out of range 0..={max} for {}", signal.name()),
            ));
        }
        if let Some(prev) = events.last() {
            if t_us < prev.t_us {
                return Err(err(
                    Field::Time,
                    format!("timestamp {t_us} is earlier than previous {}", prev.t_us),
                ));
            }
        }
        events.push(TraceEvent::new(t_us, signal, value as u16));
    }
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub prng_mode: PrngMode,
    pub tilt_mode: TiltMode,
    pub duration_us: u64,
}

impl ReplayConfig {
    pub fn new(duration_us: u64) -> Self {
        Self {
            prng_mode: PrngMode::Stateless,
            tilt_mode: TiltMode::Faithful,
            duration_us,
        }
    }

    pub fn with_prng(mut self, mode: PrngMode) -> Self {
        self.prng_mode = mode;
        self
    }

    pub fn with_tilt(mut self, mode: TiltMode) -> Self {
        self.tilt_mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("duration {duration_us} us ends before the last event at {last_us} us")]
    DurationTooShort { duration_us: u64, last_us: u64 },
    #[error("events out of order at index {index}")]
    Unsorted { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettledRoll {
    pub t_us: u64,
    pub diceval: u8,
    pub out: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UartByte {
    pub t_us: u64,
    pub byte: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordChange {
    pub t_us: u64,
    pub word: BcdWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelChange {
    pub t_us: u64,
    pub level: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalState {
    pub t_us: u64,
    pub device: DeviceSnapshot,
}

/// Everything observable from one replay.
///
/// The level lists (`display_words`, `onpin_edges`, `dp_edges`, `uart_wave`)
/// open with the level at t = 0 and then hold one entry per change.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub settled_rolls: Vec<SettledRoll>,
    pub uart_bytes: Vec<UartByte>,
    pub display_words: Vec<WordChange>,
    pub onpin_edges: Vec<LevelChange>,
    pub dp_edges: Vec<LevelChange>,
    pub uart_wave: Vec<LevelChange>,
    pub final_state: Option<FinalState>,
}

struct Recorder {
    log: RunLog,
    prev: DeviceOutputs,
    /// A zero tilt sample was seen since reset or the last upright acquisition.
    disturbed: bool,
}

impl Recorder {
    fn new(initial: DeviceOutputs) -> Self {
        let log = RunLog {
            display_words: vec![WordChange {
                t_us: 0,
                word: initial.bcd,
            }],
            onpin_edges: vec![LevelChange {
                t_us: 0,
                level: initial.onpin,
            }],
            dp_edges: vec![LevelChange {
                t_us: 0,
                level: initial.dp,
            }],
            uart_wave: vec![LevelChange {
                t_us: 0,
                level: initial.tx,
            }],
            ..Default::default()
        };
        Self {
            log,
            prev: initial,
            disturbed: false,
        }
    }

    fn observe(&mut self, t_us: u64, outs: &DeviceOutputs, device: &Device) {
        if outs.bcd != self.prev.bcd {
            self.log.display_words.push(WordChange {
                t_us,
                word: outs.bcd,
            });
        }
        if outs.onpin != self.prev.onpin {
            self.log.onpin_edges.push(LevelChange {
                t_us,
                level: outs.onpin,
            });
        }
        if outs.tx != self.prev.tx {
            self.log.uart_wave.push(LevelChange {
                t_us,
                level: outs.tx,
            });
        }
        if outs.dp != self.prev.dp {
            self.log.dp_edges.push(LevelChange {
                t_us,
                level: outs.dp,
            });
            if outs.dp {
                if self.disturbed {
                    let roll = device.roll();
                    self.log.settled_rolls.push(SettledRoll {
                        t_us,
                        diceval: roll.diceval,
                        out: roll.held_value(),
                    });
                }
                self.disturbed = false;
            }
        }
        if let Some(byte) = outs.uart_byte {
            self.log.uart_bytes.push(UartByte { t_us, byte });
        }
        self.prev = *outs;
    }
}

struct Replayer {
    sched: Scheduler,
    device: Device,
    levels: InputLevels,
    adc: AdcFeed,
    rec: Recorder,
}

impl Replayer {
    fn new(config: &ReplayConfig) -> Self {
        let device = Device::new(DeviceConfig {
            prng_mode: config.prng_mode,
            tilt_mode: config.tilt_mode,
        });
        let rec = Recorder::new(device.outputs());
        Self {
            sched: Scheduler::new(),
            device,
            levels: InputLevels::default(),
            adc: AdcFeed::default(),
            rec,
        }
    }

    fn run_until(&mut self, target: u64) {
        if self.device.in_reset() {
            let n = target.saturating_sub(self.sched.now());
            self.sched.idle(n);
            return;
        }
        let Self {
            sched,
            device,
            levels,
            adc,
            rec,
        } = self;
        sched.advance_to_with(target, |tick: TickEvent| {
            let outs = device
                .step(tick, levels, adc)
                .expect("scheduler emits ticks in order");
            if tick.is_rising(Domain::Hz10) && !levels.tilt {
                rec.disturbed = true;
            }
            rec.observe(tick.t_us(), &outs, device);
        });
    }

    fn apply(&mut self, ev: &TraceEvent) {
        let on = ev.value != 0;
        match ev.signal {
            Signal::Tilt => self.levels.tilt = on,
            Signal::BtnU => self.levels.btn_u = on,
            Signal::BtnD => self.levels.btn_d = on,
            Signal::Adc => self.adc = AdcFeed::Held(ev.value),
            Signal::Reset => {
                if on != self.device.in_reset() {
                    self.device.set_reset(on);
                    self.sched.reset();
                    self.rec.disturbed = false;
                }
            }
        }
        let mut outs = self.device.outputs();
        outs.led1 = self.levels.tilt;
        self.rec.observe(ev.t_us, &outs, &self.device);
    }
}

/// Replay `events` through a freshly powered device.
pub fn replay(events: &[TraceEvent], config: &ReplayConfig) -> Result<RunLog, ReplayError> {
    if let Some(index) = events.windows(2).position(|w| w[1].t_us < w[0].t_us) {
        return Err(ReplayError::Unsorted { index: index + 1 });
    }
    if let Some(last) = events.last() {
        if config.duration_us < last.t_us {
            return Err(ReplayError::DurationTooShort {
                duration_us: config.duration_us,
                last_us: last.t_us,
            });
        }
    }
    let mut r = Replayer::new(config);
    for ev in events {
        r.run_until(ev.t_us * CYCLES_PER_US);
        r.apply(ev);
    }
    r.run_until(config.duration_us * CYCLES_PER_US);
    let mut log = r.rec.log;
    log.final_state = Some(FinalState {
        t_us: config.duration_us,
        device: r.device.snapshot(),
    });
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" => Ok(LogFormat::Jsonl),
            other => Err(format!("unknown log format `{other}` (expected csv|jsonl)")),
        }
    }
}

/// One line of the run log, shared by both output formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record")]
pub enum Record {
    #[serde(rename = "WORD")]
    Word {
        t_us: u64,
        word: String,
        text: String,
    },
    #[serde(rename = "DP")]
    Dp { t_us: u64, level: u8 },
    #[serde(rename = "ROLL")]
    Roll { t_us: u64, diceval: u8, out: u32 },
    #[serde(rename = "UART")]
    Uart { t_us: u64, byte: String },
    #[serde(rename = "ONPIN")]
    Onpin { t_us: u64, level: u8 },
    #[serde(rename = "FINAL")]
    Final {
        t_us: u64,
        diceval: u8,
        out: u32,
        dselect: u8,
        setmode: u8,
        upright: u8,
        keepon: u8,
        onsig: u8,
        seed: String,
        rand_reg: String,
        word: String,
    },
}

impl Record {
    pub fn t_us(&self) -> u64 {
        match self {
            Record::Word { t_us, .. }
            | Record::Dp { t_us, .. }
            | Record::Roll { t_us, .. }
            | Record::Uart { t_us, .. }
            | Record::Onpin { t_us, .. }
            | Record::Final { t_us, .. } => *t_us,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Record::Word { .. } => "WORD",
            Record::Dp { .. } => "DP",
            Record::Roll { .. } => "ROLL",
            Record::Uart { .. } => "UART",
            Record::Onpin { .. } => "ONPIN",
            Record::Final { .. } => "FINAL",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Record::Word { .. } => 0,
            Record::Dp { .. } => 1,
            Record::Roll { .. } => 2,
            Record::Uart { .. } => 3,
            Record::Onpin { .. } => 4,
            Record::Final { .. } => 5,
        }
    }

    /// CSV columns after `record,t_us`: `diceval,out,value`.
    fn csv_tail(&self) -> String {
        match self {
            Record::Word { word, text, .. } => format!(",,{word}:{text}"),
            Record::Dp { level, .. } | Record::Onpin { level, .. } => format!(",,{level}"),
            Record::Roll { diceval, out, .. } => format!("{diceval},{out},"),
            Record::Uart { byte, .. } => format!(",,{byte}"),
            Record::Final {
                diceval,
                out,
                dselect,
                setmode,
                upright,
                keepon,
                onsig,
                seed,
                rand_reg,
                word,
                ..
            } => format!(
                "{diceval},{out},dselect={dselect};setmode={setmode};upright={upright};\
                 keepon={keepon};onsig={onsig};seed={seed};rand_reg={rand_reg};word={word}"
            ),
        }
    }
}

fn hex_word(w: BcdWord) -> String {
    format!("{:04X}", w.0)
}

/// All records of a log in time order (ties by record kind, then insertion).
pub fn records(log: &RunLog) -> Vec<Record> {
    let mut recs = Vec::new();
    for w in &log.display_words {
        recs.push(Record::Word {
            t_us: w.t_us,
            word: hex_word(w.word),
            text: render_word(w.word),
        });
    }
    for e in &log.dp_edges {
        recs.push(Record::Dp {
            t_us: e.t_us,
            level: u8::from(e.level),
        });
    }
    for r in &log.settled_rolls {
        recs.push(Record::Roll {
            t_us: r.t_us,
            diceval: r.diceval,
            out: r.out,
        });
    }
    for b in &log.uart_bytes {
        recs.push(Record::Uart {
            t_us: b.t_us,
            byte: format!("{:02X}", b.byte),
        });
    }
    for e in &log.onpin_edges {
        recs.push(Record::Onpin {
            t_us: e.t_us,
            level: u8::from(e.level),
        });
    }
    if let Some(f) = &log.final_state {
        let d = &f.device;
        recs.push(Record::Final {
            t_us: f.t_us,
            diceval: d.selection.diceval,
            out: d.roll.held_value(),
            dselect: d.selection.dselect,
            setmode: u8::from(d.selection.setmode),
            upright: u8::from(d.tilt.upright),
            keepon: u8::from(d.selection.keepon),
            onsig: u8::from(d.power.onsig),
            seed: format!("{:08X}", d.seed),
            rand_reg: format!("{:08X}", d.rand_reg),
            word: hex_word(d.bcd),
        });
    }
    recs.sort_by_key(|r| (r.t_us(), r.rank()));
    recs
}

pub const LOG_CSV_HEADER: &str = "record,t_us,diceval,out,value";

/// Render the run log. Every line, including the last, ends in `\n`.
pub fn emit_log(log: &RunLog, format: LogFormat) -> String {
    let mut out = String::new();
    match format {
        LogFormat::Csv => {
            out.push_str(LOG_CSV_HEADER);
            out.push('\n');
            for r in records(log) {
                let _ = writeln!(out, "{},{},{}", r.kind(), r.t_us(), r.csv_tail());
            }
        }
        LogFormat::Jsonl => {
            for r in records(log) {
                out.push_str(&serde_json::to_string(&r).expect("records serialize"));
                out.push('\n');
            }
        }
    }
    out
}

/// UART byte log: `t_us,byte_hex`.
pub fn emit_uart_log(log: &RunLog) -> String {
    let mut out = String::from("t_us,byte_hex\n");
    for b in &log.uart_bytes {
        let _ = writeln!(out, "{},{:02X}", b.t_us, b.byte);
    }
    out
}

/// Transmit line waveform: `t_us,level`, one row per change.
pub fn emit_waveform(log: &RunLog) -> String {
    let mut out = String::from("t_us,level\n");
    for e in &log.uart_wave {
        let _ = writeln!(out, "{},{}", e.t_us, u8::from(e.level));
    }
    out
}

/// Sample a level-change list once per bit period, starting at `start_us`.
pub fn sample_levels(
    changes: &[LevelChange],
    start_us: u64,
    period_us: u64,
    count: usize,
) -> Vec<bool> {
    let mut bits = Vec::with_capacity(count);
    let mut idx = 0;
    let mut level = true;
    for k in 0..count as u64 {
        let t = start_us + k * period_us;
        while idx < changes.len() && changes[idx].t_us <= t {
            level = changes[idx].level;
            idx += 1;
        }
        bits.push(level);
    }
    bits
}
