//! 8N1 serial transmitter clocked by the 1 kHz domain, plus a bit-stream
//! decoder and the dice payload packer.
//!
//! One bit is emitted per HZ1000 rising edge, LSB first, so the line runs
//! at 1000 baud. Parity is not generated.

use serde::{Deserialize, Serialize};

/// Bits per frame: start, eight data bits, stop.
pub const FRAME_BITS: usize = 10;

/// `{huns_rand, tens_rand}`: the tens and units of a roll in one byte.
pub fn payload_pack(huns: u8, tens: u8) -> u8 {
    ((huns & 0xF) << 4) | (tens & 0xF)
}

/// Line levels of a whole frame, start bit first.
pub fn encode_frame(byte: u8) -> [bool; FRAME_BITS] {
    let mut bits = [true; FRAME_BITS];
    bits[0] = false;
    for i in 0..8 {
        bits[1 + i] = byte >> i & 1 == 1;
    }
    bits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxFsm {
    Idle,
    Start,
    Transfer,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UartTxState {
    pub fsm: TxFsm,
    /// Next data bit to send while in `Transfer`.
    pub bit_index: u8,
    pub shift_data: u8,
    pub ap_valid: bool,
    pub tx_level: bool,
}

impl Default for UartTxState {
    fn default() -> Self {
        Self::new()
    }
}

/// What one clock edge did to the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxOutput {
    pub tx: bool,
    pub ap_valid: bool,
    /// The byte whose stop bit went out on this edge.
    pub completed: Option<u8>,
}

impl UartTxState {
    /// Reset state: idle, line high.
    pub fn new() -> Self {
        Self {
            fsm: TxFsm::Idle,
            bit_index: 0,
            shift_data: 0,
            ap_valid: false,
            tx_level: true,
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new();
    }

    /// One HZ1000 rising edge. `data` is only sampled when leaving `Idle`.
    pub fn step(&mut self, ap_ready: bool, data: u8) -> TxOutput {
        let mut completed = None;
        self.ap_valid = false;
        match self.fsm {
            TxFsm::Idle => {
                if ap_ready {
                    self.shift_data = data;
                    self.bit_index = 0;
                    self.fsm = TxFsm::Start;
                    self.tx_level = false;
                } else {
                    self.tx_level = true;
                }
            }
            TxFsm::Start => {
                self.tx_level = self.shift_data & 1 == 1;
                self.bit_index = 1;
                self.fsm = TxFsm::Transfer;
            }
            TxFsm::Transfer => {
                self.tx_level = self.shift_data >> self.bit_index & 1 == 1;
                if self.bit_index == 7 {
                    self.fsm = TxFsm::Stop;
                } else {
                    self.bit_index += 1;
                }
            }
            TxFsm::Stop => {
                self.tx_level = true;
                self.ap_valid = true;
                self.fsm = TxFsm::Idle;
                completed = Some(self.shift_data);
            }
        }
        TxOutput {
            tx: self.tx_level,
            ap_valid: self.ap_valid,
            completed,
        }
    }
}

/// Free-function form of [`UartTxState::step`].
pub fn tx_step(state: &mut UartTxState, ap_ready: bool, data: u8) -> TxOutput {
    state.step(ap_ready, data)
}

/// Message-rate gate: toggles on every HZ1000 rising edge, held low in reset.
pub fn uart_ready_gate(prev: bool, rstn: bool) -> bool {
    rstn && !prev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedFrame {
    /// Bit offset of the start bit.
    pub offset: usize,
    pub byte: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnostic {
    /// The stop-bit position of the frame starting at `offset` was low.
    Framing { offset: usize },
    /// A start bit at `offset` with fewer than ten bits left in the stream.
    Truncated { offset: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub frames: Vec<DecodedFrame>,
    pub diagnostics: Vec<Diagnostic>,
}

impl DecodeResult {
    pub fn bytes(&self) -> Vec<u8> {
        self.frames.iter().map(|f| f.byte).collect()
    }
}

/// Decode a line sampled once per bit period.
///
/// After a framing error the decoder waits for the line to return high
/// before hunting for the next start bit.
pub fn decode_stream(bits: &[bool]) -> DecodeResult {
    let mut result = DecodeResult::default();
    let mut i = 0;
    let mut hunting_idle = false;
    while i < bits.len() {
        if hunting_idle {
            if bits[i] {
                hunting_idle = false;
            }
            i += 1;
            continue;
        }
        if bits[i] {
            i += 1;
            continue;
        }
        if i + FRAME_BITS > bits.len() {
            result.diagnostics.push(Diagnostic::Truncated { offset: i });
            break;
        }
        if bits[i + FRAME_BITS - 1] {
            let byte = (0..8).fold(0u8, |acc, k| acc | (u8::from(bits[i + 1 + k]) << k));
            result.frames.push(DecodedFrame { offset: i, byte });
        } else {
            result.diagnostics.push(Diagnostic::Framing { offset: i });
            hunting_idle = true;
        }
        i += FRAME_BITS;
    }
    result
}
