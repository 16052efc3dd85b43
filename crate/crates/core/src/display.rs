//! Digit selection, zero blanking and the 4-digit seven-segment multiplexer.
//!
//! Digit codes are 4-bit: `0..=9` numerals, [`LETTER_D`] for a lowercase "d"
//! and [`BLANK`] for an unlit position. Segment and anode drives are
//! active-low (common-anode display).

use std::fmt;

use serde::{Deserialize, Serialize};

pub const LETTER_D: u8 = 0xD;
pub const BLANK: u8 = 0xF;

/// Four digit codes packed thousands-first: `[15:12]` thou, `[11:8]` huns,
/// `[7:4]` tens, `[3:0]` ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BcdWord(pub u16);

impl BcdWord {
    pub const DDDD: BcdWord = BcdWord(0xDDDD);

    /// Pack `[thou, huns, tens, ones]`; each code is truncated to 4 bits.
    pub fn from_digits(digits: [u8; 4]) -> Self {
        let [t, h, te, o] = digits.map(|d| u16::from(d & 0xF));
        BcdWord((t << 12) | (h << 8) | (te << 4) | o)
    }

    /// `[thou, huns, tens, ones]`.
    pub fn digits(self) -> [u8; 4] {
        let w = self.0;
        [
            (w >> 12) as u8 & 0xF,
            (w >> 8) as u8 & 0xF,
            (w >> 4) as u8 & 0xF,
            w as u8 & 0xF,
        ]
    }

    /// Code at logical position 0 (thou) ..= 3 (ones).
    pub fn digit(self, position: usize) -> u8 {
        self.digits()[position]
    }
}

impl fmt::Display for BcdWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_word(*self))
    }
}

/// Choose what the display shows.
///
/// In set mode the set digits pass straight through. Otherwise leading zeros
/// are blanked in cascade from the thousands position, and a zero in the ones
/// position is blanked on its own.
pub fn bcd_select(setmode: bool, set: [u8; 4], rand: [u8; 4]) -> BcdWord {
    if setmode {
        return BcdWord::from_digits(set);
    }
    let [thou, huns, tens, ones] = rand;
    let thou_bcd = if thou == 0 { BLANK } else { thou };
    let huns_bcd = if huns == 0 && thou == 0 { BLANK } else { huns };
    let tens_bcd = if tens == 0 && huns == 0 && thou == 0 {
        BLANK
    } else {
        tens
    };
    let ones_bcd = if ones == 0 { BLANK } else { ones };
    BcdWord::from_digits([thou_bcd, huns_bcd, tens_bcd, ones_bcd])
}

/// Active-low segment pattern, bit 6 = g down to bit 0 = a.
pub fn glyph(code: u8) -> u8 {
    match code & 0xF {
        0x0 => 0x40,
        0x1 => 0x79,
        0x2 => 0x24,
        0x3 => 0x30,
        0x4 => 0x19,
        0x5 => 0x12,
        0x6 => 0x02,
        0x7 => 0x78,
        0x8 => 0x00,
        0x9 => 0x10,
        0xD => 0x21,
        _ => 0x7F,
    }
}

/// Text form for logs: numerals as digits, `0xD` as `d`, anything else as a space.
pub fn render_word(bcd: BcdWord) -> String {
    bcd.digits()
        .iter()
        .map(|&c| match c {
            0..=9 => char::from(b'0' + c),
            LETTER_D => 'd',
            _ => ' ',
        })
        .collect()
}

/// One multiplexing step of the physical display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayFrame {
    /// Logical digit being driven, 0 = thousands.
    pub active_digit: u8,
    /// Active-low, bit order gfedcba.
    pub segment_bits: u8,
    /// Decimal point / colon drive, active-low (lit when false).
    pub dp_bit: bool,
    /// Physical `an[3:0]`, exactly one bit low.
    pub anode_bits: u8,
}

/// Physical anode line for a logical digit. The display is wired reversed:
/// thousands lands on `an[3]`, ones on `an[0]`.
pub fn anode_for(active_digit: u8) -> u8 {
    !(1u8 << (3 - active_digit)) & 0xF
}

/// The scan register and the reset latch of the segment driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplexer {
    an_r: u8,
    in_reset: bool,
    frame: DisplayFrame,
}

impl Default for Multiplexer {
    fn default() -> Self {
        Self::new()
    }
}

impl Multiplexer {
    /// Power-on state, identical to the reset state.
    pub fn new() -> Self {
        let mut m = Self {
            an_r: 0,
            in_reset: true,
            frame: DisplayFrame {
                active_digit: 0,
                segment_bits: glyph(LETTER_D),
                dp_bit: false,
                anode_bits: anode_for(0),
            },
        };
        m.reset();
        m
    }

    /// Assert reset: the scan restarts and every position shows "d".
    pub fn reset(&mut self) {
        self.an_r = 0;
        self.in_reset = true;
        self.frame = DisplayFrame {
            active_digit: 0,
            segment_bits: glyph(LETTER_D),
            dp_bit: false,
            anode_bits: anode_for(0),
        };
    }

    /// Release reset; subsequent steps show the real word.
    pub fn release(&mut self) {
        self.in_reset = false;
    }

    pub fn frame(&self) -> DisplayFrame {
        self.frame
    }

    /// Drive the current position, then move the scan on by one.
    pub fn step(&mut self, bcd: BcdWord, upright: bool) -> DisplayFrame {
        let word = if self.in_reset { BcdWord::DDDD } else { bcd };
        let digit = self.an_r;
        self.frame = DisplayFrame {
            active_digit: digit,
            segment_bits: glyph(word.digit(digit as usize)),
            dp_bit: upright,
            anode_bits: anode_for(digit),
        };
        self.an_r = (self.an_r + 1) % 4;
        self.frame
    }
}

/// Free-function form of [`Multiplexer::step`].
pub fn mux_step(mux: &mut Multiplexer, bcd: BcdWord, upright: bool) -> DisplayFrame {
    mux.step(bcd, upright)
}
