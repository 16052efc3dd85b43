//! Seed accumulation and the (7, 9, 13) xorshift transform.
//!
//! Two ways of producing `rand` are supported. [`PrngMode::Stateless`]
//! recomputes `rand` from the seed register on every sysclk edge, so the
//! output only moves when a new ADC sample is shifted in. [`PrngMode::Feedback`]
//! keeps the previous output in `rand_reg` and iterates the transform on it,
//! which gives a proper xorshift trajectory.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 32-bit seed accumulator fed with 16-bit ADC samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRegister(pub u32);

impl SeedRegister {
    pub fn value(self) -> u32 {
        self.0
    }

    /// Old low half moves up, the new sample becomes the low half.
    pub fn shift(self, adc: u16) -> Self {
        SeedRegister((self.0 << 16) | u32::from(adc))
    }
}

/// Free-function form of [`SeedRegister::shift`].
pub fn seed_shift(seed: SeedRegister, adc: u16) -> SeedRegister {
    seed.shift(adc)
}

/// One application of the transform: `x ^= x >> 7; x ^= x << 9; x ^= x >> 13`.
pub const fn xorshift_step(x: u32) -> u32 {
    let t1 = x ^ (x >> 7);
    let t2 = t1 ^ (t1 << 9);
    t2 ^ (t2 >> 13)
}

const fn undo_right(y: u32, k: u32) -> u32 {
    // x = y ^ (x >> k); every pass fixes k more high bits.
    let mut x = y;
    let mut fixed = k;
    while fixed < 32 {
        x = y ^ (x >> k);
        fixed += k;
    }
    x
}

const fn undo_left(y: u32, k: u32) -> u32 {
    let mut x = y;
    let mut fixed = k;
    while fixed < 32 {
        x = y ^ (x << k);
        fixed += k;
    }
    x
}

/// Inverse of [`xorshift_step`].
pub const fn xorshift_inverse(y: u32) -> u32 {
    let t2 = undo_right(y, 13);
    let t1 = undo_left(t2, 9);
    undo_right(t1, 7)
}

/// A 32x32 matrix over GF(2), stored by column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2Matrix([u32; 32]);

impl Gf2Matrix {
    pub fn identity() -> Self {
        let mut cols = [0u32; 32];
        for (j, col) in cols.iter_mut().enumerate() {
            *col = 1 << j;
        }
        Gf2Matrix(cols)
    }

    /// Matrix of a linear map, built from its action on the basis vectors.
    pub fn from_linear(f: impl Fn(u32) -> u32) -> Self {
        let mut cols = [0u32; 32];
        for (j, col) in cols.iter_mut().enumerate() {
            *col = f(1 << j);
        }
        Gf2Matrix(cols)
    }

    pub fn apply(&self, x: u32) -> u32 {
        let mut acc = 0;
        let mut bits = x;
        while bits != 0 {
            let j = bits.trailing_zeros();
            acc ^= self.0[j as usize];
            bits &= bits - 1;
        }
        acc
    }

    /// `self * rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &Gf2Matrix) -> Gf2Matrix {
        let mut cols = [0u32; 32];
        for (col, r) in cols.iter_mut().zip(rhs.0.iter()) {
            *col = self.apply(*r);
        }
        Gf2Matrix(cols)
    }
}

fn step_powers() -> &'static [Gf2Matrix; 64] {
    static POWERS: OnceLock<[Gf2Matrix; 64]> = OnceLock::new();
    POWERS.get_or_init(|| {
        let mut powers = [Gf2Matrix::identity(); 64];
        powers[0] = Gf2Matrix::from_linear(xorshift_step);
        for i in 1..64 {
            powers[i] = powers[i - 1].compose(&powers[i - 1]);
        }
        powers
    })
}

/// `xorshift_step` applied `n` times, in O(log n) matrix applications.
pub fn xorshift_jump(x: u32, n: u64) -> u32 {
    let powers = step_powers();
    let mut acc = x;
    let mut rest = n;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        acc = powers[i].apply(acc);
        rest &= rest - 1;
    }
    acc
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrngMode {
    /// `rand = xorshift_step(seed)` on every edge.
    #[default]
    Stateless,
    /// `rand_reg = xorshift_step(rand_reg)` on every edge.
    Feedback,
}

impl std::str::FromStr for PrngMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stateless" => Ok(PrngMode::Stateless),
            "feedback" => Ok(PrngMode::Feedback),
            other => Err(format!(
                "unknown prng mode `{other}` (expected stateless|feedback)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PrngError {
    /// Zero is a fixed point: a feedback generator holding 0 outputs 0 forever.
    #[error("degenerate seed: feedback register is zero")]
    DegenerateSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrngState {
    mode: PrngMode,
    rand_reg: u32,
}

impl PrngState {
    pub fn stateless() -> Self {
        Self {
            mode: PrngMode::Stateless,
            rand_reg: 0,
        }
    }

    /// Feedback generator with an explicit, nonzero starting register.
    pub fn feedback(seed: u32) -> Result<Self, PrngError> {
        if seed == 0 {
            return Err(PrngError::DegenerateSeed);
        }
        Ok(Self {
            mode: PrngMode::Feedback,
            rand_reg: seed,
        })
    }

    /// Feedback generator waiting for [`PrngState::adopt_seed`].
    pub fn feedback_unseeded() -> Self {
        Self {
            mode: PrngMode::Feedback,
            rand_reg: 0,
        }
    }

    pub fn new(mode: PrngMode) -> Self {
        match mode {
            PrngMode::Stateless => Self::stateless(),
            PrngMode::Feedback => Self::feedback_unseeded(),
        }
    }

    pub fn mode(&self) -> PrngMode {
        self.mode
    }

    pub fn rand_reg(&self) -> u32 {
        self.rand_reg
    }

    pub fn is_seeded(&self) -> bool {
        self.mode == PrngMode::Stateless || self.rand_reg != 0
    }

    /// In feedback mode, take `seed` as the starting register if none has been
    /// set yet and `seed` is nonzero. Returns whether the seed was adopted.
    pub fn adopt_seed(&mut self, seed: SeedRegister) -> bool {
        if self.mode == PrngMode::Feedback && self.rand_reg == 0 && seed.0 != 0 {
            self.rand_reg = seed.0;
            true
        } else {
            false
        }
    }

    /// Produce the next raw word.
    pub fn next_rand(&mut self, seed: SeedRegister) -> Result<u32, PrngError> {
        match self.mode {
            PrngMode::Stateless => Ok(xorshift_step(seed.0)),
            PrngMode::Feedback => {
                if self.rand_reg == 0 {
                    return Err(PrngError::DegenerateSeed);
                }
                self.rand_reg = xorshift_step(self.rand_reg);
                Ok(self.rand_reg)
            }
        }
    }

    /// Advance a feedback register by `n` steps at once. No-op when stateless.
    pub fn jump(&mut self, n: u64) {
        if self.mode == PrngMode::Feedback {
            self.rand_reg = xorshift_jump(self.rand_reg, n);
        }
    }

    /// Feedback register back to the unseeded state.
    pub fn clear(&mut self) {
        self.rand_reg = 0;
    }
}
