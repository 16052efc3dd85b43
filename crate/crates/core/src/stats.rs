//! Roll statistics: tallies, Pearson chi-square, and the exact bias of
//! reducing a uniform k-bit word to a d-sided dice with `(w mod d) + 1`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bins used for the histogram of raw 32-bit outputs.
pub const RAW_BINS: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("roll {value} at index {index} is outside 1..={sides}")]
    OutOfRange {
        index: usize,
        value: u64,
        sides: u32,
    },
    #[error("histogram is empty")]
    Empty,
    #[error(
        "{total} rolls is too few for a {sides}-sided test; need at least {needed} (10 per face)"
    )]
    Undersized { total: u64, sides: u32, needed: u64 },
    #[error("no critical value for {df} degrees of freedom (table covers 1..=99)")]
    DegreesOfFreedom { df: u32 },
    #[error("dice must have at least one side")]
    NoSides,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub sides: u32,
    /// `counts[i]` is the tally for face `i + 1`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(sides: u32) -> Self {
        Self {
            sides,
            counts: vec![0; sides as usize],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self {
            sides: counts.len() as u32,
            total: counts.iter().sum(),
            counts,
        }
    }

    pub fn expected(&self) -> f64 {
        self.total as f64 / f64::from(self.sides)
    }

    /// `face,count,expected` with a header line.
    pub fn to_csv(&self) -> String {
        let expected = self.expected();
        let mut out = String::from("face,count,expected\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.3}", i + 1, c, expected);
        }
        out
    }

    /// Horizontal bar chart, bars scaled so the largest count spans `width`.
    pub fn ascii_chart(&self, width: usize) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let label = self.sides.to_string().len();
        let mut out = String::new();
        for (i, &c) in self.counts.iter().enumerate() {
            let bar = (c as u128 * width as u128 / max as u128) as usize;
            let _ = writeln!(out, "{:>label$} | {} {}", i + 1, "#".repeat(bar), c);
        }
        out
    }
}

/// Count face values in `1..=sides`.
pub fn tally<T>(rolls: &[T], sides: u32) -> Result<Histogram, StatsError>
where
    T: Copy + Into<u64>,
{
    if sides == 0 {
        return Err(StatsError::NoSides);
    }
    let mut h = Histogram::new(sides);
    for (index, &r) in rolls.iter().enumerate() {
        let value: u64 = r.into();
        if value == 0 || value > u64::from(sides) {
            return Err(StatsError::OutOfRange {
                index,
                value,
                sides,
            });
        }
        h.counts[value as usize - 1] += 1;
        h.total += 1;
    }
    Ok(h)
}

/// Histogram of raw words over `bins` equal-width slices of the 32-bit range.
pub fn raw_histogram(words: &[u32], bins: u32) -> Histogram {
    let mut h = Histogram::new(bins);
    for &w in words {
        let bin = (u64::from(w) * u64::from(bins)) >> 32;
        h.counts[bin as usize] += 1;
        h.total += 1;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: u32,
}

/// Pearson statistic against the uniform distribution.
pub fn chi_square(h: &Histogram) -> Result<ChiSquare, StatsError> {
    if h.total == 0 {
        return Err(StatsError::Empty);
    }
    let expected = h.expected();
    let statistic = h
        .counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    Ok(ChiSquare {
        statistic,
        df: h.sides - 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alpha {
    P05,
    P01,
    P001,
}

impl Alpha {
    pub const ALL: [Alpha; 3] = [Alpha::P05, Alpha::P01, Alpha::P001];

    pub fn value(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P01 => 0.01,
            Alpha::P001 => 0.001,
        }
    }

    fn table(self) -> &'static [f64; 99] {
        match self {
            Alpha::P05 => &CRIT_P05,
            Alpha::P01 => &CRIT_P01,
            Alpha::P001 => &CRIT_P001,
        }
    }
}

impl std::str::FromStr for Alpha {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0.05" | ".05" => Ok(Alpha::P05),
            "0.01" | ".01" => Ok(Alpha::P01),
            "0.001" | ".001" => Ok(Alpha::P001),
            other => Err(format!(
                "unsupported alpha `{other}` (expected 0.05, 0.01 or 0.001)"
            )),
        }
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Upper-tail chi-square critical value, rounded to three decimals.
pub fn critical_value(df: u32, alpha: Alpha) -> Result<f64, StatsError> {
    match df {
        1..=99 => Ok(alpha.table()[df as usize - 1]),
        _ => Err(StatsError::DegreesOfFreedom { df }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub pass: bool,
    pub statistic: f64,
    pub critical: f64,
    pub df: u32,
    pub alpha: f64,
}

/// Chi-square decision at level `alpha`. Requires at least ten rolls per face.
pub fn uniformity_report(h: &Histogram, alpha: Alpha) -> Result<UniformityReport, StatsError> {
    let needed = 10 * u64::from(h.sides);
    if h.total < needed {
        return Err(StatsError::Undersized {
            total: h.total,
            sides: h.sides,
            needed,
        });
    }
    let chi = chi_square(h)?;
    let critical = critical_value(chi.df, alpha)?;
    Ok(UniformityReport {
        pass: chi.statistic < critical,
        statistic: chi.statistic,
        critical,
        df: chi.df,
        alpha: alpha.value(),
    })
}

/// Exact preimage counts of each face when every k-bit word is reduced with
/// `(w mod d) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub sides: u64,
    pub domain_bits: u32,
    /// `2^k mod d`: the number of faces receiving one extra preimage.
    pub remainder: u128,
    /// `floor(2^k / d)`
    pub quotient: u128,
    /// `preimages[i]` for face `i + 1`.
    pub preimages: Vec<u128>,
    /// Most likely over least likely face.
    pub max_min_ratio: f64,
}

/// Panics unless `sides >= 1` and `1 <= domain_bits <= 64`.
pub fn modulo_bias(sides: u64, domain_bits: u32) -> BiasReport {
    assert!(sides >= 1, "dice must have at least one side");
    assert!(
        (1..=64).contains(&domain_bits),
        "domain_bits must be in 1..=64"
    );
    let domain = 1u128 << domain_bits;
    let d = u128::from(sides);
    let quotient = domain / d;
    let remainder = domain % d;
    // residues 0..r-1 (faces 1..r) get one more word each
    let preimages: Vec<u128> = (0..d)
        .map(|face| {
            if face < remainder {
                quotient + 1
            } else {
                quotient
            }
        })
        .collect();
    let max_min_ratio = if remainder == 0 || quotient == 0 {
        if quotient == 0 {
            f64::INFINITY
        } else {
            1.0
        }
    } else {
        (quotient + 1) as f64 / quotient as f64
    };
    BiasReport {
        sides,
        domain_bits,
        remainder,
        quotient,
        preimages,
        max_min_ratio,
    }
}

impl BiasReport {
    pub fn total(&self) -> u128 {
        self.preimages.iter().sum()
    }

    /// `face,count,expected` with exact integer counts.
    pub fn to_csv(&self) -> String {
        let expected = (1u128 << self.domain_bits) as f64 / self.sides as f64;
        let mut out = String::from("face,count,expected\n");
        for (i, c) in self.preimages.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.3}", i + 1, c, expected);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "d={} k={}", self.sides, self.domain_bits);
        let _ = writeln!(
            out,
            "remainder={} quotient={}",
            self.remainder, self.quotient
        );
        if self.remainder == 0 {
            let _ = writeln!(
                out,
                "faces 1..{}: {} preimages each",
                self.sides, self.quotient
            );
        } else {
            let _ = writeln!(
                out,
                "faces 1..{}: {} preimages",
                self.remainder,
                self.quotient + 1
            );
            let _ = writeln!(
                out,
                "faces {}..{}: {} preimages",
                self.remainder + 1,
                self.sides,
                self.quotient
            );
        }
        let _ = writeln!(out, "max/min probability ratio={:.12}", self.max_min_ratio);
        out
    }
}

const CRIT_P05: [f64; 99] = [
    3.841, 5.991, 7.815, 9.488, 11.070, 12.592, 14.067, 15.507, 16.919, 18.307, 19.675, 21.026,
    22.362, 23.685, 24.996, 26.296, 27.587, 28.869, 30.144, 31.410, 32.671, 33.924, 35.172, 36.415,
    37.652, 38.885, 40.113, 41.337, 42.557, 43.773, 44.985, 46.194, 47.400, 48.602, 49.802, 50.998,
    52.192, 53.384, 54.572, 55.758, 56.942, 58.124, 59.304, 60.481, 61.656, 62.830, 64.001, 65.171,
    66.339, 67.505, 68.669, 69.832, 70.993, 72.153, 73.311, 74.468, 75.624, 76.778, 77.931, 79.082,
    80.232, 81.381, 82.529, 83.675, 84.821, 85.965, 87.108, 88.250, 89.391, 90.531, 91.670, 92.808,
    93.945, 95.081, 96.217, 97.351, 98.484, 99.617, 100.749, 101.879, 103.010, 104.139, 105.267,
    106.395, 107.522, 108.648, 109.773, 110.898, 112.022, 113.145, 114.268, 115.390, 116.511,
    117.632, 118.752, 119.871, 120.990, 122.108, 123.225,
];

const CRIT_P01: [f64; 99] = [
    6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209, 24.725, 26.217,
    27.688, 29.141, 30.578, 32.000, 33.409, 34.805, 36.191, 37.566, 38.932, 40.289, 41.638, 42.980,
    44.314, 45.642, 46.963, 48.278, 49.588, 50.892, 52.191, 53.486, 54.776, 56.061, 57.342, 58.619,
    59.893, 61.162, 62.428, 63.691, 64.950, 66.206, 67.459, 68.710, 69.957, 71.201, 72.443, 73.683,
    74.919, 76.154, 77.386, 78.616, 79.843, 81.069, 82.292, 83.513, 84.733, 85.950, 87.166, 88.379,
    89.591, 90.802, 92.010, 93.217, 94.422, 95.626, 96.828, 98.028, 99.228, 100.425, 101.621,
    102.816, 104.010, 105.202, 106.393, 107.583, 108.771, 109.958, 111.144, 112.329, 113.512,
    114.695, 115.876, 117.057, 118.236, 119.414, 120.591, 121.767, 122.942, 124.116, 125.289,
    126.462, 127.633, 128.803, 129.973, 131.141, 132.309, 133.476, 134.642,
];

const CRIT_P001: [f64; 99] = [
    10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588, 31.264, 32.909,
    34.528, 36.123, 37.697, 39.252, 40.790, 42.312, 43.820, 45.315, 46.797, 48.268, 49.728, 51.179,
    52.620, 54.052, 55.476, 56.892, 58.301, 59.703, 61.098, 62.487, 63.870, 65.247, 66.619, 67.985,
    69.346, 70.703, 72.055, 73.402, 74.745, 76.084, 77.419, 78.750, 80.077, 81.400, 82.720, 84.037,
    85.351, 86.661, 87.968, 89.272, 90.573, 91.872, 93.168, 94.461, 95.751, 97.039, 98.324, 99.607,
    100.888, 102.166, 103.442, 104.716, 105.988, 107.258, 108.526, 109.791, 111.055, 112.317,
    113.577, 114.835, 116.092, 117.346, 118.599, 119.850, 121.100, 122.348, 123.594, 124.839,
    126.083, 127.324, 128.565, 129.804, 131.041, 132.277, 133.512, 134.745, 135.978, 137.208,
    138.438, 139.666, 140.893, 142.119, 143.344, 144.567, 145.789, 147.010, 148.230,
];
