//! Small numeric helpers: tri-state verdicts, compensated summation,
//! deterministic float rounding for reports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Three-valued answer for questions that an honest oracle may not decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl TriState {
    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
    pub fn is_no(self) -> bool {
        self == TriState::No
    }
}

impl std::fmt::Display for TriState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TriState::Yes => write!(f, "yes"),
            TriState::No => write!(f, "no"),
            TriState::Unknown => write!(f, "unknown"),
        }
    }
}

/// Kahan–Babuska compensated accumulator. Keeps norm sums stable on
/// supports up to ~10^6 atoms.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum of |x| over a slice, compensated.
pub fn abs_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Round to 10 significant decimal digits. Reports serialize rounded values
/// so repeated runs are byte-identical.
pub fn round_sig10(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(9 - mag);
    (x * scale).round() / scale
}

/// Fixed-decimal, 10-significant-digit text form used in tables and CSV.
pub fn fmt_sig10(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000000000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (9 - mag).clamp(0, 17) as usize;
    format!("{:.*}", decimals, x)
}

/// Complex modulus guard against -0.0 artifacts in reports.
pub fn c64_round_sig10(z: Complex64) -> (f64, f64) {
    let re = round_sig10(z.re);
    let im = round_sig10(z.im);
    (
        if re == 0.0 { 0.0 } else { re },
        if im == 0.0 { 0.0 } else { im },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        let plain: f64 = 1.0 + 1e-16 * 1_000_000.0;
        assert!((acc.value() - plain).abs() < 1e-12);
    }

    #[test]
    fn sig10_rounding() {
        assert_eq!(round_sig10(1.234567890123), 1.23456789);
        assert_eq!(round_sig10(0.0), 0.0);
        assert_eq!(fmt_sig10(1.7320508075688772), "1.732050808");
        assert_eq!(fmt_sig10(77.0 / 99.0), "0.7777777778");
    }
}
