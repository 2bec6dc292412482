//! Artifact formatting helpers.
//!
//! All numeric output uses 17 significant digits so that every double
//! round-trips losslessly and artifacts are bitwise reproducible.

/// Format a double with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Join a slice of doubles with commas, each in artifact format.
pub fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for &v in &[0.0, 1.0, -1.25, 3.0e-17, f64::MIN_POSITIVE, 12345.6789, 1.0 / 3.0] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
