//! Deterministic number formatting for CSV output.

/// Rounds to 9 significant digits and prints the shortest decimal that
/// round-trips the rounded value. Negative zero prints as `0`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific literal parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let plain = format!("{rounded}");
    // Keep tiny and huge magnitudes compact.
    if plain.len() > 24 {
        format!("{rounded:e}")
    } else {
        plain
    }
}

/// The value [`sig9`] prints, as a number (for JSON output).
pub fn round9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

pub fn join_row<I: IntoIterator<Item = f64>>(values: I) -> String {
    values.into_iter().map(sig9).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.25), "0.25");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(1e-30), "1e-30");
        assert_eq!(sig9(123456789012.0), "123456789000");
    }

    #[test]
    fn round_trips_rounded_value() {
        for &x in &[0.1, 2.0 / 3.0, -7.123456789123, 6.02e23, 1.6e-19] {
            let s = sig9(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(sig9(back), s);
        }
    }
}
