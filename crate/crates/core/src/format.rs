//! Number formatting shared by every CSV writer.

/// Formats a value with 17 significant digits, or `nan` for missing cells.
///
/// 17 digits round-trip any `f64` exactly, so equal outputs imply equal bits.
pub fn full_precision(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.16e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 7.463_000_000_000_001, 0.0] {
            let s = full_precision(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(full_precision(f64::NAN), "nan");
    }
}
