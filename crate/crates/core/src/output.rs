//! Fixed-format numeric output shared by the CSV writers.

/// 17 significant digits, exponent form; round-trips any `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of reproducibility diffs
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Comma-joined row of 17-digit numbers.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(",")
}
