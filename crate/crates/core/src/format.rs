//! Number and CSV-field formatting shared by every emitted table.

/// Fixed-notation rendering with ten significant digits.
///
/// Rust's float formatting is correctly rounded, so output is identical on
/// every platform.
pub fn sig10(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    if x == 0.0 {
        return "0.000000000".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (9 - exponent).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // Negative zero after rounding prints as "-0.000..."
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Quote a CSV field when it contains a separator or a quote.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
