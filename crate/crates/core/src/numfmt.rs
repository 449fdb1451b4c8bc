//! Fixed-precision float rendering for reports and exports.
//!
//! Values are rounded to six significant digits and written in plain decimal
//! notation with trailing zeros removed, so output bytes do not depend on the
//! platform's shortest-representation algorithm.

/// Renders `x` at six significant digits, e.g. `1.75`, `-2.56`, `0.0000453979`.
///
/// Negative zero renders as `0`. Non-finite values render as `NaN`, `inf` or
/// `-inf`.
pub fn sig6(x: f64) -> String {
    format_significant(x, 6)
}

pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // `{:e}` rounding is exact on the binary value, so the digit string is
    // identical on every platform.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits_str: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits_str = digits_str.trim_end_matches('0');
    let digits_str = if digits_str.is_empty() {
        "0"
    } else {
        digits_str
    };

    let point = exp + 1; // position of the decimal point relative to digits_str
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits_str)
    } else if point as usize >= digits_str.len() {
        format!(
            "{}{}",
            digits_str,
            "0".repeat(point as usize - digits_str.len())
        )
    } else {
        let (int, frac) = digits_str.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}
