//! Fixed number formats for tables.

/// Scientific notation with six fractional digits and a signed, at least
/// two-digit exponent: `1.119140e-03`.
pub fn sci6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Observed order with four decimals, blank when undefined.
pub fn order4(p: Option<f64>) -> String {
    p.map(|p| format!("{p:.4}")).unwrap_or_default()
}
