//! Decimal formatting shared by the CSV writers.

/// `x` with 17 significant digits in positional notation, which round-trips
/// every finite `f64`. Non-finite values print as `inf`, `-inf`, `nan`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
