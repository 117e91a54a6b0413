//! Deterministic number formatting for CSV output: six significant digits.

pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
