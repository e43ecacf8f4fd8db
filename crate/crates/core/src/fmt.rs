/// Formats a number with six significant digits for human-readable tables.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v > 0.0 { "inf".into() } else if v < 0.0 { "-inf".into() } else { "nan".into() };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=6).contains(&exp) {
        return format!("{:.5e}", v);
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
