//! Quantities at the config boundary. Bare numbers are already in internal
//! units (rad/µs, µs); strings carry an explicit suffix.

use pitchcatch::model::from_mhz;

const FREQUENCY_UNITS: [(&str, f64); 4] = [("rad/us", 0.0), ("GHz", 1e3), ("MHz", 1.0), ("kHz", 1e-3)];
const TIME_UNITS: [(&str, f64); 4] = [("us", 1.0), ("µs", 1.0), ("ns", 1e-3), ("ms", 1e3)];

fn split_suffix<'a>(text: &'a str, units: &[(&'a str, f64)]) -> Option<(f64, &'a str, f64)> {
    let text = text.trim();
    units.iter().find_map(|&(unit, scale)| {
        let head = text.strip_suffix(unit)?;
        head.trim().parse::<f64>().ok().map(|x| (x, unit, scale))
    })
}

/// Angular frequency in rad/µs from e.g. `"0.6 MHz"` or `"3.77 rad/us"`.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    match split_suffix(text, &FREQUENCY_UNITS) {
        Some((x, "rad/us", _)) => Ok(x),
        Some((x, _, scale)) => Ok(from_mhz(x * scale)),
        None => Err(format!("`{text}` is not a frequency (use MHz, kHz, GHz or rad/us)")),
    }
}

/// Time in µs from e.g. `"450 ns"` or `"0.8 us"`.
pub fn parse_time(text: &str) -> Result<f64, String> {
    split_suffix(text, &TIME_UNITS)
        .map(|(x, _, scale)| x * scale)
        .ok_or_else(|| format!("`{text}` is not a time (use us, ns or ms)"))
}
