//! Number formatting for text outputs.

/// Shortest decimal string that parses back to exactly `x`. Plain notation
/// for magnitudes in `[1e-5, 1e16)`, scientific otherwise.
pub fn shortest(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
