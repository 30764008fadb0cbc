//! Number formatting shared by the CSV writers.

/// Shortest-form-independent rendering with 17 significant digits, which
/// round-trips every finite `f64`. Non-finite values print as `nan`, `inf`, `-inf`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}
