//! CSV serialization helpers shared by the trajectory, summary, region and
//! report writers. All output is UTF-8 with `\n` line endings; floats carry
//! 17 significant digits so a reader recovers the exact f64.

/// 17-significant-digit scientific form, round-trip exact for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_bool(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}
