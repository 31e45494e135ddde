//! Twelve-significant-digit float rendering for reports and tables.

pub const DIGITS: usize = 12;

/// Rounds `x` to [`DIGITS`] significant digits. Non-finite values pass through.
pub fn round(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn format(x: f64) -> String {
    let r = round(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format).unwrap_or_default()
}

/// Serde adapter that rounds on the way out.
pub mod serde_f64 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round(*x))
    }
}

pub mod serde_opt_f64 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::round(*v)),
            None => s.serialize_none(),
        }
    }
}
