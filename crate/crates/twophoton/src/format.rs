//! Nine-significant-digit rendering shared by every output path.

use serde_json::{Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to nine significant digits. Non-finite values pass through unchanged.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("exponent form parses")
}

/// Shortest decimal text that reads back as `sig9(x)`.
pub fn fmt_sig9(x: f64) -> String {
    sig9(x).to_string()
}

/// Rounds every float inside a JSON tree; integers are left as they are.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(sig9(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn rounds_to_nine_digits() {
        assert_eq!(sig9(1.0 / 7.0), 0.142857143);
        assert_eq!(sig9(-1.0 / 3.0), -0.333333333);
        assert_eq!(sig9(123456789012.0), 123456789000.0);
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(2.0f64.sqrt() + 1.0), "2.41421356");
        assert_eq!(sig9(0.0), 0.0);
    }

    #[test]
    fn json_floats_round_and_integers_stay() {
        let v = round_json(json!({"a": [1.0 / 3.0, 7], "b": {"c": 1e5 / 7.0}}));
        assert_eq!(v, json!({"a": [0.333333333, 7], "b": {"c": 14285.7143}}));
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in proptest::num::f64::NORMAL) {
            prop_assert_eq!(sig9(sig9(x)), sig9(x));
            prop_assert_eq!(fmt_sig9(x).parse::<f64>().unwrap(), sig9(x));
            prop_assert!((sig9(x) - x).abs() <= x.abs() * 5e-9);
        }
    }
}
