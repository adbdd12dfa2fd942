/// Formats with nine significant digits in scientific notation; negative
/// zero prints as zero.
pub fn sig9_str(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// Rounds to nine significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    sig9_str(x).parse().expect("formatted float parses")
}

fn round_value(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = sig9(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded by [`sig9`] and a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable report");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9_str(1234.56789012), "1.23456789e3");
        assert_eq!(sig9_str(-0.0), "0.00000000e0");
        assert_eq!(sig9(1.0 / 3.0), 0.333333333);
    }

    #[test]
    fn json_floats_rounded() {
        let s = to_json(&serde_json::json!({"a": [1.0 / 3.0, 2], "b": {"c": -0.0}}));
        assert_eq!(
            s,
            "{\n  \"a\": [\n    0.333333333,\n    2\n  ],\n  \"b\": {\n    \"c\": 0.0\n  }\n}\n"
        );
    }
}
