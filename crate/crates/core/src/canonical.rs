//! Canonical JSON rendering: sorted object keys, no whitespace, floats with
//! exactly six decimals, integers verbatim.

use serde::Serialize;
use serde_json::Value;

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report types serialize to JSON");
    let mut out = String::new();
    write_value(&mut out, &value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64 number")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push(':');
                write_value(out, &map[key]);
            }
            out.push('}');
        }
    }
}

/// Six-decimal rendering; negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorts_keys_and_fixes_floats() {
        let v = json!({"b": 1, "a": [0.5, 2, -0.0000001], "c": {"z": null, "y": "q\""}});
        assert_eq!(
            to_canonical_json(&v),
            r#"{"a":[0.500000,2,0.000000],"b":1,"c":{"y":"q\"","z":null}}"#
        );
    }

    #[test]
    fn whole_floats_keep_decimals() {
        assert_eq!(to_canonical_json(&json!(1.0)), "1.000000");
        assert_eq!(format_float(2.0 / 3.0), "0.666667");
    }
}
