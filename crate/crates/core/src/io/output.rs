//! Serialization of command results.
//!
//! Every floating-point value is written with 12 significant digits so that
//! output files are stable across platforms.

use serde_json::{Map, Value};

use crate::scan::ScanResult;

/// Header of every scan CSV. Unused columns are left empty.
pub const SCAN_COLUMNS: [&str; 5] = ["phase_a", "phase_c", "rate_hz", "counts", "sigma"];

const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Formats like C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Applies [`round_sig`] to every number in a JSON tree.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per grid point: first axis in `phase_a`, second in `phase_c`.
pub fn scan_csv(result: &ScanResult) -> String {
    let mut out = SCAN_COLUMNS.join(",");
    out.push('\n');
    for i in 0..result.len() {
        let coords = result.coordinates(i);
        let phase_a = format_sig(coords[0]);
        let phase_c = coords.get(1).map(|&p| format_sig(p)).unwrap_or_default();
        let counts = result
            .counts
            .as_ref()
            .map(|c| c[i].to_string())
            .unwrap_or_default();
        let sigma = result
            .sigma
            .as_ref()
            .map(|s| format_sig(s[i]))
            .unwrap_or_default();
        out.push_str(&format!(
            "{phase_a},{phase_c},{},{counts},{sigma}\n",
            format_sig(result.rates[i])
        ));
    }
    out
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, rows);
            }
        }
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Number(n) => {
            let text = match n.as_f64() {
                Some(x) if n.is_f64() => format_sig(x),
                _ => n.to_string(),
            };
            rows.push((prefix.to_string(), text));
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
    }
}

/// Two-column `field,value` CSV of a structured record, keys in dotted form.
pub fn record_csv(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let mut out = String::from("field,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{},{}\n", csv_escape(&k), csv_escape(&v)));
    }
    out
}

/// JSON envelope echoing the resolved configuration next to the result.
pub fn json_document(command: &str, config: Value, result: Value) -> String {
    let mut doc = Map::new();
    doc.insert("command".into(), Value::String(command.into()));
    doc.insert("config".into(), round_json(config));
    doc.insert("result".into(), round_json(result));
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn format_matches_percent_g() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(9.0), "9");
        assert_eq!(format_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_sig(-0.5), "-0.5");
        assert_eq!(format_sig(1.5e-7), "1.5e-07");
        assert_eq!(format_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_sig(2200.0), "2200");
        assert_eq!(format_sig(0.000123), "0.000123");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn round_sig_is_idempotent() {
        for x in [1.0 / 3.0, std::f64::consts::E * 1e5, -7.123456789012345e-9] {
            let r = round_sig(x);
            assert_eq!(round_sig(r), r);
            assert!(((r - x) / x).abs() < 1e-11);
        }
    }

    #[test]
    fn record_csv_flattens() {
        let v = json!({"a": 1.0, "b": {"c": [true, null]}, "s": "x,y"});
        assert_eq!(
            record_csv(&v),
            "field,value\na,1\nb.c.0,true\nb.c.1,\ns,\"x,y\"\n"
        );
    }

    #[test]
    fn scan_csv_layout() {
        let r = ScanResult {
            axis_sources: vec![0],
            axes: vec![vec![0.0, 1.0]],
            rates: vec![9.0, 0.25],
            counts: None,
            sigma: None,
        };
        assert_eq!(
            scan_csv(&r),
            "phase_a,phase_c,rate_hz,counts,sigma\n0,,9,,\n1,,0.25,,\n"
        );
    }
}
