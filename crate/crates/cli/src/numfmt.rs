//! JSON and CSV output with every float written to 17 significant digits,
//! so artifacts diff cleanly and parse back to the identical double.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `v` with 17 significant digits; positional for exponents in [-7, 16], else scientific.
pub fn sig17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-7..=16).contains(&exp) {
        return format!("{sign}{mantissa}e{exp}");
    }
    if exp < 0 {
        return format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize));
    }
    let split = exp as usize + 1;
    let (int, frac) = digits.split_at(split);
    if frac.is_empty() {
        format!("{sign}{int}.0")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Pretty JSON whose floats go through [`sig17`].
pub struct Sig17Formatter {
    inner: PrettyFormatter<'static>,
}

impl Default for Sig17Formatter {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// One compact JSON line (for JSON-lines logs), floats as in [`to_json`].
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    struct Compact;
    impl Formatter for Compact {
        fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
            writer.write_all(sig17(value).as_bytes())
        }
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Compact);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Row-major CSV with a header row.
pub fn to_csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| sig17(*v)))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(-1.0), "-1.0000000000000000");
        assert_eq!(sig17(123.5), "123.50000000000000");
        assert_eq!(sig17(1e-9), "1.0000000000000001e-9");
        assert_eq!(sig17(2e20), "2.0000000000000000e20");
        assert_eq!(sig17(0.0), "0.0");
        assert_eq!(sig17(1e16), "10000000000000000.0");
    }

    #[test]
    fn round_trips_exactly() {
        let mut x = 0.7_f64;
        for i in 0..2000 {
            x = (x * 3.999 * (1.0 - x)).abs();
            for v in [x, -x * 1e-12, x * 1e12, x / (i + 1) as f64, f64::MIN_POSITIVE * x, f64::MAX * x] {
                let s = sig17(v);
                assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
                let digits = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
                let significant = digits.trim_start_matches('0').len();
                assert!((17..=18).contains(&significant), "{s}");
            }
        }
    }

    #[test]
    fn json_uses_the_float_format() {
        let text = to_json(&json!({"r": [0.1, 1], "name": "x"})).unwrap();
        assert!(text.contains("0.10000000000000001"));
        // Integers stay integers.
        assert!(text.contains("0.10000000000000001,\n    1\n  ]"), "{text}");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["r"][0].as_f64(), Some(0.1));
        assert_eq!(to_json_line(&json!([0.5])).unwrap(), "[0.50000000000000000]\n");
    }

    #[test]
    fn csv_has_a_header_row() {
        let text = to_csv(&["a".into(), "b".into()], vec![vec![1.0, 0.25]]).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000,0.25000000000000000\n");
    }
}
