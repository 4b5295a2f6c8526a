//! JSON output with every float written to 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

/// Pretty formatter that writes floats in `d.dddddddddddddddde±x` form, which
/// round-trips every finite `f64` exactly and does not depend on the shortest
/// representation chosen by the float printer.
pub struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedDigits<'_> {
    fn default() -> Self {
        FixedDigits {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

fn write_float<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
    write!(writer, "{value:.16e}")
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_float(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_float(writer, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FixedDigits::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_string(&[0.1, 1.0, -2.5e-300]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, [0.1, 1.0, -2.5e-300]);
    }

    #[test]
    fn integers_and_structure_unchanged() {
        #[derive(Serialize)]
        struct S {
            a: usize,
            b: Vec<i32>,
            c: Option<f64>,
        }
        let s = to_string(&S { a: 3, b: vec![-1], c: None }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v, serde_json::json!({"a": 3, "b": [-1], "c": null}));
    }

    proptest! {
        #[test]
        fn floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let back: f64 = serde_json::from_str(to_string(&v).unwrap().trim()).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
