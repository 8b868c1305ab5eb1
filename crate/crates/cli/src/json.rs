//! JSON output with deterministic float formatting.
//!
//! Reports must be byte-identical across runs and thread counts, so every
//! float is printed with a fixed 17-significant-digit scientific format
//! instead of the default shortest-roundtrip encoding.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

pub struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.7e}")
    }
}

/// Serialize with the fixed float format; output ends with a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).expect("report serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is utf-8")
}
