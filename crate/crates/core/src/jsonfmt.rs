//! Deterministic JSON serialization: floats at 17 significant digits, struct
//! keys in declaration order.

use std::io;

use serde::Serialize;

/// `serde_json` formatter that prints every float as `{:.16e}` (17
/// significant digits), making output byte-identical across runs.
pub struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
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
        write!(writer, "{value:.16e}")
    }
}

/// Serialize a value to a deterministic JSON string.
pub fn to_string<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| crate::Error::InvalidConfig(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| crate::Error::InvalidConfig(e.to_string()))
}
