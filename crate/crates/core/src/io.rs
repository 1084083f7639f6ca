//! Text formats: JSON with 17 significant digits, comma-separated tables,
//! profile tables and convergence traces.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::radial::RadialProfile;

/// Pretty JSON whose floats carry 17 significant digits.
struct DigitsFormatter<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for DigitsFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// A float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, DigitsFormatter(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// A table of named float columns.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    /// Comma-separated, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated columns with a `#` header line.
    pub fn to_columns(&self) -> String {
        let mut out = format!("# {}\n", self.header.join(" "));
        for r in &self.rows {
            out.push_str(&r.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Columns r, Ũ, Ũ' under a header echoing the parameters.
pub fn write_profile<W: Write>(out: &mut W, profile: &RadialProfile) -> io::Result<()> {
    let p = &profile.params;
    writeln!(out, "# radial profile")?;
    writeln!(out, "# N = {}", p.n)?;
    writeln!(out, "# s = {}", fmt_f64(p.s))?;
    writeln!(out, "# p = {}", fmt_f64(p.p))?;
    writeln!(out, "# family = {}", p.family.tag())?;
    writeln!(out, "# source = {}", profile.source.tag())?;
    writeln!(out, "# shoot_param = {}", fmt_f64(profile.shoot_param))?;
    writeln!(out, "# boundary_slope = {}", fmt_f64(profile.boundary_slope))?;
    writeln!(out, "# r u du")?;
    for i in 0..profile.grid.len() {
        writeln!(
            out,
            "{} {} {}",
            fmt_f64(profile.grid[i]),
            fmt_f64(profile.values[i]),
            fmt_f64(profile.derivs[i])
        )?;
    }
    Ok(())
}

/// (iteration, quotient) as CSV.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut t = Table::new(&["iteration", "quotient"]);
    for (i, v) in trace.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    t.to_csv()
}
