use std::fmt;
use std::io::{self, Write};

use crate::plant::State;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Status {
    #[default]
    Completed,
    Contact,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Contact => "contact",
            Status::NumericalFailure => "numerical-failure",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sample of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRecord {
    pub t: f64,
    pub state: State,
    pub u: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

pub const CSV_HEADER: &str = "t,x1,x2,x3,u,z1,z2,z3,mu2,mu3,beta";

/// Nine significant digits in scientific notation; `inf`, `-inf` and `nan`
/// for non-finite values.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl SimTrace {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
            status: Status::Completed,
        }
    }

    pub(crate) fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub(crate) fn finish(&mut self, status: Status) {
        self.status = status;
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn max_abs_z1(&self) -> f64 {
        self.records.iter().map(|r| r.z1.abs()).fold(0.0, f64::max)
    }

    /// Writes the trace as CSV followed by a `# status=...` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            let row = [
                r.t, r.state.x1, r.state.x2, r.state.x3, r.u, r.z1, r.z2, r.z3, r.mu2, r.mu3,
                r.beta,
            ];
            let line: Vec<String> = row.iter().map(|&v| fmt_sig9(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        writeln!(w, "# status={}", self.status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let trace = SimTrace {
            records: vec![TraceRecord {
                t: 0.5,
                state: State::new(0.25, -0.125, 1.0 / 3.0),
                u: 1.0,
                ..Default::default()
            }],
            status: Status::Contact,
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "5.00000000e-1,2.50000000e-1,-1.25000000e-1,3.33333333e-1,1.00000000e0,\
             0.00000000e0,0.00000000e0,0.00000000e0,0.00000000e0,0.00000000e0,0.00000000e0"
        );
        assert_eq!(lines[2], "# status=contact");
    }

    #[test]
    fn non_finite_tokens() {
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
        assert_eq!(fmt_sig9(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig9(f64::NAN), "nan");
        assert_eq!(fmt_sig9(123456789.0), "1.23456789e8");
    }
}
