//! CSV serialization of run traces.
//!
//! Columns: `k, a_k, y_plus, y_minus`, then the `p` iterate components
//! and the `p` gradient-estimate components. Numbers are written in
//! shortest round-trip decimal form.

use std::io::{self, Write};

use crate::dspsa::RunTrace;

pub fn write_trace_csv<W: Write>(trace: &RunTrace, w: &mut W) -> io::Result<()> {
    let p = trace.records.first().map(|r| r.theta_hat.len()).unwrap_or(0);
    write!(w, "k,a_k,y_plus,y_minus")?;
    for i in 0..p {
        write!(w, ",theta_{i}")?;
    }
    for i in 0..p {
        write!(w, ",g_{i}")?;
    }
    writeln!(w)?;
    for rec in &trace.records {
        write!(w, "{},{},{},{}", rec.k, rec.a_k, rec.y_plus, rec.y_minus)?;
        for v in &rec.theta_hat {
            write!(w, ",{v}")?;
        }
        for v in &rec.g_hat {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Per-iteration averaged loss, `k, mean_y` rows.
pub fn write_averaged_csv<W: Write>(averaged: &[f64], w: &mut W) -> io::Result<()> {
    writeln!(w, "k,mean_y")?;
    for (k, v) in averaged.iter().enumerate() {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}
