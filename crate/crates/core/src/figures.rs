//! Bell value against attack probability, for plotting.

use std::io::Write;

use crate::adversary::{bell_curve, threshold_p};
use crate::error::{Error, Result};
use crate::types::{Protocol, ResidualId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub bell: f64,
    /// The row where the curve meets the LHV bound.
    pub crossing: bool,
}

/// `steps` evenly spaced points on `[p_from, p_to]`, plus the crossing row
/// when it falls inside the range. Rows are in increasing `p`.
pub fn sweep(protocol: Protocol, p_from: f64, p_to: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&p_from) || !(0.0..=1.0).contains(&p_to) || p_from > p_to {
        return Err(Error::InvalidConfig(format!(
            "bad range [{p_from}, {p_to}]; need 0 <= from <= to <= 1"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidConfig("steps must be at least 2".into()));
    }
    let id = ResidualId::Phi0;
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..steps {
        let p = p_from + (p_to - p_from) * i as f64 / (steps - 1) as f64;
        rows.push(SweepRow {
            p,
            bell: bell_curve(protocol, id, p)?,
            crossing: false,
        });
    }
    let pc = threshold_p(protocol)?;
    if (p_from..=p_to).contains(&pc) {
        let at = rows.partition_point(|r| r.p < pc);
        rows.insert(
            at,
            SweepRow {
                p: pc,
                bell: bell_curve(protocol, id, pc)?,
                crossing: true,
            },
        );
    }
    Ok(rows)
}

/// Header `p,bell`, fifteen decimals per field.
pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "p,bell")?;
    for r in rows {
        writeln!(w, "{:.15},{:.15}", r.p, r.bell)?;
    }
    Ok(())
}
