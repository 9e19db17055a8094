//! Per-iteration solver log.

use std::io::Write;

/// One accepted SPG iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based count of SPG iterations across all Newton steps.
    pub iteration: usize,
    pub tau: f64,
    /// Residual norm over the fitted (reconstruction) entries.
    pub r_rec: f64,
    /// Residual norm over held-out entries, `NaN` outside CV mode.
    pub r_cv: f64,
    pub gap: f64,
    pub step: f64,
    pub backtracks: usize,
}

/// Newton probe of the Pareto curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoRecord {
    pub tau: f64,
    pub phi: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub iterations: Vec<IterationRecord>,
    pub pareto: Vec<ParetoRecord>,
    /// Iteration with the smallest CV residual (CV mode only).
    pub n_opt: Option<usize>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Tab-separated `iteration tau r_rec r_cv gap`, one header line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration\ttau\tr_rec\tr_cv\tgap")?;
        for r in &self.iterations {
            writeln!(out, "{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}", r.iteration, r.tau, r.r_rec, r.r_cv, r.gap)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_has_header_and_rows() {
        let mut t = SolveTrace::default();
        t.iterations.push(IterationRecord {
            iteration: 1,
            tau: 0.5,
            r_rec: 1.0,
            r_cv: f64::NAN,
            gap: 0.25,
            step: 1.0,
            backtracks: 0,
        });
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "iteration\ttau\tr_rec\tr_cv\tgap");
        assert!(lines[1].starts_with("1\t5.0000000000000000e-1\t"));
        assert!(lines[1].contains("NaN"));
    }
}
