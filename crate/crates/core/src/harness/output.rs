//! CSV writers. Every file starts with a header row; floats are written with
//! 17 significant digits so values round-trip bit for bit.

use std::io::Write;

use crate::error::Result;
use crate::harness::calibrate::{Calibration, SnrSweepRow};
use crate::harness::config::Method;
use crate::harness::lemmas::LemmaCheck;
use crate::harness::phase::PhaseRow;
use crate::harness::sweep::SweepRow;
use crate::metrics::TrialMetrics;

pub const SWEEP_HEADER: [&str; 7] = ["method", "snr", "trial", "threshold", "fdp", "ndp", "detected"];
pub const SNR_SWEEP_HEADER: [&str; 6] = ["method", "p", "snr", "calibrated_tau", "fdr", "ndr"];
pub const BOUNDARY_HEADER: [&str; 2] = ["beta", "rho"];
pub const LEMMA_HEADER: [&str; 5] = ["lemma", "params", "bound", "empirical", "pass"];
pub const SIMULATE_HEADER: [&str; 9] = [
    "method",
    "trial",
    "fdp",
    "ndp",
    "detected",
    "measurements",
    "budget_spent",
    "fdp_undefined",
    "ndp_undefined",
];
pub const CALIBRATE_HEADER: [&str; 7] = ["method", "p", "snr", "target_fdr", "calibrated_tau", "achieved_fdr", "reachable"];
pub const PHASE_HEADER: [&str; 6] = ["r", "regime", "tau", "median_fdp", "median_ndp", "success_fraction"];

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out, &SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_owned(),
            fmt_f64(r.snr),
            r.trial.to_string(),
            fmt_f64(r.threshold),
            fmt_f64(r.fdp),
            fmt_f64(r.ndp),
            flag(r.detected).to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snr_sweep<W: Write>(out: W, rows: &[SnrSweepRow]) -> Result<()> {
    let mut w = writer(out, &SNR_SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_owned(),
            r.p.to_string(),
            fmt_f64(r.snr),
            fmt_f64(r.calibrated_tau),
            fmt_f64(r.fdr),
            fmt_f64(r.ndr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_boundary<W: Write>(out: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(out, &BOUNDARY_HEADER)?;
    for &(beta, rho) in rows {
        w.write_record([fmt_f64(beta), fmt_f64(rho)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lemma_report<W: Write>(out: W, checks: &[LemmaCheck]) -> Result<()> {
    let mut w = writer(out, &LEMMA_HEADER)?;
    for c in checks {
        w.write_record([c.lemma.clone(), c.params.clone(), fmt_f64(c.bound), fmt_f64(c.empirical), flag(c.pass).to_owned()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_simulation<W: Write>(out: W, rows: &[(Method, u64, TrialMetrics)]) -> Result<()> {
    let mut w = writer(out, &SIMULATE_HEADER)?;
    for (m, t, r) in rows {
        w.write_record([
            m.as_str().to_owned(),
            t.to_string(),
            fmt_f64(r.fdp),
            fmt_f64(r.ndp),
            flag(r.detected).to_owned(),
            r.measurements_used.to_string(),
            fmt_f64(r.budget_spent),
            flag(r.fdp_undefined).to_owned(),
            flag(r.ndp_undefined).to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibration<W: Write>(out: W, rows: &[(Method, usize, f64, f64, Calibration)]) -> Result<()> {
    let mut w = writer(out, &CALIBRATE_HEADER)?;
    for (m, p, snr, target, c) in rows {
        w.write_record([
            m.as_str().to_owned(),
            p.to_string(),
            fmt_f64(*snr),
            fmt_f64(*target),
            fmt_f64(c.tau),
            fmt_f64(c.achieved_fdr),
            flag(c.reachable).to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_phase<W: Write>(out: W, rows: &[PhaseRow]) -> Result<()> {
    let mut w = writer(out, &PHASE_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.r),
            r.regime.as_str().to_owned(),
            r.tau.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.median_fdp),
            fmt_f64(r.median_ndp),
            fmt_f64(r.success_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}
