//! The `simulate` and `audit` commands.

use heavycs::simulator::{coverage_audit_levels, stream};

use crate::args::{AuditArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, float};

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let env = args.env.config(args.horizon)?;
    let mut out = csv_writer(args.output.out.as_deref())?;
    out.write_record(["t", "w", "r", "true_value"])?;
    for rec in stream(&env)? {
        out.write_record([
            rec.t.to_string(),
            float(rec.w),
            float(rec.r),
            float(rec.true_value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Worker cap from `HEAVYCS_THREADS`, if set.
fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("HEAVYCS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "HEAVYCS_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub fn audit(args: &AuditArgs) -> CliResult<()> {
    let env = args.env.config(args.horizon)?;
    let cs = args.boundary.config()?;
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let report = coverage_audit_levels(&env, &cs, &[cs.params.alpha], args.seeds, thread_cap()?)?;
    let mut out = csv_writer(args.output.out.as_deref())?;
    out.write_record([
        "method",
        "alpha",
        "seeds",
        "violation_rate",
        "ci_low",
        "ci_high",
    ])?;
    for row in &report.rows {
        for (name, rate) in [("ddrm", row.ddrm_rate), ("eb", row.eb_rate)] {
            let Some(rate) = rate else { continue };
            let half = report.binomial_half_width(rate, Z_95);
            out.write_record([
                name.to_string(),
                float(row.alpha),
                report.seeds.to_string(),
                float(rate),
                float((rate - half).max(0.0)),
                float((rate + half).min(1.0)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
