//! The `bench` command: wall-clock cost of updates and boundary evaluations.
//!
//! Both methods consume the same Pareto importance-weighted stream. Updates
//! and boundary evaluations are timed separately.

use std::io::Write;
use std::time::{Duration, Instant};

use heavycs::simulator::stream;
use heavycs::{CsConfig, CsState, EnvConfig, Method};

use crate::args::BenchArgs;
use crate::error::{CliError, CliResult};
use crate::output::open;

struct Timing {
    name: &'static str,
    updates: Duration,
    boundaries: Duration,
    evaluations: u64,
    final_lower: f64,
}

impl Timing {
    fn per_boundary_ms(&self) -> f64 {
        self.boundaries.as_secs_f64() * 1e3 / self.evaluations.max(1) as f64
    }
}

fn time_method(name: &'static str, config: CsConfig, xs: &[f64], every: u64) -> CliResult<Timing> {
    let mut state = CsState::new(config)?;
    let mut updates = Duration::ZERO;
    let mut boundaries = Duration::ZERO;
    let mut evaluations = 0;
    let mut final_lower = 0.0;
    for chunk in xs.chunks(every as usize) {
        let start = Instant::now();
        for &x in chunk {
            state.observe(x)?;
        }
        updates += start.elapsed();
        let start = Instant::now();
        let b = state.query()?;
        boundaries += start.elapsed();
        evaluations += 1;
        final_lower = b.ddrm.or(b.eb).map_or(0.0, |l| l.raw);
    }
    Ok(Timing {
        name,
        updates,
        boundaries,
        evaluations,
        final_lower,
    })
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let base = args.boundary.config()?;
    if args.every == 0 || args.horizon == 0 {
        return Err(CliError::Usage(
            "--horizon and --every must be at least 1".into(),
        ));
    }
    let env = EnvConfig::pareto(args.seed, args.horizon);
    let xs: Vec<f64> = stream(&env)?.map(|r| r.w * r.r).collect();
    let ddrm = time_method(
        "ddrm",
        CsConfig {
            method: Method::Ddrm,
            ..base
        },
        &xs,
        args.every,
    )?;
    let eb = time_method(
        "eb",
        CsConfig {
            method: Method::Eb,
            ..base
        },
        &xs,
        args.every,
    )?;

    let mut out = open(args.out.as_deref())?;
    writeln!(
        out,
        "{:<6} {:>10} {:>12} {:>12} {:>16} {:>12}",
        "method", "updates", "update_ms", "evaluations", "ms_per_boundary", "final_lower"
    )?;
    for t in [&ddrm, &eb] {
        writeln!(
            out,
            "{:<6} {:>10} {:>12.3} {:>12} {:>16.4} {:>12.6}",
            t.name,
            xs.len(),
            t.updates.as_secs_f64() * 1e3,
            t.evaluations,
            t.per_boundary_ms(),
            t.final_lower
        )?;
    }
    writeln!(
        out,
        "boundary cost ratio ddrm/eb: {:.1}",
        ddrm.per_boundary_ms() / eb.per_boundary_ms().max(1e-9)
    )?;
    out.flush()?;
    Ok(())
}
