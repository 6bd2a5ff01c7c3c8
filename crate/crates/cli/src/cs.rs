//! The `cs` command: stream a CSV of observations through a confidence sequence.
//!
//! Rows are `t,x` for a plain lower sequence or `t,w,r` for an off-policy
//! interval. Simulator output `t,w,r,true_value` is also accepted, in which
//! case the running average of the true values is appended as `true_value`.
//! An optional header row is recognised by a non-numeric first field. The
//! `t` column is parsed but the emitted `t` is the row count.

use std::fs::File;
use std::io::{self, Read};

use heavycs::{default_cadence, Bounds, CsConfig, CsState, OffPolicyBounds, OffPolicyCs};

use crate::args::CsArgs;
use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, float};

enum Engine {
    Lower { state: CsState, running: bool },
    OffPolicy { cs: OffPolicyCs, truth: Option<f64> },
}

impl Engine {
    fn header(&self, config: &CsConfig) -> Vec<&'static str> {
        let m = config.method;
        let mut h = vec!["t", "sum_x"];
        match self {
            Engine::Lower { .. } => {
                if m.uses_ddrm() {
                    h.push("lower_ddrm");
                }
                if m.uses_eb() {
                    h.push("lower_eb");
                }
            }
            Engine::OffPolicy { truth, .. } => {
                if m.uses_ddrm() {
                    h.extend(["lower_ddrm", "upper_ddrm"]);
                }
                if m.uses_eb() {
                    h.extend(["lower_eb", "upper_eb"]);
                }
                if truth.is_some() {
                    h.push("true_value");
                }
            }
        }
        h
    }

    fn observe(&mut self, fields: &[f64]) -> heavycs::Result<()> {
        match self {
            Engine::Lower { state, .. } => state.observe(fields[0]),
            Engine::OffPolicy { cs, truth } => {
                cs.observe(fields[0], fields[1])?;
                if let Some(sum) = truth {
                    *sum += fields[2];
                }
                Ok(())
            }
        }
    }

    fn t(&self) -> u64 {
        match self {
            Engine::Lower { state, .. } => state.t(),
            Engine::OffPolicy { cs, .. } => cs.t(),
        }
    }

    fn row(&mut self) -> heavycs::Result<Vec<String>> {
        match self {
            Engine::Lower { state, running } => {
                let b: Bounds = state.query()?;
                let mut row = vec![b.t.to_string(), float(b.sum_x)];
                for side in [b.ddrm, b.eb].into_iter().flatten() {
                    row.push(float(side.pick(*running)));
                }
                Ok(row)
            }
            Engine::OffPolicy { cs, truth } => {
                let b: OffPolicyBounds = cs.query()?;
                let mut row = vec![b.t.to_string(), float(b.lower_side.sum_x)];
                for iv in [b.ddrm, b.eb].into_iter().flatten() {
                    row.push(float(iv.lower));
                    row.push(float(iv.upper));
                }
                if let Some(sum) = truth {
                    row.push(float(*sum / b.t as f64));
                }
                Ok(row)
            }
        }
    }
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|f| f.parse::<f64>().ok()).collect()
}

pub fn run(args: &CsArgs) -> CliResult<()> {
    let config = args.boundary.config()?;
    if args.every == Some(0) {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    let input: Box<dyn Read> = match &args.input {
        Some(p) if p.as_os_str() != "-" => Box::new(File::open(p)?),
        _ => Box::new(io::stdin().lock()),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);

    let mut out = csv_writer(args.output.out.as_deref())?;
    let mut engine: Option<Engine> = None;
    let mut columns = 0;
    let mut emitted_at = 0;
    let mut record = csv::StringRecord::new();
    let mut first = true;

    let emit = |t: u64| match args.every {
        Some(n) => t % n == 0,
        None => default_cadence(t),
    };

    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        let parsed = parse_row(&record);
        if first {
            first = false;
            columns = record.len();
            if !(2..=4).contains(&columns) {
                return Err(CliError::Data {
                    line,
                    reason: format!("expected rows `t,x`, `t,w,r` or `t,w,r,true_value`, found {columns} fields"),
                });
            }
            engine = Some(if columns == 2 {
                Engine::Lower {
                    state: CsState::new(config)?,
                    running: args.running_max,
                }
            } else {
                Engine::OffPolicy {
                    cs: OffPolicyCs::new(config, !args.per_side_alpha)?
                        .with_running_max(args.running_max),
                    truth: (columns == 4).then_some(0.0),
                }
            });
            out.write_record(engine.as_ref().unwrap().header(&config))?;
            if parsed.is_none() {
                continue;
            }
        }
        if record.len() != columns {
            return Err(CliError::Data {
                line,
                reason: format!("expected {columns} fields, found {}", record.len()),
            });
        }
        let values = parsed.ok_or_else(|| CliError::Data {
            line,
            reason: "non-numeric field".into(),
        })?;
        let engine = engine.as_mut().unwrap();
        engine
            .observe(&values[1..])
            .map_err(|e| CliError::from(e).at_line(line))?;
        let t = engine.t();
        if emit(t) {
            out.write_record(engine.row()?)?;
            emitted_at = t;
        }
    }

    match engine.as_mut() {
        Some(engine) if engine.t() > emitted_at => out.write_record(engine.row()?)?,
        Some(_) => {}
        None => {
            let header = Engine::Lower {
                state: CsState::new(config)?,
                running: false,
            }
            .header(&config);
            out.write_record(header)?;
        }
    }
    out.flush()?;
    Ok(())
}
