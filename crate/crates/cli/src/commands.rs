use std::fmt;
use std::io::{self, Read, Write};

use observer_core::analysis::{
    dc_derivatives, flatness_targets, frequency_table, impulse_response, optimal_lag_k2,
    step_response_from_rest, step_response_table, wng_closed_k2, wng_numeric,
};
use observer_core::pole_place::memory_to_pole;
use observer_core::{design, extract_transfer, DesignResult, Error, ObserverSpec, ProcessModel};

use crate::args::{AnalysisArg, Command, DesignArgs, Emit, FormArg};
use crate::document::DesignDocument;

/// Memory lengths along the columns of both white-noise gain tables.
pub const TABLE_MEMORIES: [f64; 5] = [2.0, 4.0, 8.0, 12.0, 16.0];
/// Lags along the rows of the first table.
pub const TABLE_LAGS: [f64; 3] = [1.0, 0.0, -1.0];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Design(Error),
    Data(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Design(_) => 3,
            CliError::Data(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Design(e) => write!(f, "design infeasible: {e}"),
            CliError::Data(m) => write!(f, "bad input data: {m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Sorts library errors into parameter mistakes and infeasible designs.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unobservable
            | Error::Uncontrollable
            | Error::UnstablePoles { .. }
            | Error::PolePlacement(_)
            | Error::Singular { .. }
            | Error::NonConvergent
            | Error::PoleOnUnitCircle(_)
            | Error::PoleAtOne => CliError::Design(e),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CliError::Io(io),
                _ => unreachable!(),
            }
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn build(args: &DesignArgs) -> CliResult<(DesignResult, crate::args::Placement)> {
    let spec = args.spec().map_err(CliError::Usage)?;
    let placement = args.placement().map_err(CliError::Usage)?;
    Ok((design(&spec)?, placement))
}

pub fn run(command: &Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Design { design, form } => cmd_design(design, *form, out),
        Command::Analyze { design, what } => cmd_analyze(design, what, out),
        Command::Filter {
            design,
            input,
            emit,
        } => {
            let text = read_input(input)?;
            cmd_filter(design, &text, *emit, out)
        }
        Command::Tables { table } => cmd_tables(*table, out),
    }
}

pub fn cmd_design(args: &DesignArgs, form: FormArg, out: &mut dyn Write) -> CliResult<()> {
    let (design, placement) = build(args)?;
    let doc = DesignDocument::build(&design, &placement, &form.forms())?;
    writeln!(out, "{}", doc.to_json())?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Shortest text that parses back to the same double, with an exponent for
/// very small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn fields(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| num(v)).collect()
}

pub fn cmd_analyze(args: &DesignArgs, what: &AnalysisArg, out: &mut dyn Write) -> CliResult<()> {
    let (design, _) = build(args)?;
    let tf = extract_transfer(&design)?;
    let mut w = csv_writer(out);
    if what.wng {
        w.write_record(["quantity", "value"])?;
        w.write_record(["wng".to_string(), num(wng_numeric(&tf)?)])?;
        if let (2, 0, Some(p)) = (design.order(), design.spec.deriv, design.spec.repeated_pole()) {
            let closed = wng_closed_k2(p, design.spec.lag);
            w.write_record(["wng_closed_form".to_string(), num(closed)])?;
            if (0.0..1.0).contains(&p) {
                w.write_record(["q_opt".to_string(), num(optimal_lag_k2(p))])?;
            }
        }
    } else if what.freq {
        w.write_record(["f", "re", "im", "magnitude_db", "phase_deg"])?;
        for point in frequency_table(&tf)? {
            w.write_record(fields(&[
                point.frequency(),
                point.value.re,
                point.value.im,
                point.magnitude_db(),
                point.phase_deg(),
            ]))?;
        }
    } else if let Some(n_max) = what.step {
        let initialized = step_response_table(&design, n_max)?;
        let from_rest = step_response_from_rest(&tf, n_max);
        w.write_record(["n", "x", "y", "y_from_rest"])?;
        for (n, (y, r)) in initialized.iter().zip(&from_rest).enumerate() {
            w.write_record([n.to_string(), "1".into(), num(*y), num(*r)])?;
        }
    } else if what.impulse {
        w.write_record(["n", "h"])?;
        for (n, h) in impulse_response(&tf, 1e-14)?.iter().enumerate() {
            w.write_record([n.to_string(), num(*h)])?;
        }
    } else if what.flatness {
        let count = design.order() + 1;
        let measured = dc_derivatives(&tf, count)?;
        let targets = flatness_targets(design.spec.deriv, design.spec.lag, design.ts(), count);
        w.write_record([
            "k",
            "measured_re",
            "measured_im",
            "target_re",
            "target_im",
            "deviation",
        ])?;
        for (k, (m, t)) in measured.iter().zip(&targets).enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(fields(&[m.re, m.im, t.re, t.im, (m - t).norm()]));
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_input(path: &str) -> CliResult<String> {
    let mut text = String::new();
    if path == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
    }
    Ok(text)
}

/// One input sample: the optional sample label and the value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: Option<String>,
    pub value: f64,
}

/// Reads a single column of values or `n,value` pairs. A first row that
/// does not parse is taken as a header. Every later row must have the same
/// width and numeric cells.
pub fn parse_signal(text: &str) -> CliResult<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            if !(1..=2).contains(&record.len()) {
                return Err(CliError::Data(format!(
                    "line {line}: expected 1 or 2 columns, found {}",
                    record.len()
                )));
            }
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::Data(format!(
                "line {line}: expected {expected} columns, found {}",
                record.len()
            )));
        }
        if !(1..=2).contains(&expected) {
            return Err(CliError::Data(format!(
                "line {line}: expected 1 or 2 columns, found {expected}"
            )));
        }
        if let Some(col) = parsed.iter().position(Option::is_none) {
            return Err(CliError::Data(format!(
                "line {line}: non-numeric cell '{}'",
                &record[col]
            )));
        }
        let value = parsed[expected - 1].unwrap();
        let label = (expected == 2).then(|| record[0].to_string());
        samples.push(Sample { label, value });
    }
    Ok(samples)
}

/// Runs the kinematic realization over the signal, initialized on the first
/// sample so that a steady input produces no start-up transient.
pub fn cmd_filter(args: &DesignArgs, text: &str, emit: Emit, out: &mut dyn Write) -> CliResult<()> {
    let samples = parse_signal(text)?;
    let (design, _) = build(args)?;
    let ss = &design.kin;
    let mut w = csv_writer(out);
    let mut header = vec!["n".to_string(), "x".to_string(), "y".to_string()];
    if emit == Emit::State {
        header.extend((0..design.order()).map(|k| format!("state_{k}")));
    }
    w.write_record(&header)?;

    let mut state = None;
    for (n, sample) in samples.iter().enumerate() {
        let y = match state.as_mut() {
            None => {
                let s = ss.initial_state(sample.value);
                let y = ss.output(&s)?;
                state = Some(s);
                y
            }
            Some(s) => ss.step(s, sample.value)?,
        };
        let mut row = vec![
            sample.label.clone().unwrap_or_else(|| n.to_string()),
            num(sample.value),
            num(y),
        ];
        if emit == Emit::State {
            let s = state.as_ref().expect("state is set after the first sample");
            row.extend(fields(&ss.kinematic(s)?));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn table_design(l: f64, lag: f64) -> CliResult<DesignResult> {
    let p = memory_to_pole(l)?;
    let process = ProcessModel::new(2, 1.0)?;
    Ok(design(&ObserverSpec::repeated(process, p, lag, 0)?)?)
}

/// White-noise gain of the second-order smoother over the memory grid:
/// table 1 at lags 1, 0 and -1, table 2 at the optimal lag.
pub fn cmd_tables(table: u8, out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv_writer(out);
    let mut header = vec![if table == 1 { "q" } else { "quantity" }.to_string()];
    header.extend(TABLE_MEMORIES.iter().map(|l| format!("l={l}")));
    w.write_record(&header)?;
    if table == 1 {
        for q in TABLE_LAGS {
            let mut row = vec![num(q)];
            for l in TABLE_MEMORIES {
                let tf = extract_transfer(&table_design(l, q)?)?;
                row.push(num(wng_numeric(&tf)?));
            }
            w.write_record(&row)?;
        }
    } else {
        let mut lags = vec!["q_opt".to_string()];
        let mut gains = vec!["wng".to_string()];
        for l in TABLE_MEMORIES {
            let q = optimal_lag_k2(memory_to_pole(l)?);
            let tf = extract_transfer(&table_design(l, q)?)?;
            lags.push(num(q));
            gains.push(num(wng_numeric(&tf)?));
        }
        w.write_record(&lags)?;
        w.write_record(&gains)?;
    }
    w.flush()?;
    Ok(())
}
