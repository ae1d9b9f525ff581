use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use observer_core::pole_place::{memory_to_pole, ObserverSpec};
use observer_core::{Complex, Form, ProcessModel};

#[derive(Parser, Debug)]
#[command(name = "observer", version, about = "Design and analyse fixed-gain tracking observers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Place the poles and print the full design as JSON
    Design {
        #[command(flatten)]
        design: DesignArgs,
        /// Realizations to include
        #[arg(long, value_enum, default_value_t = FormArg::All)]
        form: FormArg,
    },
    /// Print one response table of the designed filter as CSV
    Analyze {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        what: AnalysisArg,
    },
    /// Run a CSV signal through the designed filter
    Filter {
        #[command(flatten)]
        design: DesignArgs,
        /// Input CSV: one value per row, or `n,value` pairs; `-` reads stdin
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t = Emit::Position)]
        emit: Emit,
    },
    /// Regenerate the white-noise gain tables for the second-order smoother
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        table: u8,
    },
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("placement").required(true).args(["pole", "memory", "poles"])))]
pub struct DesignArgs {
    /// Observer order K (number of integrators)
    #[arg(long)]
    pub order: usize,
    /// Place all poles at this real value
    #[arg(long, allow_hyphen_values = true)]
    pub pole: Option<f64>,
    /// Place all poles at exp(-1/memory)
    #[arg(long)]
    pub memory: Option<f64>,
    /// Comma-separated poles: `a`, `a+bi`, `a-bi`, or `a±bi` for a pair
    #[arg(long, allow_hyphen_values = true)]
    pub poles: Option<String>,
    /// Output lag in samples; negative values predict
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lag: f64,
    /// Sampling period in seconds
    #[arg(long, default_value_t = 1.0)]
    pub ts: f64,
    /// Derivative sent to the output (0 = position)
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    /// Accept poles on or outside the unit circle
    #[arg(long)]
    pub allow_unstable: bool,
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("analysis").required(true).multiple(false)))]
pub struct AnalysisArg {
    /// White-noise gain (plus closed form and optimal lag for K = 2)
    #[arg(long, group = "analysis")]
    pub wng: bool,
    /// Frequency response on 1024 points from 0 to 0.5 cycles per sample
    #[arg(long, group = "analysis")]
    pub freq: bool,
    /// Unit-step response for n = 0..=N
    #[arg(long, group = "analysis", value_name = "N")]
    pub step: Option<usize>,
    /// Impulse response until the remaining energy is negligible
    #[arg(long, group = "analysis")]
    pub impulse: bool,
    /// Near-dc derivatives against the ideal delayed differentiator
    #[arg(long, group = "analysis")]
    pub flatness: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormArg {
    Kin,
    Pcf,
    Ocf,
    Ccf,
    All,
}

impl FormArg {
    pub fn forms(self) -> Vec<Form> {
        match self {
            FormArg::Kin => vec![Form::Kin],
            FormArg::Pcf => vec![Form::Pcf],
            FormArg::Ocf => vec![Form::Ocf],
            FormArg::Ccf => vec![Form::Ccf],
            FormArg::All => Form::ALL.to_vec(),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Position,
    State,
}

/// Parses `a`, `a+bi`, `a-bi` or `a±bi` (a conjugate pair).
pub fn parse_pole(text: &str) -> Result<Vec<Complex>, String> {
    let t = text.trim();
    let bad = || format!("cannot parse pole '{text}'");
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if let Some((re, im)) = t.split_once('±') {
        let im = num(im.strip_suffix('i').ok_or_else(bad)?)?;
        let re = num(re)?;
        return Ok(vec![Complex::new(re, im), Complex::new(re, -im)]);
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(vec![Complex::new(num(t)?, 0.0)]);
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Ok(vec![Complex::new(num(&body[..i])?, num(&body[i..])?)]),
        None => Ok(vec![Complex::new(0.0, num(body)?)]),
    }
}

pub fn parse_pole_list(text: &str) -> Result<Vec<Complex>, String> {
    let mut out = Vec::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        out.extend(parse_pole(item)?);
    }
    Ok(out)
}

/// Where the poles came from, echoed in the design document.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Pole(f64),
    Memory(f64),
    List(Vec<Complex>),
}

impl DesignArgs {
    pub fn placement(&self) -> Result<Placement, String> {
        match (&self.pole, &self.memory, &self.poles) {
            (Some(p), None, None) => Ok(Placement::Pole(*p)),
            (None, Some(l), None) => Ok(Placement::Memory(*l)),
            (None, None, Some(list)) => Ok(Placement::List(parse_pole_list(list)?)),
            _ => Err("give exactly one of --pole, --memory, --poles".into()),
        }
    }

    /// Builds the observer specification. Errors here are usage errors.
    pub fn spec(&self) -> Result<ObserverSpec, String> {
        let process = ProcessModel::new(self.order, self.ts).map_err(|e| e.to_string())?;
        let poles = match self.placement()? {
            Placement::Pole(p) => vec![Complex::new(p, 0.0); self.order],
            Placement::Memory(l) => {
                let p = memory_to_pole(l).map_err(|e| e.to_string())?;
                vec![Complex::new(p, 0.0); self.order]
            }
            Placement::List(list) => list,
        };
        let spec = ObserverSpec::new(process, poles, self.lag, self.deriv).map_err(|e| e.to_string())?;
        Ok(if self.allow_unstable { spec.allow_unstable() } else { spec })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_syntax() {
        assert_eq!(parse_pole("0.5").unwrap(), vec![Complex::new(0.5, 0.0)]);
        assert_eq!(parse_pole("-0.5").unwrap(), vec![Complex::new(-0.5, 0.0)]);
        assert_eq!(parse_pole("0.6+0.1i").unwrap(), vec![Complex::new(0.6, 0.1)]);
        assert_eq!(parse_pole("0.6-0.1i").unwrap(), vec![Complex::new(0.6, -0.1)]);
        assert_eq!(parse_pole("-0.6-1e-2i").unwrap(), vec![Complex::new(-0.6, -0.01)]);
        assert_eq!(parse_pole("0.2i").unwrap(), vec![Complex::new(0.0, 0.2)]);
        assert_eq!(
            parse_pole("0.6±0.1i").unwrap(),
            vec![Complex::new(0.6, 0.1), Complex::new(0.6, -0.1)]
        );
        assert!(parse_pole("abc").is_err());
        assert_eq!(parse_pole_list("0.5, 0.6±0.1i").unwrap().len(), 3);
    }
}
