//! Small parsers for command-line value languages: numeric grids, payoff
//! specs, and hedge instrument specs.

use std::path::Path;

use affine_pricer_core::{Error, Payoff, Result, WeightDensity};

/// Grid syntax: a single number, a comma list "a,b,c", or "a:b:n" for n
/// evenly spaced points from a to b inclusive.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::Parse(format!("grid '{text}': {msg}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:n"));
        }
        let a: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let b: f64 = parts[1].parse().map_err(|_| bad("bad end"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
        if n == 0 {
            return Err(bad("count must be positive"));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        let step = (b - a) / (n - 1) as f64;
        return Ok((0..n).map(|i| a + step * i as f64).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad number")))
        .collect()
}

fn split_spec(text: &str) -> (&str, Option<&str>) {
    match text.split_once(':') {
        Some((head, rest)) => (head, Some(rest)),
        None => (text, None),
    }
}

fn numeric_arg(spec: &str, arg: Option<&str>) -> Result<f64> {
    arg.and_then(|a| a.parse().ok())
        .ok_or_else(|| Error::Parse(format!("payoff '{spec}' needs a numeric argument")))
}

/// Whitespace-separated (x, value) pairs, one per line; # starts a comment.
pub fn parse_pair_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                Error::Parse(format!(
                    "{}:{}: expected two numbers",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let x = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Parse(format!(
                "{}:{}: expected two numbers",
                path.display(),
                lineno + 1
            )));
        }
        pairs.push((x, v));
    }
    Ok(pairs)
}

/// Payoff mini-language: call:K, put:K, digital:K, power:P,
/// truncated-log:FLOOR, piecewise:FILE.
pub fn parse_payoff(text: &str) -> Result<Payoff> {
    let (head, arg) = split_spec(text);
    match head {
        "call" => Ok(Payoff::Call {
            strike: numeric_arg(text, arg)?,
        }),
        "put" => Ok(Payoff::Put {
            strike: numeric_arg(text, arg)?,
        }),
        "digital" => Ok(Payoff::Digital {
            strike: numeric_arg(text, arg)?,
        }),
        "power" => Ok(Payoff::Power {
            power: numeric_arg(text, arg)?,
        }),
        "truncated-log" => Ok(Payoff::TruncatedLog {
            floor: numeric_arg(text, arg)?,
        }),
        "piecewise" => {
            let path = arg.ok_or_else(|| {
                Error::Parse(format!("payoff '{text}' needs a knot file path"))
            })?;
            Ok(Payoff::PiecewiseLinear {
                knots: parse_pair_file(Path::new(path))?,
            })
        }
        _ => Err(Error::Parse(format!(
            "unknown payoff '{text}' (expected call, put, digital, power, truncated-log, piecewise)"
        ))),
    }
}

/// Density spec: default-aware, uniform, or table:FILE.
pub fn parse_density(text: &str) -> Result<WeightDensity> {
    let (head, arg) = split_spec(text);
    match (head, arg) {
        ("default-aware", None) => Ok(WeightDensity::DefaultAware),
        ("uniform", None) => Ok(WeightDensity::Uniform),
        ("table", Some(path)) => Ok(WeightDensity::Table(parse_pair_file(Path::new(path))?)),
        _ => Err(Error::Parse(format!(
            "unknown density '{text}' (expected default-aware, uniform, table:FILE)"
        ))),
    }
}

/// Hedge target/instrument language: stock, gov-bond, corp-bond, call:K,
/// power:P.
#[derive(Clone, Debug, PartialEq)]
pub enum Instrument {
    Stock,
    GovBond,
    CorpBond,
    Call { strike: f64 },
    Power { power: f64 },
}

impl Instrument {
    pub fn label(&self) -> String {
        match self {
            Instrument::Stock => "stock".into(),
            Instrument::GovBond => "gov-bond".into(),
            Instrument::CorpBond => "corp-bond".into(),
            Instrument::Call { strike } => format!("call:{strike}"),
            Instrument::Power { power } => format!("power:{power}"),
        }
    }
}

pub fn parse_instrument(text: &str) -> Result<Instrument> {
    let (head, arg) = split_spec(text);
    match (head, arg) {
        ("stock", None) => Ok(Instrument::Stock),
        ("gov-bond", None) => Ok(Instrument::GovBond),
        ("corp-bond", None) => Ok(Instrument::CorpBond),
        ("call", _) => Ok(Instrument::Call {
            strike: numeric_arg(text, arg)?,
        }),
        ("power", _) => Ok(Instrument::Power {
            power: numeric_arg(text, arg)?,
        }),
        _ => Err(Error::Parse(format!(
            "unknown instrument '{text}' (expected stock, gov-bond, corp-bond, call:K, power:P)"
        ))),
    }
}

/// One instrument per line; # starts a comment.
pub fn parse_instrument_file(path: &Path) -> Result<Vec<Instrument>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_instrument(line)?);
    }
    if out.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no instruments found",
            path.display()
        )));
    }
    Ok(out)
}
