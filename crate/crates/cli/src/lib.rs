//! Building blocks of the `spinmoment` command-line tool: moment files,
//! reports, scan CSV I/O and argument parsing helpers.

pub mod momentfile;
pub mod report;
pub mod scanio;

use anyhow::{bail, Context, Result};
use spinmoment::SpinNumber;

/// Environment variable capping scan parallelism.
pub const THREADS_ENV: &str = "SPINMOMENT_THREADS";

/// Parses a spin number written as `5`, `5/2` or `2.5`.
pub fn parse_spin(s: &str) -> Result<SpinNumber> {
    let s = s.trim();
    let two_j = if let Some((num, den)) = s.split_once('/') {
        let num: u32 = num.trim().parse().with_context(|| format!("invalid spin '{s}'"))?;
        match den.trim() {
            "2" => num,
            "1" => 2 * num,
            _ => bail!("invalid spin '{s}': denominator must be 1 or 2"),
        }
    } else {
        let x: f64 = s.parse().with_context(|| format!("invalid spin '{s}'"))?;
        let t = 2.0 * x;
        if !(t.is_finite() && t >= 0.0 && (t - t.round()).abs() < 1e-12 && t <= u32::MAX as f64) {
            bail!("invalid spin '{s}': must be a positive multiple of 1/2");
        }
        t.round() as u32
    };
    Ok(SpinNumber::new(two_j)?)
}

/// Parses `n` comma-separated reals.
pub fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("invalid number '{}'", x.trim())))
        .collect::<Result<_>>()?;
    if xs.len() != n {
        bail!("expected {n} comma-separated numbers, found {}", xs.len());
    }
    if xs.iter().any(|x| !x.is_finite()) {
        bail!("numbers must be finite");
    }
    Ok(xs)
}

/// Worker count from `SPINMOMENT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV} must be a positive integer, found '{v}'"),
        },
        Err(_) => Ok(None),
    }
}
