//! Parsing of threshold grids and sample-size schedules.

use crate::{config, CliResult};

/// `lo:hi:step` (inclusive, values rounded to 12 decimals) or a comma list.
pub fn parse_float_grid(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return config("empty grid");
    }
    let num = |t: &str| -> CliResult<f64> {
        match t.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => config(format!("bad number {t:?} in grid {s:?}")),
        }
    };
    let out: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return config(format!("grid {s:?}: expected LO:HI:STEP"));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || hi < lo {
            return config(format!("grid {s:?}: need LO <= HI and STEP > 0"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return config(format!("grid {s:?} has too many points"));
        }
        (0..count)
            .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        s.split(',').map(num).collect::<CliResult<_>>()?
    };
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return config(format!("grid {s:?} is not strictly increasing"));
    }
    Ok(out)
}

/// `start:end:step` or a comma list of positive integers, strictly
/// increasing.
pub fn parse_schedule(s: &str) -> CliResult<Vec<u64>> {
    let s = s.trim();
    let out = if s.contains(':') {
        maxitive::asymptotics::parse_schedule(s)?
    } else {
        s.split(',')
            .map(|t| match t.trim().parse::<u64>() {
                Ok(n) if n > 0 => Ok(n),
                _ => config(format!("bad sample size {t:?} in schedule {s:?}")),
            })
            .collect::<CliResult<Vec<u64>>>()?
    };
    if out.is_empty() || out.windows(2).any(|w| w[0] >= w[1]) {
        return config(format!("schedule {s:?} must be nonempty and strictly increasing"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(
            parse_float_grid("0.5:0.95:0.05").unwrap(),
            [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
        );
        assert_eq!(parse_float_grid("1,2.5").unwrap(), [1.0, 2.5]);
        assert!(parse_float_grid("").is_err());
        assert!(parse_float_grid("2,1").is_err());
        assert!(parse_float_grid("1:0:0.1").is_err());
        assert_eq!(parse_schedule("100:300:100").unwrap(), [100, 200, 300]);
        assert_eq!(parse_schedule("5,7").unwrap(), [5, 7]);
        assert!(parse_schedule("7,5").is_err());
        assert!(parse_schedule("0,5").is_err());
    }
}
