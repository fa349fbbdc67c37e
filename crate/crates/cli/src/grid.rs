use std::str::FromStr;

/// One or more values: `0.5`, `0.1,0.2,0.4` or `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl Grid {
    /// The only value, or an error naming `what` when a list was given.
    pub fn single(&self, what: &str) -> Result<f64, String> {
        match self.0.as_slice() {
            [v] => Ok(*v),
            _ => Err(format!("--{what} takes a single value here, got {} values", self.0.len())),
        }
    }
}

/// Digits after the decimal point as written, `None` for exponent notation.
fn decimals(s: &str) -> Option<i32> {
    let s = s.trim();
    if s.contains(['e', 'E']) {
        return None;
    }
    Some(s.split_once('.').map_or(0, |(_, d)| d.len() as i32))
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Grid(Vec::new()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [_] => s.split(',').map(number).collect::<Result<Vec<_>, _>>().map(Grid),
            [a_s, b_s, h_s] => {
                let (a, b, h) = (number(a_s)?, number(b_s)?, number(h_s)?);
                if !(h > 0.0) || b < a {
                    return Err(format!("range {s:?} needs start <= stop and a positive step"));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                if n > 10_000_000 {
                    return Err(format!("range {s:?} has too many points"));
                }
                // snap to the precision the range was written in
                let scale = match (decimals(a_s), decimals(h_s)) {
                    (Some(x), Some(y)) if x.max(y) <= 12 => Some(10f64.powi(x.max(y))),
                    _ => None,
                };
                let at = |i: usize| {
                    let v = a + h * i as f64;
                    scale.map_or(v, |s| (v * s).round() / s)
                };
                Ok(Grid((0..=n).map(at).collect()))
            }
            _ => Err(format!("expected a value, a comma list or start:stop:step, got {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!("0.5".parse::<Grid>().unwrap().0, vec![0.5]);
        assert_eq!("1, 2,4".parse::<Grid>().unwrap().0, vec![1.0, 2.0, 4.0]);
        let g = "-1:1:0.5".parse::<Grid>().unwrap().0;
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], 1.0);
        assert_eq!("0:0.95:0.05".parse::<Grid>().unwrap().0[19], 0.95);
        assert_eq!("-10:3:0.025".parse::<Grid>().unwrap().0[396], -0.1);
        assert!("".parse::<Grid>().unwrap().0.is_empty());
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["a", "1:2", "2:1:0.1", "0:1:0", "1,,2", "nan", "0:1:-1"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
