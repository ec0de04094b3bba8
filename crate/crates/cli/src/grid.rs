//! Value lists on the command line: `a`, `a:b:step`, or comma-separated
//! combinations of both.

/// Upper bound on the number of points a single list may expand to.
const MAX_POINTS: usize = 100_000;

/// SNR points in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

/// Numbers of high-resolution ADC pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KList(pub Vec<usize>);

pub fn parse_snr_grid(s: &str) -> Result<SnrGrid, String> {
    parse_reals(s).map(SnrGrid)
}

pub fn parse_k_list(s: &str) -> Result<KList, String> {
    let mut out = Vec::new();
    for item in items(s)? {
        let parts: Vec<&str> = item.split(':').collect();
        match parts[..] {
            [v] => out.push(parse_count(v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_count(a)?, parse_count(b)?, parse_count(step)?);
                if step == 0 || b < a {
                    return Err(format!("`{item}` needs step > 0 and end >= start"));
                }
                if (b - a) / step >= MAX_POINTS {
                    return Err(format!("`{item}` has too many points"));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return Err(format!("`{item}` is neither a count nor start:end:step")),
        }
    }
    Ok(KList(out))
}

/// Real values; ranges include the end point up to rounding and are snapped
/// to 1e-9 so that e.g. `0:1:0.1` prints as `0.3`, not `0.30000000000000004`.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in items(s)? {
        let parts: Vec<&str> = item.split(':').collect();
        match parts[..] {
            [v] => out.push(parse_real(v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_real(a)?, parse_real(b)?, parse_real(step)?);
                if step <= 0.0 || b < a {
                    return Err(format!("`{item}` needs step > 0 and end >= start"));
                }
                let count = ((b - a) / step + 1e-9).floor();
                if count >= MAX_POINTS as f64 {
                    return Err(format!("`{item}` has too many points"));
                }
                out.extend((0..=count as usize).map(|i| snap(a + i as f64 * step)));
            }
            _ => return Err(format!("`{item}` is neither a number nor start:end:step")),
        }
    }
    Ok(out)
}

pub fn parse_positive(s: &str) -> Result<usize, String> {
    match parse_count(s)? {
        0 => Err("must be at least 1".into()),
        v => Ok(v),
    }
}

fn items(s: &str) -> Result<Vec<&str>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().any(|i| i.is_empty()) {
        return Err(format!("empty entry in `{s}`"));
    }
    Ok(items)
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

pub fn snap(x: f64) -> f64 {
    let y = (x * 1e9).round() / 1e9;
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_values() {
        assert_eq!(parse_snr_grid("0").unwrap(), SnrGrid(vec![0.0]));
        assert_eq!(parse_snr_grid("-7.5").unwrap(), SnrGrid(vec![-7.5]));
        assert_eq!(parse_k_list("20").unwrap(), KList(vec![20]));
    }

    #[test]
    fn ranges_include_end() {
        assert_eq!(
            parse_reals("-10:10:5").unwrap(),
            vec![-10.0, -5.0, 0.0, 5.0, 10.0]
        );
        assert_eq!(parse_reals("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_reals("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_reals("0:0.95:0.1").unwrap().len(), 10);
        assert_eq!(parse_k_list("0:100:10").unwrap().0.len(), 11);
        assert_eq!(parse_k_list("0:25:10").unwrap(), KList(vec![0, 10, 20]));
    }

    #[test]
    fn comma_lists() {
        assert_eq!(parse_k_list("10,20").unwrap(), KList(vec![10, 20]));
        assert_eq!(parse_k_list("1, 5:7:1").unwrap(), KList(vec![1, 5, 6, 7]));
        assert_eq!(parse_reals("-5,0,5").unwrap(), vec![-5.0, 0.0, 5.0]);
    }

    #[test]
    fn negative_zero_is_normalized() {
        let v = parse_reals("-1:1:0.5").unwrap();
        assert_eq!(v[2].to_string(), "0");
    }

    #[test]
    fn rejects_malformed() {
        for s in [
            "", "a", "1:2", "1:2:3:4", "5:1:1", "0:1:0", "0:1:-1", "nan", "inf", "1,,2",
        ] {
            assert!(parse_reals(s).is_err(), "{s}");
        }
        for s in ["-1", "1.5", "5:1:1", "0:10:0", "x"] {
            assert!(parse_k_list(s).is_err(), "{s}");
        }
        assert!(parse_reals("0:1e9:1e-3").is_err());
        assert!(parse_positive("0").is_err());
        assert_eq!(parse_positive("3").unwrap(), 3);
    }
}
