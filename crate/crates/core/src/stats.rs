//! Poll files, Pearson correlation and simple least-squares regression.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geo::StateCode;

/// Support-fraction values that mark a row still waiting for data.
pub const PLACEHOLDERS: [&str; 4] = ["", "?", "NA", "TBD"];

#[derive(Debug, Clone, PartialEq)]
pub struct PollRecord {
    pub state: StateCode,
    pub end_date: NaiveDate,
    /// `None` for placeholder rows.
    pub support_fraction: Option<f64>,
}

/// Reads `state,end_date,support_fraction` rows. A header row, blank lines and
/// `#` comments are skipped. Dates are ISO `YYYY-MM-DD` or US `M/D/YYYY`.
pub fn load_polls<R: BufRead>(reader: R, origin: &str) -> Result<Vec<PollRecord>> {
    let mut polls = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(origin, lineno, format!("expected 3 fields, found {}", fields.len())));
        }
        if polls.is_empty() && fields[0].eq_ignore_ascii_case("state") {
            continue;
        }
        let state = StateCode::from_name_or_code(fields[0])
            .ok_or_else(|| Error::parse(origin, lineno, format!("unknown state {:?}", fields[0])))?;
        let end_date = NaiveDate::parse_from_str(fields[1], "%Y-%m-%d")
            .or_else(|_| NaiveDate::parse_from_str(fields[1], "%m/%d/%Y"))
            .map_err(|_| Error::parse(origin, lineno, format!("bad date {:?}", fields[1])))?;
        let support_fraction = if PLACEHOLDERS.contains(&fields[2]) {
            None
        } else {
            let v: f64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad support fraction {:?}", fields[2])))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(origin, lineno, format!("support fraction {v} outside [0, 1]")));
            }
            Some(v)
        };
        polls.push(PollRecord {
            state,
            end_date,
            support_fraction,
        });
    }
    Ok(polls)
}

pub fn load_polls_file(path: &Path) -> Result<Vec<PollRecord>> {
    let f = File::open(path).map_err(Error::at(path))?;
    load_polls(BufReader::new(f), &path.display().to_string())
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::argument(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::argument("need at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::argument("non-finite value"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Centered sums `(Sxx, Syy, Sxy)` and means, computed in two passes.
fn moments(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::argument("zero variance"));
    }
    Ok((mx, my, sxx, syy, sxy))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (_, _, sxx, syy, sxy) = moments(x, y)?;
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let (mx, my, sxx, syy, sxy) = moments(x, y)?;
    let slope = sxy / sxx;
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: r * r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PollPair {
    pub state: StateCode,
    pub end_date: NaiveDate,
    pub poll_support: f64,
    pub control_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub fit: LinearFit,
    /// One row per matched poll, in input order.
    pub pairs: Vec<PollPair>,
}

impl Correlation {
    pub fn summary(&self) -> String {
        format!(
            "r={} slope={} intercept={} r2={} n={}",
            self.r,
            self.fit.slope,
            self.fit.intercept,
            self.fit.r_squared,
            self.pairs.len()
        )
    }

    /// `state<TAB>end_date<TAB>poll_support<TAB>control_share`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state\tend_date\tpoll_support\tcontrol_share")?;
        for p in &self.pairs {
            writeln!(out, "{}\t{}\t{}\t{}", p.state, p.end_date, p.poll_support, p.control_share)?;
        }
        Ok(())
    }
}

/// Pairs each poll with the Control share returned by `share_for`; polls
/// without a share are skipped. Matched placeholder rows are an error.
pub fn correlate_polls_with<F>(polls: &[PollRecord], mut share_for: F) -> Result<Correlation>
where
    F: FnMut(&PollRecord) -> Option<f64>,
{
    let mut pairs = Vec::new();
    for p in polls {
        let Some(share) = share_for(p) else { continue };
        let support = p.support_fraction.ok_or_else(|| {
            Error::argument(format!(
                "poll for {} ending {} has no support fraction; fill in the placeholder",
                p.state, p.end_date
            ))
        })?;
        pairs.push(PollPair {
            state: p.state,
            end_date: p.end_date,
            poll_support: support,
            control_share: share,
        });
    }
    if pairs.len() < 2 {
        return Err(Error::argument(format!(
            "{} poll(s) matched a state share; at least 2 are needed",
            pairs.len()
        )));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.poll_support).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.control_share).collect();
    Ok(Correlation {
        r: pearson(&x, &y)?,
        fit: least_squares(&x, &y)?,
        pairs,
    })
}

/// Each poll is paired with its state's share over the whole corpus.
pub fn correlate_polls(polls: &[PollRecord], shares: &BTreeMap<StateCode, f64>) -> Result<Correlation> {
    correlate_polls_with(polls, |p| shares.get(&p.state).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TABLE: &str = include_str!("../data/polls_2013.csv");

    // Textbook single-pass definition, independent of the two-pass code path.
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    // Normal equations [n Σx; Σx Σx²][a; b] = [Σy; Σxy] by Cramer's rule.
    fn normal_equation_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let det = n * sxx - sx * sx;
        let intercept = (sy * sxx - sx * sxy) / det;
        let slope = (n * sxy - sx * sy) / det;
        (slope, intercept)
    }

    #[test]
    fn perfect_lines() {
        let x = [1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(pearson(&x, &y).unwrap(), 1.0);
        let fit = least_squares(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
    }

    #[test]
    fn small_definitional_case() {
        let (x, y) = ([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 5.0]);
        assert!((pearson(&x, &y).unwrap() - pearson_oracle(&x, &y)).abs() < 1e-12);
        // Sxy = 5.5, Sxx = 5, Syy = 8.75.
        let expected = 5.5 / (5.0f64 * 8.75).sqrt();
        assert!((pearson(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(least_squares(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[4.0, 4.0]).is_err());
    }

    #[test]
    fn random_datasets_match_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(2013);
        for _ in 0..100 {
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| 0.4 * v + rng.random_range(-0.3..0.3)).collect();
            let r = pearson(&x, &y).unwrap();
            assert!((r - pearson_oracle(&x, &y)).abs() < 1e-12);
            let fit = least_squares(&x, &y).unwrap();
            let (b, a) = normal_equation_oracle(&x, &y);
            assert!((fit.slope - b).abs() < 1e-12);
            assert!((fit.intercept - a).abs() < 1e-12);
            assert!((fit.r_squared - r * r).abs() < 1e-12);
        }
    }

    #[test]
    fn bundled_poll_table() {
        let polls = load_polls(TABLE.as_bytes(), "polls").unwrap();
        assert_eq!(polls.len(), 20);
        let ga: StateCode = "GA".parse().unwrap();
        let dates: Vec<String> = polls.iter().filter(|p| p.state == ga).map(|p| p.end_date.to_string()).collect();
        assert_eq!(dates, ["2013-05-23", "2013-08-05"]);
        let states: std::collections::BTreeSet<_> = polls.iter().map(|p| p.state).collect();
        assert_eq!(states.len(), 16);
        assert!(polls.iter().all(|p| p.support_fraction.is_none()));
    }

    #[test]
    fn poll_parsing() {
        assert!(load_polls("".as_bytes(), "p").unwrap().is_empty());
        let ok = load_polls("state,end_date,support_fraction\nOhio,4/26/2013,0.8\nTX,2013-07-01,?\n".as_bytes(), "p").unwrap();
        assert_eq!(ok[0].support_fraction, Some(0.8));
        assert_eq!(ok[1].support_fraction, None);
        let err = load_polls("OH,2013-04-26,0.5\nOH,2013-04-26,1.7\n".as_bytes(), "p").unwrap_err();
        assert!(err.to_string().starts_with("p:2:"), "{err}");
        assert!(load_polls("Atlantis,2013-04-26,0.5\n".as_bytes(), "p").is_err());
        assert!(load_polls("OH,April,0.5\n".as_bytes(), "p").is_err());
    }

    #[test]
    fn correlation_rows_are_per_poll() {
        let polls = load_polls("GA,2013-05-23,0.6\nGA,2013-08-05,0.7\nTX,2013-07-01,0.5\nAK,2013-04-26,0.4\n".as_bytes(), "p").unwrap();
        let shares: BTreeMap<StateCode, f64> =
            [("GA", 0.65), ("TX", 0.5)].iter().map(|(s, v)| (s.parse().unwrap(), *v)).collect();
        let c = correlate_polls(&polls, &shares).unwrap();
        assert_eq!(c.pairs.len(), 3);
        assert!(c.summary().ends_with("n=3"));
        let exact: BTreeMap<StateCode, f64> =
            [("TX", 0.5), ("AK", 0.4)].iter().map(|(s, v)| (s.parse().unwrap(), *v)).collect();
        assert!((correlate_polls(&polls, &exact).unwrap().r - 1.0).abs() < 1e-12);
        let one: BTreeMap<StateCode, f64> = [("TX".parse().unwrap(), 0.5)].into_iter().collect();
        assert!(correlate_polls(&polls, &one).is_err());
    }

    #[test]
    fn placeholders_are_refused_when_matched() {
        let polls = load_polls("GA,2013-05-23,?\nTX,2013-07-01,0.5\n".as_bytes(), "p").unwrap();
        let shares: BTreeMap<StateCode, f64> =
            [("GA", 0.65), ("TX", 0.5)].iter().map(|(s, v)| (s.parse().unwrap(), *v)).collect();
        let err = correlate_polls(&polls, &shares).unwrap_err();
        assert!(err.to_string().contains("placeholder"));
    }

    fn points() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn pearson_is_symmetric((x, y) in points()) {
            if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn pearson_is_affine_invariant((x, y) in points(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            if let Ok(r) = pearson(&x, &y) {
                let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
                let r2 = pearson(&x2, &y).unwrap();
                prop_assert!((r - r2).abs() < 1e-12, "{r} vs {r2}");
            }
        }

        #[test]
        fn r_squared_is_r_squared((x, y) in points()) {
            if let (Ok(r), Ok(fit)) = (pearson(&x, &y), least_squares(&x, &y)) {
                prop_assert!((fit.r_squared - r * r).abs() < 1e-12);
            }
        }
    }
}
