use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stationarity transformation of a macro series, coded 1 to 7:
/// level, Δ, Δ², log, Δlog, Δ²log, Δ(y_t/y_{t−1} − 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TransformCode(u8);

impl TransformCode {
    pub fn new(code: u8) -> Result<Self> {
        if (1..=7).contains(&code) {
            Ok(Self(code))
        } else {
            Err(Error::data(format!("transformation code {code} is not in 1..=7")))
        }
    }

    pub fn code(&self) -> u8 {
        self.0
    }

    /// Observations lost at the start of the series.
    pub fn n_dropped(&self) -> usize {
        match self.0 {
            1 | 4 => 0,
            2 | 5 => 1,
            _ => 2,
        }
    }

    fn takes_logs(&self) -> bool {
        matches!(self.0, 4..=6)
    }
}

impl TryFrom<u8> for TransformCode {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        Self::new(code)
    }
}

impl From<TransformCode> for u8 {
    fn from(c: TransformCode) -> u8 {
        c.0
    }
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Apply `code` to `series`, dropping the leading values it leaves undefined.
/// `name` only labels errors.
pub fn apply_transform(series: &[f64], code: TransformCode, name: &str) -> Result<Vec<f64>> {
    if code.takes_logs() {
        if let Some((i, v)) = series.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::data(format!(
                "series {name}: value {v} at position {i} is not positive but transformation code {} takes logs",
                code.0
            )));
        }
    }
    if code.0 == 7 && series.iter().any(|v| *v == 0.0) {
        return Err(Error::data(format!("series {name}: growth ratios need nonzero values")));
    }
    let out = match code.0 {
        1 => series.to_vec(),
        2 => diff(series),
        3 => diff(&diff(series)),
        4 => series.iter().map(|v| v.ln()).collect(),
        5 => diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>()),
        6 => diff(&diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>())),
        7 => diff(&series.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>()),
        _ => unreachable!("validated on construction"),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(code: u8, x: &[f64]) -> Vec<f64> {
        apply_transform(x, TransformCode::new(code).unwrap(), "s").unwrap()
    }

    #[test]
    fn worked_values() {
        assert_eq!(t(5, &[1.0, std::f64::consts::E]), vec![1.0]);
        assert_eq!(t(2, &[1.0, 3.0]), vec![2.0]);
        assert_eq!(t(7, &[1.0, 2.0, 4.0]), vec![0.0]);
        assert_eq!(t(1, &[1.0, -3.0]), vec![1.0, -3.0]);
    }

    #[test]
    fn domain_errors() {
        assert!(TransformCode::new(0).is_err());
        assert!(TransformCode::new(8).is_err());
        let e = apply_transform(&[1.0, 0.0], TransformCode::new(5).unwrap(), "GDPC1").unwrap_err();
        assert!(matches!(e, Error::Data(ref m) if m.contains("GDPC1")));
        assert!(serde_json::from_str::<TransformCode>("9").is_err());
        assert_eq!(serde_json::from_str::<TransformCode>("6").unwrap().code(), 6);
    }

    #[test]
    fn dropped_counts_match_output_lengths() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        for c in 1..=7 {
            let code = TransformCode::new(c).unwrap();
            assert_eq!(t(c, &x).len(), x.len() - code.n_dropped());
        }
    }

    proptest! {
        #[test]
        fn codes_compose(x in prop::collection::vec(0.01f64..100.0, 3..40)) {
            let d2 = t(2, &t(2, &x));
            prop_assert_eq!(t(3, &x), d2);
            let dl = t(2, &t(5, &x));
            prop_assert_eq!(t(6, &x), dl);
        }
    }
}
