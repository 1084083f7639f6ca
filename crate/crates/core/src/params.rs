use serde::Serialize;

use crate::error::{Error, Result};

const FAMILY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    General,
    #[serde(rename = "explicit_2_over_N")]
    TwoOverN,
    #[serde(rename = "explicit_4_over_N")]
    FourOverN,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::General => "general",
            Family::TwoOverN => "explicit_2_over_N",
            Family::FourOverN => "explicit_4_over_N",
        }
    }

    /// Accepts the CLI spellings `2overN` / `4overN` as well as the tags.
    pub fn parse(name: &str) -> Result<Family> {
        match name {
            "2overN" | "2/N" | "explicit_2_over_N" => Ok(Family::TwoOverN),
            "4overN" | "4/N" | "explicit_4_over_N" => Ok(Family::FourOverN),
            "general" => Ok(Family::General),
            other => Err(Error::Unknown(format!("family {other}"))),
        }
    }
}

/// Which exponent the caller fixes; the other one follows from the
/// critical relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpec {
    S(f64),
    P(f64),
    Family(Family),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub family: Family,
}

impl ProblemParams {
    pub fn n_f(&self) -> f64 {
        self.n as f64
    }

    pub fn is_explicit(&self) -> bool {
        self.family != Family::General
    }
}

fn detect_family(n: usize, p: f64) -> Family {
    let nf = n as f64;
    let close = |q: f64| (p - q).abs() <= FAMILY_RTOL * q;
    if close((2.0 * nf + 2.0) / nf) {
        Family::TwoOverN
    } else if close((2.0 * nf + 4.0) / nf) {
        Family::FourOverN
    } else {
        Family::General
    }
}

pub fn make_params(n: usize, spec: ParamSpec) -> Result<ProblemParams> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("dimension {n} < 2")));
    }
    let nf = n as f64;
    let (s, p) = match spec {
        ParamSpec::Family(Family::General) => {
            return Err(Error::InvalidParams(
                "a general family needs s or p".into(),
            ))
        }
        ParamSpec::Family(fam) => {
            // both exponents as ratios of integers
            let (p, s) = match fam {
                Family::TwoOverN => ((2.0 * nf + 2.0) / nf, (nf + 2.0) / nf),
                _ => ((2.0 * nf + 4.0) / nf, 4.0 / nf),
            };
            (if n == 2 { 2.0 } else { s }, p)
        }
        ParamSpec::S(s) => {
            if n == 2 {
                return Err(Error::InvalidParams(
                    "N = 2 forces s = 2; give p instead".into(),
                ));
            }
            if !(s > 0.0 && s < 2.0) {
                return Err(Error::InvalidParams(format!(
                    "s out of range: {s} not in (0, 2)"
                )));
            }
            (s, 2.0 * (nf - s) / (nf - 2.0))
        }
        ParamSpec::P(p) => {
            if n == 2 {
                if !(p > 2.0) || !p.is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "p out of range: {p} must exceed 2"
                    )));
                }
                (2.0, p)
            } else {
                let pmax = 2.0 * nf / (nf - 2.0);
                if !(p > 2.0 && p < pmax) {
                    return Err(Error::InvalidParams(format!(
                        "p out of range: {p} not in (2, {pmax})"
                    )));
                }
                (nf - p * (nf - 2.0) / 2.0, p)
            }
        }
    };
    Ok(ProblemParams {
        n,
        s,
        p,
        family: detect_family(n, p),
    })
}
