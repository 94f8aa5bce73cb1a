//! Flat `key = value` parameter files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use kawasaki_core::model::{parse_rational, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub params: ModelParams,
    pub strict: bool,
}

impl Default for ParamFile {
    fn default() -> Self {
        Self { params: ModelParams::small(1.0), strict: true }
    }
}

/// Parse `u1`, `u2`, `delta` (rationals), `beta` (decimal), `l0` (integer)
/// and `strict` (bool).  Blank lines and `#` comments are ignored; unknown
/// or repeated keys are errors.  `beta` defaults to 1 and `strict` to true.
pub fn parse_params(text: &str) -> Result<ParamFile> {
    let (mut u1, mut u2, mut delta, mut beta, mut l0, mut strict) = (None, None, None, None, None, None);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let rational = |v: &str| parse_rational(v).map_err(|e| anyhow!("line {}: {e}", lineno + 1));
        let fresh = match key {
            "u1" => u1.replace(rational(value)?).is_none(),
            "u2" => u2.replace(rational(value)?).is_none(),
            "delta" => delta.replace(rational(value)?).is_none(),
            "beta" => beta
                .replace(value.parse::<f64>().with_context(|| format!("line {}: bad beta {value:?}", lineno + 1))?)
                .is_none(),
            "l0" => l0
                .replace(value.parse::<usize>().with_context(|| format!("line {}: bad l0 {value:?}", lineno + 1))?)
                .is_none(),
            "strict" => strict
                .replace(value.parse::<bool>().with_context(|| format!("line {}: bad strict {value:?}", lineno + 1))?)
                .is_none(),
            other => bail!("line {}: unknown key {other:?}", lineno + 1),
        };
        if !fresh {
            bail!("line {}: key {key:?} given twice", lineno + 1);
        }
    }
    let missing = |k: &str| anyhow!("missing required key {k:?}");
    Ok(ParamFile {
        params: ModelParams {
            u1: u1.ok_or_else(|| missing("u1"))?,
            u2: u2.ok_or_else(|| missing("u2"))?,
            delta: delta.ok_or_else(|| missing("delta"))?,
            beta: beta.unwrap_or(1.0),
            l0: l0.ok_or_else(|| missing("l0"))?,
        },
        strict: strict.unwrap_or(true),
    })
}

pub fn read_params(path: &Path) -> Result<ParamFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_params(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn parses_rationals_and_decimals() {
        let f = parse_params("u1 = 3\nu2=1\n# comment\ndelta=3.6\nl0=12\nbeta=1.5\nstrict=false\n").unwrap();
        assert_eq!(f.params.delta, Rational64::new(18, 5));
        assert_eq!(f.params.beta, 1.5);
        assert!(!f.strict);
        let g = parse_params("u1=3\nu2=1\ndelta=18/5\nl0=12").unwrap();
        assert_eq!(g.params, ModelParams::small(1.0));
        assert!(g.strict);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_params("u1=3\nu2=1\ndelta=pi\nl0=12").is_err());
        assert!(parse_params("u1=3\nu2=1\nl0=12").is_err());
        assert!(parse_params("u1=3\nu2=1\ndelta=18/5\nl0=12\ncolour=red").is_err());
        assert!(parse_params("u1=3\nu1=3\nu2=1\ndelta=18/5\nl0=12").is_err());
        assert!(parse_params("u1 3").is_err());
    }
}
