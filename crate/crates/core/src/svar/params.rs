use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::SvarError;
use crate::graph::{Edge, TimeSeriesGraph, Vid};
use crate::ratfield::{format_rational, parse_rational};
use crate::Rational;

/// Coefficients and noise variances compatible with a time series graph.
///
/// Cross coefficients are keyed by `((from, to), lag)`, auto coefficients
/// by `(vertex, lag)`; both key sets match the graph's lag sets exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvarParams {
    cross: BTreeMap<(Edge, u32), Rational>,
    auto: BTreeMap<(Vid, u32), Rational>,
    noise: Vec<Rational>,
}

impl SvarParams {
    pub fn new(
        tsg: &TimeSeriesGraph,
        cross: BTreeMap<(Edge, u32), Rational>,
        auto: BTreeMap<(Vid, u32), Rational>,
        noise: Vec<Rational>,
    ) -> Result<Self, SvarError> {
        let p = SvarParams { cross, auto, noise };
        p.check_keys(tsg)?;
        p.check_stability(tsg)?;
        Ok(p)
    }

    /// Skips the stability and positivity checks; keys are still checked.
    /// Meant for degenerate test fixtures such as zero noise.
    pub fn new_unchecked(
        tsg: &TimeSeriesGraph,
        cross: BTreeMap<(Edge, u32), Rational>,
        auto: BTreeMap<(Vid, u32), Rational>,
        noise: Vec<Rational>,
    ) -> Result<Self, SvarError> {
        let p = SvarParams { cross, auto, noise };
        p.check_keys(tsg)?;
        Ok(p)
    }

    fn check_keys(&self, tsg: &TimeSeriesGraph) -> Result<(), SvarError> {
        let g = tsg.graph();
        let expected_cross: Vec<(Edge, u32)> =
            tsg.cross_lags().iter().flat_map(|(&e, lags)| lags.iter().map(move |&k| (e, k))).collect();
        let got: Vec<(Edge, u32)> = self.cross.keys().copied().collect();
        if got != expected_cross {
            let missing = expected_cross.iter().find(|k| !self.cross.contains_key(k));
            let extra = got.iter().find(|k| !expected_cross.contains(k));
            let ((u, v), k) = missing.or(extra).copied().expect("key sets differ");
            return Err(SvarError::Keys(format!(
                "cross coefficient {} -> {} at lag {k} is {}",
                g.label(u),
                g.label(v),
                if missing.is_some() { "missing" } else { "not in the graph" }
            )));
        }
        let expected_auto: Vec<(Vid, u32)> =
            (0..g.n()).flat_map(|v| tsg.auto_lags(v).iter().map(move |&k| (v, k))).collect();
        let got: Vec<(Vid, u32)> = self.auto.keys().copied().collect();
        if got != expected_auto {
            let missing = expected_auto.iter().find(|k| !self.auto.contains_key(k));
            let extra = got.iter().find(|k| !expected_auto.contains(k));
            let (v, k) = missing.or(extra).copied().expect("key sets differ");
            return Err(SvarError::Keys(format!(
                "auto coefficient of {} at lag {k} is {}",
                g.label(v),
                if missing.is_some() { "missing" } else { "not in the graph" }
            )));
        }
        if self.noise.len() != g.n() {
            return Err(SvarError::Keys(format!("{} noise variances for {} vertices", self.noise.len(), g.n())));
        }
        Ok(())
    }

    fn check_stability(&self, tsg: &TimeSeriesGraph) -> Result<(), SvarError> {
        let g = tsg.graph();
        for v in 0..g.n() {
            if !self.noise[v].is_positive() {
                return Err(SvarError::Unstable(format!("noise variance of {} must be positive", g.label(v))));
            }
            let s: Rational = self.auto.range((v, 0)..=(v, u32::MAX)).map(|(_, c)| c.abs()).sum();
            if s >= Rational::one() {
                return Err(SvarError::Unstable(format!(
                    "sum of |auto coefficients| of {} is {} >= 1",
                    g.label(v),
                    format_rational(&s)
                )));
            }
        }
        if g.observed_cyclic() {
            let s: Rational = self
                .cross
                .iter()
                .filter(|(((u, _), _), _)| g.is_observed(*u))
                .map(|(_, c)| c.abs())
                .sum();
            if s >= Rational::one() {
                return Err(SvarError::Unstable(format!(
                    "observed graph is cyclic and the sum of |cross coefficients| among observed vertices is {} >= 1",
                    format_rational(&s)
                )));
            }
        }
        Ok(())
    }

    pub fn cross(&self, u: Vid, v: Vid, k: u32) -> Option<&Rational> {
        self.cross.get(&((u, v), k))
    }

    pub fn auto(&self, v: Vid, k: u32) -> Option<&Rational> {
        self.auto.get(&(v, k))
    }

    pub fn noise(&self, v: Vid) -> &Rational {
        &self.noise[v]
    }

    pub fn cross_map(&self) -> &BTreeMap<(Edge, u32), Rational> {
        &self.cross
    }

    pub fn auto_map(&self) -> &BTreeMap<(Vid, u32), Rational> {
        &self.auto
    }

    pub fn noises(&self) -> &[Rational] {
        &self.noise
    }

    /// Coefficients of `u -> v` by lag.
    pub fn cross_lags(&self, u: Vid, v: Vid) -> impl Iterator<Item = (u32, &Rational)> {
        self.cross.range(((u, v), 0)..=((u, v), u32::MAX)).map(|((_, k), c)| (*k, c))
    }

    /// Auto coefficients of `v` by lag.
    pub fn auto_lags(&self, v: Vid) -> impl Iterator<Item = (u32, &Rational)> {
        self.auto.range((v, 0)..=(v, u32::MAX)).map(|((_, k), c)| (*k, c))
    }

    /// The same parameters with every coefficient set to zero; noise kept.
    pub fn zeroed(&self) -> SvarParams {
        SvarParams {
            cross: self.cross.keys().map(|&k| (k, Rational::zero())).collect(),
            auto: self.auto.keys().map(|&k| (k, Rational::zero())).collect(),
            noise: self.noise.clone(),
        }
    }

    pub fn from_spec(tsg: &TimeSeriesGraph, spec: &ParamsSpec) -> Result<Self, SvarError> {
        let (cross, auto, noise) = spec.resolve(tsg)?;
        SvarParams::new(tsg, cross, auto, noise)
    }

    pub fn to_spec(&self, tsg: &TimeSeriesGraph) -> ParamsSpec {
        let g = tsg.graph();
        ParamsSpec {
            cross: self
                .cross
                .iter()
                .map(|(&((u, v), lag), c)| CrossSpec {
                    from: g.label(u).into(),
                    to: g.label(v).into(),
                    lag: lag as i64,
                    coeff: format_rational(c),
                })
                .collect(),
            auto: self
                .auto
                .iter()
                .map(|(&(v, lag), c)| AutoSpec { vertex: g.label(v).into(), lag: lag as i64, coeff: format_rational(c) })
                .collect(),
            noise: self
                .noise
                .iter()
                .enumerate()
                .map(|(v, w)| NoiseSpec { vertex: g.label(v).into(), variance: format_rational(w) })
                .collect(),
        }
    }
}

/// On-disk parameter description with exact `"p/q"` coefficient strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default)]
    pub cross: Vec<CrossSpec>,
    #[serde(default)]
    pub auto: Vec<AutoSpec>,
    pub noise: Vec<NoiseSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSpec {
    pub from: String,
    pub to: String,
    pub lag: i64,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoSpec {
    pub vertex: String,
    pub lag: i64,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub vertex: String,
    pub variance: String,
}

type Resolved = (BTreeMap<(Edge, u32), Rational>, BTreeMap<(Vid, u32), Rational>, Vec<Rational>);

impl ParamsSpec {
    fn resolve(&self, tsg: &TimeSeriesGraph) -> Result<Resolved, SvarError> {
        let g = tsg.graph();
        let lag = |k: i64, what: &str| -> Result<u32, SvarError> {
            u32::try_from(k).map_err(|_| SvarError::Keys(format!("{what} has invalid lag {k}")))
        };
        let coeff = |s: &str, what: &str| -> Result<Rational, SvarError> {
            parse_rational(s).map_err(|e| SvarError::Keys(format!("{what}: {e}")))
        };
        let mut cross = BTreeMap::new();
        for c in &self.cross {
            let what = format!("cross coefficient {} -> {}", c.from, c.to);
            let key = ((g.id(&c.from)?, g.id(&c.to)?), lag(c.lag, &what)?);
            if cross.insert(key, coeff(&c.coeff, &what)?).is_some() {
                return Err(SvarError::Keys(format!("{what} at lag {} given twice", c.lag)));
            }
        }
        let mut auto = BTreeMap::new();
        for a in &self.auto {
            let what = format!("auto coefficient of {}", a.vertex);
            let key = (g.id(&a.vertex)?, lag(a.lag, &what)?);
            if auto.insert(key, coeff(&a.coeff, &what)?).is_some() {
                return Err(SvarError::Keys(format!("{what} at lag {} given twice", a.lag)));
            }
        }
        let mut noise: Vec<Option<Rational>> = vec![None; g.n()];
        for n in &self.noise {
            let v = g.id(&n.vertex)?;
            let what = format!("noise variance of {}", n.vertex);
            if noise[v].replace(coeff(&n.variance, &what)?).is_some() {
                return Err(SvarError::Keys(format!("{what} given twice")));
            }
        }
        let noise = noise
            .into_iter()
            .enumerate()
            .map(|(v, w)| w.ok_or_else(|| SvarError::Keys(format!("noise variance of {} is missing", g.label(v)))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((cross, auto, noise))
    }
}
