use std::collections::BTreeMap;

use num_traits::Zero;

use super::IdentifyError;
use crate::graph::{TimeSeriesGraph, Vid};
use crate::svar::{lag_poly, SvarError, SvarParams};
use crate::{Poly, RatFn, Rational};

/// Lag coefficients read off a link function; zero coefficients omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LagCoefficients {
    pub cross: BTreeMap<u32, Rational>,
    pub auto: BTreeMap<u32, Rational>,
}

/// Writes `h = p/q` with `q(0) = 1` and returns `phi_{v,w}(k) = p_k` and
/// `phi_{w,w}(k) = -q_k` for `k >= 1`.
///
/// Only meaningful when the reduced fraction still has the form
/// `phi_{v,w} / (1 - phi_{w,w})`, i.e. the two polynomials are coprime.
pub fn recover_lag_coefficients(h: &RatFn) -> Result<LagCoefficients, IdentifyError> {
    let c0 = h.den().constant_term();
    if c0.is_zero() {
        return Err(IdentifyError::ZeroConstantTerm);
    }
    let nonzero = |(k, c): (usize, Rational)| (!c.is_zero()).then_some((k as u32, c));
    let cross = h.num().coeffs().iter().map(|c| c / &c0).enumerate().filter_map(nonzero).collect();
    let auto = h.den().coeffs().iter().map(|c| -(c / &c0)).enumerate().skip(1).filter_map(nonzero).collect();
    Ok(LagCoefficients { cross, auto })
}

/// Recovers the coefficients of `u -> v` and checks them against the lag
/// sets of the graph. A support mismatch means the numerator and denominator
/// shared a factor, and the coefficients cannot be read off.
pub fn recover_for_edge(tsg: &TimeSeriesGraph, u: Vid, v: Vid, h: &RatFn) -> Result<LagCoefficients, IdentifyError> {
    let g = tsg.graph();
    let lags = tsg
        .lags(u, v)
        .ok_or_else(|| SvarError::NoSuchEdge { from: g.label(u).into(), to: g.label(v).into() })?;
    let rec = recover_lag_coefficients(h)?;
    let fail = |reason: String| IdentifyError::NotRecoverable { from: g.label(u).into(), to: g.label(v).into(), reason };
    if !rec.cross.keys().copied().eq(lags.iter().copied()) {
        return Err(fail(format!("numerator support {:?} differs from lags {:?}", rec.cross.keys().collect::<Vec<_>>(), lags)));
    }
    if !rec.auto.keys().copied().eq(tsg.auto_lags(v).iter().copied()) {
        return Err(fail(format!(
            "denominator support {:?} differs from auto lags {:?}",
            rec.auto.keys().collect::<Vec<_>>(),
            tsg.auto_lags(v)
        )));
    }
    Ok(rec)
}

/// `Res(phi_{u,v}, 1 - phi_{v,v})`; nonzero exactly when the link function of
/// `u -> v` is already reduced.
pub fn lag_resultant(tsg: &TimeSeriesGraph, params: &SvarParams, u: Vid, v: Vid) -> Result<Rational, IdentifyError> {
    let num = lag_poly(tsg, params, u, v)?;
    let den = &Poly::one() - &lag_poly(tsg, params, v, v)?;
    Ok(num.resultant(&den))
}
