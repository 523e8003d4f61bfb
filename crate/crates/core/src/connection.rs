//! Connection functions: radial edge-probability profiles with a dispersion
//! transform.
//!
//! A connection function `f : [0, inf) -> [0, 1]` gives the probability that
//! an agent and a hub at distance `r` are linked. Three families are
//! supported:
//!
//! * `boolean:<theta>` — indicator of `r <= theta` (amplitude 1);
//! * `pboolean:<amp>:<theta>` — indicator scaled to amplitude `amp`;
//! * `exp:<theta>` — `(1/2) exp(-r / theta)`.
//!
//! The dispersion transform with parameter `p` in `(0, 1]` maps `f` to
//! `f_p(r) = p * f(p^{1/d} r)`: connections become weaker but longer-ranged
//! in a way that leaves the mean number of links of a typical point
//! invariant (the k = 0 radial moment below is unchanged). In radial
//! coordinates each family stays in-family with effective amplitude
//! `p * amp` and effective range `theta * p^{-1/d}`.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Base connection family (before dispersion).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Boolean { theta: f64 },
    PBoolean { amp: f64, theta: f64 },
    Exponential { theta: f64 },
}

/// Radial shape after reduction to effective parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Indicator,
    Exp,
}

/// Effective radial profile `amp * shape(r / theta)` of a (possibly
/// dispersed) connection function in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effective {
    pub shape: Shape,
    pub amp: f64,
    pub theta: f64,
}

impl Effective {
    /// Evaluate the profile at distance `r >= 0`.
    #[inline(always)]
    pub fn eval(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Indicator => {
                if r <= self.theta {
                    self.amp
                } else {
                    0.0
                }
            }
            Shape::Exp => self.amp * (-r / self.theta).exp(),
        }
    }
}

/// A connection family together with a dispersion parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSpec {
    family: Family,
    dispersion: f64,
}

/// Truncation data for a connection function: radius beyond which the
/// profile is treated as zero, and the radial-mass ratio discarded by that
/// cut.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Support {
    pub radius: f64,
    pub truncated_mass: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParam(format!("theta must be positive, got {theta}")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidParam(format!("{name} must lie in (0, 1], got {v}")));
    }
    Ok(())
}

impl ConnectionSpec {
    pub fn boolean(theta: f64) -> Result<ConnectionSpec> {
        check_theta(theta)?;
        Ok(ConnectionSpec { family: Family::Boolean { theta }, dispersion: 1.0 })
    }

    pub fn p_boolean(amp: f64, theta: f64) -> Result<ConnectionSpec> {
        check_theta(theta)?;
        check_unit("amplitude", amp)?;
        Ok(ConnectionSpec { family: Family::PBoolean { amp, theta }, dispersion: 1.0 })
    }

    pub fn exponential(theta: f64) -> Result<ConnectionSpec> {
        check_theta(theta)?;
        Ok(ConnectionSpec { family: Family::Exponential { theta }, dispersion: 1.0 })
    }

    /// Replace the dispersion parameter (`p = 1` is the identity).
    pub fn with_dispersion(mut self, p: f64) -> Result<ConnectionSpec> {
        check_unit("dispersion p", p)?;
        self.dispersion = p;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    /// Reduce to the effective radial profile in dimension `d`.
    pub fn effective(&self, d: usize) -> Effective {
        let p = self.dispersion;
        let scale = p.powf(-1.0 / d as f64); // p = 1 gives exactly 1.0
        match self.family {
            Family::Boolean { theta } => {
                Effective { shape: Shape::Indicator, amp: p, theta: theta * scale }
            }
            Family::PBoolean { amp, theta } => {
                Effective { shape: Shape::Indicator, amp: p * amp, theta: theta * scale }
            }
            Family::Exponential { theta } => {
                Effective { shape: Shape::Exp, amp: 0.5 * p, theta: theta * scale }
            }
        }
    }

    /// Evaluate the (dispersed) connection function at distance `r`.
    pub fn evaluate(&self, d: usize, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParam(format!("distance must be >= 0, got {r}")));
        }
        Ok(self.effective(d).eval(r))
    }

    /// Radial moment `I_k = int_0^inf f_p(r) r^{d-1+k} dr` in closed form.
    ///
    /// Only `k = 0` (mean-degree moment, dispersion-invariant) and `k = 1`
    /// (distance moment, scales as `p^{-1/d}`) are exposed.
    pub fn moment_integral(&self, d: usize, k: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::InvalidParam("dimension must be >= 1".into()));
        }
        if k > 1 {
            return Err(Error::Unsupported(format!("moment k = {k}; only k in {{0, 1}}")));
        }
        let eff = self.effective(d);
        let m = (d + k) as i32;
        Ok(match eff.shape {
            Shape::Indicator => eff.amp * eff.theta.powi(m) / m as f64,
            Shape::Exp => eff.amp * factorial((d + k - 1) as u32) * eff.theta.powi(m),
        })
    }

    /// Truncation radius and discarded radial-mass ratio for tolerance `eps`.
    ///
    /// Bounded families return their exact range (nothing truncated, `eps`
    /// ignored). The exponential family returns the radius `R` at which the
    /// regularized upper incomplete gamma `Q(d, R/theta_eff)` — the tail
    /// fraction of the k = 0 radial mass — first drops to `eps`.
    pub fn effective_support(&self, d: usize, eps: f64) -> Result<Support> {
        if d == 0 {
            return Err(Error::InvalidParam("dimension must be >= 1".into()));
        }
        let eff = self.effective(d);
        match eff.shape {
            Shape::Indicator => Ok(Support { radius: eff.theta, truncated_mass: 0.0 }),
            Shape::Exp => {
                if !(eps.is_finite() && eps > 0.0 && eps < 0.5) {
                    return Err(Error::InvalidParam(format!(
                        "truncation tolerance must lie in (0, 0.5), got {eps}"
                    )));
                }
                let u = solve_gamma_tail(d, eps);
                Ok(Support { radius: u * eff.theta, truncated_mass: gamma_tail(d, u) })
            }
        }
    }
}

/// Regularized upper incomplete gamma `Q(d, u)` for integer `d`:
/// `e^{-u} sum_{k<d} u^k / k!`.
fn gamma_tail(d: usize, u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..d {
        term *= u / k as f64;
        sum += term;
    }
    sum * (-u).exp()
}

/// Solve `Q(d, u) = eps` for `u` by bisection (Q is strictly decreasing).
fn solve_gamma_tail(d: usize, eps: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 4.0 + 2.0 * (d as f64 + (1.0 / eps).ln());
    debug_assert!(gamma_tail(d, hi) < eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_tail(d, mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl fmt::Display for ConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Boolean { theta } => write!(f, "boolean:{theta}")?,
            Family::PBoolean { amp, theta } => write!(f, "pboolean:{amp}:{theta}")?,
            Family::Exponential { theta } => write!(f, "exp:{theta}")?,
        }
        if self.dispersion != 1.0 {
            write!(f, "@p={}", self.dispersion)?;
        }
        Ok(())
    }
}

impl FromStr for ConnectionSpec {
    type Err = Error;

    /// Parse `boolean:<theta>`, `pboolean:<amp>:<theta>` or `exp:<theta>`,
    /// each optionally suffixed with `@p=<dispersion>`.
    fn from_str(s: &str) -> Result<ConnectionSpec> {
        let (body, disp) = match s.split_once("@p=") {
            Some((body, p)) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad dispersion value in {s:?}")))?;
                (body, Some(p))
            }
            None => (s, None),
        };
        let parts: Vec<&str> = body.split(':').collect();
        let num = |t: &str| -> Result<f64> {
            t.parse().map_err(|_| Error::Parse(format!("bad number {t:?} in spec {s:?}")))
        };
        let spec = match parts.as_slice() {
            ["boolean", theta] => ConnectionSpec::boolean(num(theta)?)?,
            ["pboolean", amp, theta] => ConnectionSpec::p_boolean(num(amp)?, num(theta)?)?,
            ["exp", theta] => ConnectionSpec::exponential(num(theta)?)?,
            _ => {
                return Err(Error::Parse(format!(
                    "unknown connection spec {s:?}; expected boolean:<theta>, \
                     pboolean:<amp>:<theta> or exp:<theta> (optional @p=<dispersion>)"
                )))
            }
        };
        match disp {
            Some(p) => spec.with_dispersion(p),
            None => Ok(spec),
        }
    }
}

impl serde::Serialize for ConnectionSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ConnectionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
