//! Scalar time profiles: the coupling envelope ν(t), the mode frequency ω(t)
//! and the damping rate γ(t).
//!
//! Times are measured in units of 1/ω0. Every parametric kind has a closed
//! form value, derivative and antiderivative, so cumulative integrals (and
//! therefore λ(t) = ν(t)·∫₀ᵗν) carry no quadrature noise. Piecewise-linear
//! tables are integrated with exact trapezoid sums.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// Shape of a single pulse, centered at zero, without baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseShape {
    /// `amplitude * exp(-s^2 / (2 width^2))`
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude * (1 - exp(-s/rise)) * exp(-s/decay)` for `s >= 0`, zero before.
    /// `rise = 0` is an instantaneous rise.
    ExpRiseDecay {
        amplitude: f64,
        #[serde(default)]
        rise: f64,
        decay: f64,
    },
}

impl PulseShape {
    fn amplitude(&self) -> f64 {
        match *self {
            PulseShape::Gaussian { amplitude, .. } | PulseShape::ExpRiseDecay { amplitude, .. } => {
                amplitude
            }
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match *self {
            PulseShape::Gaussian { amplitude, width } => {
                finite(field, "amplitude", amplitude)?;
                if !(width > 0.0 && width.is_finite()) {
                    return Err(Error::invalid(format!("{field}.width"), "must be > 0"));
                }
            }
            PulseShape::ExpRiseDecay {
                amplitude,
                rise,
                decay,
            } => {
                finite(field, "amplitude", amplitude)?;
                if !(rise >= 0.0 && rise.is_finite()) {
                    return Err(Error::invalid(format!("{field}.rise"), "must be >= 0"));
                }
                if !(decay > 0.0 && decay.is_finite()) {
                    return Err(Error::invalid(format!("{field}.decay"), "must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// Value at time `s` relative to the pulse center.
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            PulseShape::Gaussian { amplitude, width } => {
                amplitude * (-0.5 * (s / width).powi(2)).exp()
            }
            PulseShape::ExpRiseDecay {
                amplitude,
                rise,
                decay,
            } => {
                if s < 0.0 {
                    0.0
                } else if rise == 0.0 {
                    amplitude * (-s / decay).exp()
                } else {
                    amplitude * (-(-s / rise).exp_m1()) * (-s / decay).exp()
                }
            }
        }
    }

    /// Right derivative at `s`.
    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            PulseShape::Gaussian { width, .. } => -s / (width * width) * self.value(s),
            PulseShape::ExpRiseDecay {
                amplitude,
                rise,
                decay,
            } => {
                if s < 0.0 {
                    0.0
                } else if rise == 0.0 {
                    -amplitude / decay * (-s / decay).exp()
                } else {
                    let er = (-s / rise).exp();
                    let ed = (-s / decay).exp();
                    amplitude * ed * (er / rise - (1.0 - er) / decay)
                }
            }
        }
    }

    /// ∫_{-∞}^{s} of the shape.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match *self {
            PulseShape::Gaussian { amplitude, width } => {
                let x = s / (std::f64::consts::SQRT_2 * width);
                let scale = amplitude * width * SQRT_HALF_PI;
                if x < 0.0 {
                    scale * erfc(-x)
                } else {
                    scale * (2.0 - erfc(x))
                }
            }
            PulseShape::ExpRiseDecay {
                amplitude,
                rise,
                decay,
            } => {
                if s <= 0.0 {
                    return 0.0;
                }
                let slow = -decay * (-s / decay).exp_m1();
                if rise == 0.0 {
                    amplitude * slow
                } else {
                    let tc = rise * decay / (rise + decay);
                    amplitude * (slow + tc * (-s / tc).exp_m1())
                }
            }
        }
    }

    fn is_continuous(&self) -> bool {
        match *self {
            PulseShape::Gaussian { .. } => true,
            PulseShape::ExpRiseDecay {
                amplitude, rise, ..
            } => rise > 0.0 || amplitude == 0.0,
        }
    }

    fn time_scale(&self) -> f64 {
        match *self {
            PulseShape::Gaussian { width, .. } => width,
            PulseShape::ExpRiseDecay { rise, decay, .. } => {
                if rise > 0.0 {
                    rise.min(decay)
                } else {
                    decay
                }
            }
        }
    }
}

/// A real function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeProfile {
    Constant {
        value: f64,
    },
    GaussianPulse {
        amplitude: f64,
        center: f64,
        width: f64,
        #[serde(default)]
        baseline: f64,
    },
    ExpRiseDecayPulse {
        amplitude: f64,
        center: f64,
        #[serde(default)]
        rise: f64,
        decay: f64,
        #[serde(default)]
        baseline: f64,
    },
    /// Periodic repetition of `shape` inside the window
    /// `[start, start + count * period)`: cell `n` starts at `start + n * period`
    /// and carries the shape centered `offset` after the cell start. Before
    /// the window the first cell is continued, after it the last one.
    PulseTrain {
        shape: PulseShape,
        start: f64,
        period: f64,
        count: u32,
        offset: f64,
        #[serde(default)]
        baseline: f64,
    },
    /// Linear interpolation through `(times[i], values[i])`; defined on
    /// `[times[0], times[last]]` only.
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

fn finite(field: &str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{field}.{name}"), "must be finite"))
    }
}

impl TimeProfile {
    pub fn constant(value: f64) -> Self {
        TimeProfile::Constant { value }
    }

    /// Instantaneous rise at `center` followed by exponential decay.
    pub fn exp_decay(amplitude: f64, center: f64, decay: f64) -> Self {
        TimeProfile::ExpRiseDecayPulse {
            amplitude,
            center,
            rise: 0.0,
            decay,
            baseline: 0.0,
        }
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        TimeProfile::GaussianPulse {
            amplitude,
            center,
            width,
            baseline: 0.0,
        }
    }

    /// Checks parameter ranges. `field` names the profile in error messages.
    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            TimeProfile::Constant { value } => finite(field, "value", *value),
            TimeProfile::GaussianPulse {
                amplitude,
                center,
                width,
                baseline,
            } => {
                finite(field, "center", *center)?;
                finite(field, "baseline", *baseline)?;
                PulseShape::Gaussian {
                    amplitude: *amplitude,
                    width: *width,
                }
                .validate(field)
            }
            TimeProfile::ExpRiseDecayPulse {
                amplitude,
                center,
                rise,
                decay,
                baseline,
            } => {
                finite(field, "center", *center)?;
                finite(field, "baseline", *baseline)?;
                PulseShape::ExpRiseDecay {
                    amplitude: *amplitude,
                    rise: *rise,
                    decay: *decay,
                }
                .validate(field)
            }
            TimeProfile::PulseTrain {
                shape,
                start,
                period,
                count,
                offset,
                baseline,
            } => {
                shape.validate(&format!("{field}.shape"))?;
                finite(field, "start", *start)?;
                finite(field, "offset", *offset)?;
                finite(field, "baseline", *baseline)?;
                if !(*period > 0.0 && period.is_finite()) {
                    return Err(Error::invalid(format!("{field}.period"), "must be > 0"));
                }
                if *count < 1 {
                    return Err(Error::invalid(format!("{field}.count"), "must be >= 1"));
                }
                Ok(())
            }
            TimeProfile::PiecewiseLinear { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::invalid(
                        format!("{field}.times"),
                        "need at least two samples and equal lengths",
                    ));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("{field}.values"), "must be finite"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid(
                        format!("{field}.times"),
                        "must be strictly increasing",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Interval on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            TimeProfile::PiecewiseLinear { times, .. } => (times[0], times[times.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if t.is_finite() && t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::Domain { t, lo, hi })
        }
    }

    /// Value at `t`, with a domain check.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.value(t))
    }

    /// Value at `t`. Piecewise-linear tables are held constant outside their
    /// domain; callers that need the check use [`TimeProfile::eval`].
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::GaussianPulse {
                amplitude,
                center,
                width,
                baseline,
            } => {
                baseline
                    + PulseShape::Gaussian {
                        amplitude: *amplitude,
                        width: *width,
                    }
                    .value(t - center)
            }
            TimeProfile::ExpRiseDecayPulse {
                amplitude,
                center,
                rise,
                decay,
                baseline,
            } => {
                baseline
                    + PulseShape::ExpRiseDecay {
                        amplitude: *amplitude,
                        rise: *rise,
                        decay: *decay,
                    }
                    .value(t - center)
            }
            TimeProfile::PulseTrain {
                shape, baseline, ..
            } => baseline + shape.value(t - self.train_center(t)),
            TimeProfile::PiecewiseLinear { times, values } => interpolate(times, values, t),
        }
    }

    /// Center of the train pulse governing time `t`.
    fn train_center(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::PulseTrain {
                start,
                period,
                count,
                offset,
                ..
            } => {
                let n = ((t - start) / period).floor().clamp(0.0, (count - 1) as f64);
                start + n * period + offset
            }
            _ => unreachable!(),
        }
    }

    /// Time derivative. Analytic for parametric kinds (right derivative at
    /// kinks); centered difference with h = 1e-4 for piecewise-linear tables.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { .. } => 0.0,
            TimeProfile::GaussianPulse {
                amplitude,
                center,
                width,
                ..
            } => PulseShape::Gaussian {
                amplitude: *amplitude,
                width: *width,
            }
            .derivative(t - center),
            TimeProfile::ExpRiseDecayPulse {
                amplitude,
                center,
                rise,
                decay,
                ..
            } => PulseShape::ExpRiseDecay {
                amplitude: *amplitude,
                rise: *rise,
                decay: *decay,
            }
            .derivative(t - center),
            TimeProfile::PulseTrain { shape, .. } => shape.derivative(t - self.train_center(t)),
            TimeProfile::PiecewiseLinear { .. } => {
                let h = 1e-4;
                let (lo, hi) = self.domain();
                let a = (t - h).max(lo);
                let b = (t + h).min(hi);
                (self.value(b) - self.value(a)) / (b - a)
            }
        }
    }

    /// ∫_{t0}^{t1} of the profile. A reversed interval gives the negated value.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        self.check(t0)?;
        self.check(t1)?;
        if t1 < t0 {
            return Ok(-self.integral_unchecked(t1, t0));
        }
        Ok(self.integral_unchecked(t0, t1))
    }

    fn integral_unchecked(&self, t0: f64, t1: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => value * (t1 - t0),
            TimeProfile::GaussianPulse {
                amplitude,
                center,
                width,
                baseline,
            } => {
                let s = PulseShape::Gaussian {
                    amplitude: *amplitude,
                    width: *width,
                };
                baseline * (t1 - t0) + s.antiderivative(t1 - center) - s.antiderivative(t0 - center)
            }
            TimeProfile::ExpRiseDecayPulse {
                amplitude,
                center,
                rise,
                decay,
                baseline,
            } => {
                let s = PulseShape::ExpRiseDecay {
                    amplitude: *amplitude,
                    rise: *rise,
                    decay: *decay,
                };
                baseline * (t1 - t0) + s.antiderivative(t1 - center) - s.antiderivative(t0 - center)
            }
            TimeProfile::PulseTrain {
                shape,
                start,
                period,
                count,
                baseline,
                ..
            } => {
                let mut total = baseline * (t1 - t0);
                let mut a = t0;
                // interior cell boundaries start + k*period, k = 1..count-1
                let k_first = (((t0 - start) / period).floor() + 1.0).max(1.0);
                let k_last = ((count - 1) as f64).min(((t1 - start) / period).ceil() - 1.0);
                let mut k = k_first;
                while k <= k_last {
                    let b = start + k * period;
                    if b > a && b < t1 {
                        let c = self.train_center(0.5 * (a + b));
                        total += shape.antiderivative(b - c) - shape.antiderivative(a - c);
                        a = b;
                    }
                    k += 1.0;
                }
                let c = self.train_center(0.5 * (a + t1));
                total + shape.antiderivative(t1 - c) - shape.antiderivative(a - c)
            }
            TimeProfile::PiecewiseLinear { times, values } => {
                trapezoid(times, values, t0, t1)
            }
        }
    }

    /// ∫₀ᵗ of the profile.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        self.integral(0.0, t)
    }

    /// λ(t) = ν(t)·∫₀ᵗ ν(τ)dτ for a coupling envelope ν.
    pub fn lambda_factor(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)? * self.cumulative(t)?)
    }

    /// Whether the profile is continuous everywhere.
    pub fn is_continuous(&self) -> bool {
        match self {
            TimeProfile::Constant { .. }
            | TimeProfile::GaussianPulse { .. }
            | TimeProfile::PiecewiseLinear { .. } => true,
            TimeProfile::ExpRiseDecayPulse {
                amplitude, rise, ..
            } => *rise > 0.0 || *amplitude == 0.0,
            TimeProfile::PulseTrain {
                shape,
                period,
                count,
                offset,
                ..
            } => {
                if !shape.is_continuous() {
                    return false;
                }
                if *count == 1 {
                    return true;
                }
                // jump at each interior cell boundary
                let jump = shape.value(period - offset) - shape.value(-offset);
                jump.abs() <= 1e-12 * shape.amplitude().abs()
            }
        }
    }

    /// Points in the open interval `(t0, t1)` where the profile or its
    /// derivative may jump, sorted.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = match self {
            TimeProfile::Constant { .. } | TimeProfile::GaussianPulse { .. } => vec![],
            TimeProfile::ExpRiseDecayPulse { center, .. } => vec![*center],
            TimeProfile::PulseTrain {
                start,
                period,
                count,
                offset,
                ..
            } => (0..=*count)
                .map(|n| start + f64::from(n) * period)
                .chain((0..*count).map(|n| start + f64::from(n) * period + offset))
                .collect(),
            TimeProfile::PiecewiseLinear { times, .. } => times.clone(),
        };
        pts.retain(|&p| p > t0 && p < t1);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Characteristic time scale of the variation, if any.
    pub fn time_scale(&self) -> Option<f64> {
        match self {
            TimeProfile::Constant { .. } => None,
            TimeProfile::GaussianPulse { width, .. } => Some(*width),
            TimeProfile::ExpRiseDecayPulse { rise, decay, .. } => Some(if *rise > 0.0 {
                rise.min(*decay)
            } else {
                *decay
            }),
            TimeProfile::PulseTrain { shape, .. } => Some(shape.time_scale()),
            TimeProfile::PiecewiseLinear { times, .. } => times
                .windows(2)
                .map(|w| w[1] - w[0])
                .min_by(f64::total_cmp),
        }
    }

    /// Lower and upper bounds of the profile over its whole domain.
    pub fn bounds(&self) -> (f64, f64) {
        let pulse = |baseline: f64, amplitude: f64| {
            (baseline + amplitude.min(0.0), baseline + amplitude.max(0.0))
        };
        match self {
            TimeProfile::Constant { value } => (*value, *value),
            TimeProfile::GaussianPulse {
                amplitude,
                baseline,
                ..
            }
            | TimeProfile::ExpRiseDecayPulse {
                amplitude,
                baseline,
                ..
            } => pulse(*baseline, *amplitude),
            TimeProfile::PulseTrain {
                shape, baseline, ..
            } => pulse(*baseline, shape.amplitude()),
            TimeProfile::PiecewiseLinear { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    /// True if the profile vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.bounds() == (0.0, 0.0)
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + w * (values[i + 1] - values[i])
}

fn trapezoid(times: &[f64], values: &[f64], t0: f64, t1: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..times.len() - 1 {
        let a = times[i].max(t0);
        let b = times[i + 1].min(t1);
        if b > a {
            total += 0.5 * (b - a) * (interpolate(times, values, a) + interpolate(times, values, b));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Quadrature;

    #[test]
    fn constant_profile() {
        let p = TimeProfile::constant(1.0);
        assert_eq!(p.eval(3.7).unwrap(), 1.0);
        assert_eq!(p.integral(0.0, 4.0).unwrap(), 4.0);
        assert_eq!(p.lambda_factor(3.0).unwrap(), 3.0);
    }

    #[test]
    fn exp_decay_values() {
        let p = TimeProfile::exp_decay(1.0, 0.0, 2.0);
        assert!((p.eval(2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let expected = 2.0 * (1.0 - (-10.0f64).exp());
        assert!((p.integral(0.0, 20.0).unwrap() - expected).abs() < 1e-14);
        assert!((p.integral(0.0, 20.0).unwrap() - 1.99991).abs() < 1e-5);
    }

    #[test]
    fn lambda_of_unit_exp_decay() {
        let p = TimeProfile::exp_decay(1.0, 0.0, 1.0);
        let e = (-1.0f64).exp();
        let lam = p.lambda_factor(1.0).unwrap();
        assert!((lam - e * (1.0 - e)).abs() < 1e-15);
        assert!((lam - 0.232544).abs() < 1e-6);
    }

    #[test]
    fn zero_profile_has_zero_lambda() {
        let p = TimeProfile::constant(0.0);
        for t in [0.0, 0.5, 7.0] {
            assert_eq!(p.lambda_factor(t).unwrap(), 0.0);
        }
        assert!(p.is_zero());
    }

    #[test]
    fn gaussian_peak() {
        let p = TimeProfile::gaussian(1.0, 5.0, 1.0);
        assert_eq!(p.eval(5.0).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_integral_matches_quadrature() {
        let q = Quadrature::with_tol(1e-14);
        for (amp, c, w, a, b) in [
            (1.0, 5.0, 1.0, 0.0, 10.0),
            (0.7, 0.3, 0.05, 0.0, 0.4),
            (-2.0, 1.0, 0.2, 1.1, 3.0),
            (1.0, 0.0, 3.0, -7.0, -6.5),
        ] {
            let p = TimeProfile::gaussian(amp, c, w);
            let (oracle, _) = q.integrate(|t| p.value(t), a, b);
            assert!((p.integral(a, b).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn rise_decay_integral_matches_quadrature() {
        let p = TimeProfile::ExpRiseDecayPulse {
            amplitude: 1.3,
            center: 0.2,
            rise: 0.05,
            decay: 0.5,
            baseline: 0.1,
        };
        let q = Quadrature::with_tol(1e-14);
        let (oracle, _) = q.integrate(|t| p.value(t), 0.0, 3.0);
        assert!((p.integral(0.0, 3.0).unwrap() - oracle).abs() < 1e-12);
        let h = 1e-6;
        for t in [0.25, 0.4, 1.0] {
            let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
            assert!((p.derivative(t) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn reversed_interval_is_negated() {
        let p = TimeProfile::gaussian(1.0, 1.0, 0.3);
        assert_eq!(p.integral(2.0, 0.5).unwrap(), -p.integral(0.5, 2.0).unwrap());
    }

    #[test]
    fn piecewise_linear() {
        let p = TimeProfile::PiecewiseLinear {
            times: vec![0.0, 1.0, 3.0],
            values: vec![0.0, 2.0, 0.0],
        };
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        assert_eq!(p.eval(2.0).unwrap(), 1.0);
        assert!((p.integral(0.0, 3.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((p.integral(0.5, 2.0).unwrap() - (0.75 + 1.5)).abs() < 1e-15);
        assert!(matches!(p.eval(3.5), Err(Error::Domain { .. })));
        assert!(matches!(p.integral(-1.0, 1.0), Err(Error::Domain { .. })));
        assert!((p.derivative(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn train_continuity() {
        let gauss = TimeProfile::PulseTrain {
            shape: PulseShape::Gaussian {
                amplitude: 1.0,
                width: 0.2,
            },
            start: 0.0,
            period: 3.0,
            count: 4,
            offset: 1.5,
            baseline: 0.0,
        };
        assert!(gauss.is_continuous());
        let exp = TimeProfile::PulseTrain {
            shape: PulseShape::ExpRiseDecay {
                amplitude: 1.0,
                rise: 0.05,
                decay: 0.5,
            },
            start: 0.0,
            period: 3.0,
            count: 4,
            offset: 0.0,
            baseline: 0.0,
        };
        assert!(!exp.is_continuous());
        assert!(!TimeProfile::exp_decay(1.0, 0.0, 1.0).is_continuous());
    }

    #[test]
    fn validation_errors() {
        assert!(TimeProfile::gaussian(1.0, 0.0, 0.0).validate("nu").is_err());
        let bad = TimeProfile::PulseTrain {
            shape: PulseShape::Gaussian {
                amplitude: 1.0,
                width: 0.1,
            },
            start: 0.0,
            period: 0.0,
            count: 1,
            offset: 0.0,
            baseline: 0.0,
        };
        let err = bad.validate("nu").unwrap_err();
        assert!(err.to_string().contains("nu.period"));
        assert!(matches!(TimeProfile::constant(1.0).eval(f64::NAN), Err(Error::Domain { .. })));
    }
}
