//! Explicit envelopes and the probes that compare simulated trajectories
//! against them.
//!
//! Everything here except the probes is a pure function of scalar inputs, so a
//! report can be replayed from its CSV alone.

use std::fmt::{self, Write as _};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::holder::{holder_seminorm, ShiftSet};
use crate::numeric::{dopri5, log_add_exp};
use crate::solver::{Probe, Trajectory};

/// Relative slack allowed before a bound counts as violated; it only absorbs
/// floating-point rounding.
pub const ROUNDING_SLACK: f64 = 1e-9;

/// `value > bound` beyond rounding.
pub fn exceeds(value: f64, bound: f64) -> bool {
    value > bound * (1.0 + ROUNDING_SLACK) + f64::MIN_POSITIVE
}

/// `‖θ₀‖ e^{-c₀κt} + ‖f‖ (1 − e^{-c₀κt}) / (c₀κ)`, the `L^p` decay envelope.
pub fn decay_envelope(t: f64, theta0_norm: f64, f_norm: f64, kappa: f64, c0: f64) -> f64 {
    let rate = c0 * kappa;
    let decay = (-rate * t).exp();
    theta0_norm * decay + f_norm / rate * (-(-rate * t).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderBudget {
    /// `‖θ₀‖_∞ + ‖f‖_∞ / (c₀κ)`, the uniform `L^∞` bound.
    pub m_inf: f64,
    /// Largest Hölder exponent the envelope covers.
    pub alpha0: f64,
}

pub fn holder_budget(theta0_linf: f64, f_linf: f64, kappa: f64, consts: &Constants) -> HolderBudget {
    let m_inf = theta0_linf + f_linf / (consts.c0 * kappa);
    let alpha0 = if m_inf > 0.0 {
        (consts.eps0 * kappa / m_inf).min(0.25)
    } else {
        0.25
    };
    HolderBudget { m_inf, alpha0 }
}

/// Solution of `d/dt M² + κ M³ / (c₅M_∞) = c₅²κM_∞²` from `M(0) = M0`.
///
/// Integrated in the scaled variable `s = (M / c₅M_∞)²`, where the equation
/// reads `ds/dτ = 1 − s^{3/2}` with `τ = κt`.
#[derive(Clone, Debug)]
pub struct MAlphaEnvelope {
    m0: f64,
    equilibrium: f64,
    kappa: f64,
    cache: std::cell::Cell<(f64, f64)>,
}

impl MAlphaEnvelope {
    pub fn new(m0: f64, m_inf: f64, kappa: f64, c5: f64) -> Result<Self> {
        if !(m0 >= 0.0 && m0.is_finite()) || !(m_inf >= 0.0 && m_inf.is_finite()) {
            return Err(Error::domain(format!(
                "envelope needs finite M0 ≥ 0 and M_∞ ≥ 0, got {m0}, {m_inf}"
            )));
        }
        if !(kappa > 0.0 && c5 > 0.0) {
            return Err(Error::domain("κ and c₅ must be positive"));
        }
        let equilibrium = c5 * m_inf;
        let s0 = if equilibrium > 0.0 {
            (m0 / equilibrium).powi(2)
        } else {
            0.0
        };
        Ok(Self {
            m0,
            equilibrium,
            kappa,
            cache: std::cell::Cell::new((0.0, s0)),
        })
    }

    pub fn initial(&self) -> f64 {
        self.m0
    }

    /// `c₅M_∞`, the rest point.
    pub fn equilibrium(&self) -> f64 {
        self.equilibrium
    }

    /// `max{M0, c₅M_∞}`, valid for all times.
    pub fn global_bound(&self) -> f64 {
        self.m0.max(self.equilibrium)
    }

    /// `2c₅M_∞`, claimed for `t ≥ t_α`.
    pub fn long_time_bound(&self) -> f64 {
        2.0 * self.equilibrium
    }

    /// Entry time into the long-time bound, by the closed-form expression
    /// `(M0² / (4c₅²M_∞²) − 1) / (7κ)` when `M0 > 2c₅M_∞`.
    pub fn t_alpha(&self) -> f64 {
        if self.m0 <= 2.0 * self.equilibrium {
            0.0
        } else {
            ((self.m0 / (2.0 * self.equilibrium)).powi(2) - 1.0) / (7.0 * self.kappa)
        }
    }

    /// Exact first time the solution reaches `level`, by bisection on the
    /// monotone solution. `None` if it never does.
    pub fn crossing_time(&self, level: f64) -> Option<f64> {
        let towards = |m: f64| (m - level) * (self.m0 - self.equilibrium) <= 0.0;
        if (self.m0 - level).abs() == 0.0 {
            return Some(0.0);
        }
        let between = (level - self.m0) * (level - self.equilibrium) < 0.0;
        if !between {
            return None;
        }
        let mut hi = 1.0 / self.kappa;
        while !towards(self.value(hi)) {
            hi *= 2.0;
            if hi > 1e6 / self.kappa {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if towards(self.value(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// `M_α(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64) -> f64 {
        if self.equilibrium == 0.0 {
            return self.m0;
        }
        let tau = self.kappa * t;
        let (tau_cached, s_cached) = self.cache.get();
        let (start, s_start) = if tau >= tau_cached {
            (tau_cached, s_cached)
        } else {
            (0.0, (self.m0 / self.equilibrium).powi(2))
        };
        let s = dopri5(
            |_, s: f64| 1.0 - s.max(0.0).powf(1.5),
            start,
            s_start,
            tau,
            1e-12,
            1e-14,
        );
        self.cache.set((tau, s));
        self.equilibrium * s.max(0.0).sqrt()
    }

    pub fn samples(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.value(t)).collect()
    }
}

/// Critical Burgers Hölder bound
/// `max{[θ₀]_α, (4C₀C₁)^{1/2} π^{(1−2α)/2} B_∞^{1/2} ‖f‖_∞^{1/2}}` with
/// `C₁ = 32√C₀ / (3√3)`; constant in time.
pub fn burgers_holder_bound(m0: f64, alpha: f64, b_inf: f64, f_linf: f64, c2_1d: f64) -> f64 {
    let c1 = 32.0 * c2_1d.sqrt() / (3.0 * 3f64.sqrt());
    let forced =
        (4.0 * c2_1d * c1).sqrt() * std::f64::consts::PI.powf((1.0 - 2.0 * alpha) / 2.0) * (b_inf * f_linf).sqrt();
    m0.max(forced)
}

/// `B_∞ = ‖θ₀‖_∞ + ‖f‖_∞/c₀` and `α₀ = min{1/(8C₀B_∞), 1/4}` for critical Burgers.
pub fn burgers_budget(theta0_linf: f64, f_linf: f64, consts: &Constants) -> HolderBudget {
    let m_inf = theta0_linf + f_linf / consts.c0;
    let alpha0 = if m_inf > 0.0 {
        (1.0 / (8.0 * consts.c2_1d * m_inf)).min(0.25)
    } else {
        0.25
    };
    HolderBudget { m_inf, alpha0 }
}

/// Which comparison envelope a [`HolderTracker`] checks against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HolderEnvelopeKind {
    /// The SQG ODE envelope.
    Sqg { m_inf: f64, kappa: f64, c5: f64 },
    /// The time-independent critical Burgers bound.
    Burgers { b_inf: f64, f_linf: f64, c2_1d: f64 },
    /// Record only.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderSample {
    pub t: f64,
    /// `g(t)`, the squared seminorm.
    pub g: f64,
    pub argmax_x: [f64; 2],
    pub argmax_h: [f64; 2],
    /// Squared envelope; `None` when unchecked.
    pub envelope_sq: Option<f64>,
    pub violated: bool,
}

#[derive(Clone, Debug)]
pub struct FalsificationEvent {
    pub t: f64,
    pub g: f64,
    pub envelope_sq: f64,
    pub state: SpectralField,
}

enum Envelope {
    Ode(MAlphaEnvelope),
    Constant(f64),
}

/// Probe recording `g(t) = [θ(t)]²_{C^α}` and comparing it with the envelope
/// started from the measured seminorm at the first observation.
pub struct HolderTracker {
    alpha: f64,
    shifts: ShiftSet,
    kind: HolderEnvelopeKind,
    envelope: Option<Envelope>,
    samples: Vec<HolderSample>,
    events: Vec<FalsificationEvent>,
}

impl HolderTracker {
    pub fn new(alpha: f64, shifts: ShiftSet, kind: HolderEnvelopeKind) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!(
                "Hölder exponent must lie in (0, 1], got {alpha}"
            )));
        }
        if shifts.is_empty() {
            return Err(Error::domain("empty shift set"));
        }
        Ok(Self {
            alpha,
            shifts,
            kind,
            envelope: None,
            samples: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn samples(&self) -> &[HolderSample] {
        &self.samples
    }

    pub fn events(&self) -> &[FalsificationEvent] {
        &self.events
    }

    /// The ODE envelope, once the first sample fixed its initial value.
    pub fn ode_envelope(&self) -> Option<&MAlphaEnvelope> {
        match &self.envelope {
            Some(Envelope::Ode(e)) => Some(e),
            _ => None,
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("t,g,x1,x2,h1,h2,envelope_sq,violated\n");
        for r in &self.samples {
            let env = r.envelope_sq.map(|e| format!("{e:e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{:e},{},{},{},{},{},{}",
                r.t, r.g, r.argmax_x[0], r.argmax_x[1], r.argmax_h[0], r.argmax_h[1], env, r.violated as u8
            );
        }
        s
    }
}

impl Probe for HolderTracker {
    fn observe(&mut self, t: f64, theta: &SpectralField) -> Result<()> {
        let est = holder_seminorm(theta, self.alpha, &self.shifts)?;
        if self.envelope.is_none() {
            self.envelope = match self.kind {
                HolderEnvelopeKind::Sqg { m_inf, kappa, c5 } => {
                    Some(Envelope::Ode(MAlphaEnvelope::new(est.value, m_inf, kappa, c5)?))
                }
                HolderEnvelopeKind::Burgers { b_inf, f_linf, c2_1d } => Some(Envelope::Constant(burgers_holder_bound(
                    est.value, self.alpha, b_inf, f_linf, c2_1d,
                ))),
                HolderEnvelopeKind::None => None,
            };
        }
        let envelope_sq = self.envelope.as_ref().map(|e| match e {
            Envelope::Ode(ode) => ode.value(t).powi(2),
            Envelope::Constant(c) => c * c,
        });
        let g = est.value * est.value;
        let violated = envelope_sq.is_some_and(|e| exceeds(g, e));
        if violated {
            self.events.push(FalsificationEvent {
                t,
                g,
                envelope_sq: envelope_sq.unwrap_or(f64::NAN),
                state: theta.clone(),
            });
        }
        self.samples.push(HolderSample {
            t,
            g,
            argmax_x: est.argmax_x,
            argmax_h: est.argmax_h,
            envelope_sq,
            violated,
        });
        Ok(())
    }
}

/// Run a [`HolderTracker`] over stored snapshots.
pub fn track_holder(
    trajectory: &Trajectory,
    alpha: f64,
    shifts: ShiftSet,
    kind: HolderEnvelopeKind,
) -> Result<HolderTracker> {
    let mut tracker = HolderTracker::new(alpha, shifts, kind)?;
    for (t, theta) in trajectory.times.iter().zip(&trajectory.snapshots) {
        tracker.observe(*t, theta)?;
    }
    Ok(tracker)
}

/// Nonnegative number stored by its natural logarithm, for constants that
/// overflow `f64`. Once the logarithm itself overflows (doubly exponential
/// radii), the value is kept as `ln ln` instead; the two tiers compare
/// correctly because a second-tier value exceeds every first-tier one.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogValue {
    /// `+∞` on the second tier.
    ln: f64,
    /// Only meaningful when `ln` is `+∞`.
    lnln: f64,
}

#[allow(clippy::should_implement_trait)]
impl LogValue {
    pub const ZERO: Self = Self {
        ln: f64::NEG_INFINITY,
        lnln: f64::NEG_INFINITY,
    };

    pub fn new(x: f64) -> Self {
        debug_assert!(x >= 0.0);
        Self::from_ln(x.ln())
    }

    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::INFINITY {
            // an overflowed first-tier log carries no ln ln information
            return Self::from_lnln(f64::INFINITY);
        }
        Self {
            ln,
            lnln: f64::NEG_INFINITY,
        }
    }

    /// `exp(exp(lnln))`, dropping to the first tier when its log fits.
    pub fn from_lnln(lnln: f64) -> Self {
        let ln = lnln.exp();
        if ln.is_finite() {
            Self::from_ln(ln)
        } else {
            Self {
                ln: f64::INFINITY,
                lnln,
            }
        }
    }

    pub fn is_second_tier(self) -> bool {
        self.ln == f64::INFINITY
    }

    /// Natural log; `+∞` on the second tier.
    pub fn ln(self) -> f64 {
        self.ln
    }

    /// `ln ln` of the value; NaN below `e`.
    pub fn lnln(self) -> f64 {
        if self.is_second_tier() {
            self.lnln
        } else {
            self.ln.ln()
        }
    }

    /// Plain value; `+∞` once it overflows.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_finite_f64(self) -> bool {
        self.value().is_finite()
    }

    fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        match (self.is_second_tier(), other.is_second_tier()) {
            (false, false) => {
                let ln = self.ln + other.ln;
                if ln < f64::INFINITY {
                    Self::from_ln(ln)
                } else {
                    // both logs are huge and positive
                    Self::from_lnln(log_add_exp(self.ln.ln(), other.ln.ln()))
                }
            }
            (true, true) => Self::from_lnln(log_add_exp(self.lnln, other.lnln)),
            (true, false) => self.mul_small(other.ln),
            (false, true) => other.mul_small(self.ln),
        }
    }

    /// Second-tier `self` times `exp(ln)` with a first-tier `ln`.
    fn mul_small(self, ln: f64) -> Self {
        Self::from_lnln(self.lnln + (ln * (-self.lnln).exp()).ln_1p())
    }

    pub fn scale(self, a: f64) -> Self {
        self.mul(Self::new(a))
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_second_tier() || other.is_second_tier() {
            // a + b ≤ 2 max(a, b), and ln 2 vanishes against a second-tier log
            return self.max(other);
        }
        Self::from_ln(log_add_exp(self.ln, other.ln))
    }

    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::new(1.0);
        }
        if self.is_zero() {
            return if p > 0.0 {
                Self::ZERO
            } else {
                Self::from_ln(f64::INFINITY)
            };
        }
        if self.is_second_tier() {
            return if p > 0.0 {
                Self::from_lnln(self.lnln + p.ln())
            } else {
                Self::ZERO
            };
        }
        let ln = self.ln * p;
        if ln < f64::INFINITY {
            Self::from_ln(ln)
        } else {
            Self::from_lnln(self.ln.abs().ln() + p.abs().ln())
        }
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// `exp(x)` for a plain `x`.
    pub fn exp_of(x: f64) -> Self {
        Self::from_ln(x)
    }

    /// `exp(self)`. Saturates at `+∞` on the second tier when `self` is itself
    /// second-tier.
    pub fn exp(self) -> Self {
        if self.is_second_tier() {
            return Self::from_lnln(f64::INFINITY);
        }
        let v = self.value();
        if v.is_finite() {
            Self::from_ln(v)
        } else {
            Self::from_lnln(self.ln)
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_second_tier() {
            return write!(f, "exp({})", LogValue::exp_of(self.lnln));
        }
        let v = self.value();
        if v.is_finite() {
            write!(f, "{v:e}")
        } else if self.ln > 1e15 {
            // a decimal mantissa would carry no digits here
            write!(f, "exp({:e})", self.ln)
        } else {
            let dec = self.ln / std::f64::consts::LN_10;
            let exp = dec.floor();
            write!(f, "{:.6}e{}", 10f64.powf(dec - exp), exp as i64)
        }
    }
}

/// Absorbing-ball radii for a force, all functions of `κ`, `‖f‖_∞`, `‖f‖_{H¹}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsorbingConstants {
    pub alpha_star: f64,
    /// `2‖f‖_∞ / (ε₁κ)`.
    pub m_inf_f: f64,
    /// `H¹` ball radius.
    pub m1f: LogValue,
    /// `H^{3/2}` ball radius.
    pub m32f: LogValue,
    /// Bound on time-averaged `‖θ‖²_{H²}`, as a radius.
    pub m2f: LogValue,
}

impl AbsorbingConstants {
    /// `max{M_{3/2,f}, M_{2,f}}`, the attractor size fed to the dimension bound.
    pub fn m_attractor(&self) -> LogValue {
        self.m32f.max(self.m2f)
    }

    /// `((6+κ)/κ) M_{1,f}²`, the bound on `∫_t^{t+1} ‖θ‖²_{H^{3/2}}`.
    pub fn window_bound(&self, kappa: f64) -> LogValue {
        self.m1f.powf(2.0).scale((6.0 + kappa) / kappa)
    }
}

pub fn absorbing_constants(f_linf: f64, f_h1: f64, kappa: f64, consts: &Constants) -> Result<AbsorbingConstants> {
    if !(f_linf.is_finite() && f_h1.is_finite()) || f_linf < 0.0 || f_h1 < 0.0 {
        return Err(Error::domain(format!(
            "force norms must be finite, got ‖f‖_∞ = {f_linf}, ‖f‖_H¹ = {f_h1}"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::domain("κ must be positive"));
    }
    let alpha_star = if f_linf > 0.0 {
        (consts.eps1 * kappa * kappa / f_linf).min(0.25)
    } else {
        0.25
    };
    if alpha_star <= 0.0 {
        return Err(Error::domain("α_* vanished"));
    }
    let a = alpha_star;
    let m_inf_f = 2.0 * f_linf / (consts.eps1 * kappa);
    let fh1_sq = LogValue::new(f_h1 * f_h1);
    // M_{1,f}² = 72‖f‖²_{H¹}/κ² + c₈(8c₇)^{(3−3α)/(2α)} M_{∞,f}^{(9−α)/(4α)} / (3κ^{(9−3α)/(4α)})
    let lead = fh1_sq.scale(72.0 / (kappa * kappa));
    let stretch = LogValue::new(consts.c8)
        .mul(LogValue::new(8.0 * consts.c7).powf((3.0 - 3.0 * a) / (2.0 * a)))
        .mul(LogValue::new(m_inf_f).powf((9.0 - a) / (4.0 * a)))
        .mul(LogValue::new(kappa).powf(-(9.0 - 3.0 * a) / (4.0 * a)))
        .scale(1.0 / 3.0);
    let m1f_sq = lead.add(stretch);
    // M_{3/2,f}² = ((6+κ)/κ M_{1,f}² + ‖f‖²_{H¹}/κ) exp(c₉(6+κ) M_{1,f}² / κ²)
    let growth = consts.c9 * (6.0 + kappa) / (kappa * kappa);
    let m32f_sq = m1f_sq
        .scale((6.0 + kappa) / kappa)
        .add(fh1_sq.scale(1.0 / kappa))
        .mul(m1f_sq.scale(growth).exp());
    // M_{2,f}² = 2‖f‖²_{H¹}/κ² + 2c₉ M_{3/2,f}⁴ / κ²
    let m2f_sq = fh1_sq
        .scale(2.0 / (kappa * kappa))
        .add(m32f_sq.powf(2.0).scale(2.0 * consts.c9 / (kappa * kappa)));
    Ok(AbsorbingConstants {
        alpha_star,
        m_inf_f,
        m1f: m1f_sq.sqrt(),
        m32f: m32f_sq.sqrt(),
        m2f: m2f_sq.sqrt(),
    })
}

/// Bound `(X/r + B) e^A` on `x(t)` for `t ≥ t₀ + r`, given window integrals
/// `∫a ≤ A`, `∫b ≤ B`, `∫x ≤ X` over windows of length `r`.
pub fn uniform_gronwall(x: f64, a: f64, b: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("window length must be positive, got {r}")));
    }
    if x < 0.0 || a < 0.0 || b < 0.0 {
        return Err(Error::domain("window integrals must be nonnegative"));
    }
    Ok((x / r + b) * a.exp())
}

/// Entry into and permanence inside the `H¹` absorbing ball, plus the
/// unit-window `H^{3/2}` averages.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionReport {
    pub radius: f64,
    /// First snapshot time from which the norm stays in the ball.
    pub entry_time: Option<f64>,
    /// Snapshots outside the ball after the first entry.
    pub exits_after_entry: usize,
    pub window_bound: f64,
    pub max_window_integral: f64,
    pub window_violations: usize,
}

impl AbsorptionReport {
    pub fn holds(&self) -> bool {
        self.entry_time.is_some() && self.exits_after_entry == 0 && self.window_violations == 0
    }
}

/// `h1` and `h32_sq` are `‖θ‖_{H¹}` and `‖θ‖²_{H^{3/2}}` at `times`; windows of
/// unit length start at every snapshot whose `t + 1` is also a snapshot.
pub fn absorption_report(
    times: &[f64],
    h1: &[f64],
    h32_sq: &[f64],
    radius: LogValue,
    window_bound: LogValue,
) -> Result<AbsorptionReport> {
    if times.len() != h1.len() || times.len() != h32_sq.len() {
        return Err(Error::domain("series lengths differ"));
    }
    let radius = radius.value();
    let window_bound = window_bound.value();
    let first_in = h1.iter().position(|&v| !exceeds(v, radius));
    let exits = first_in.map_or(0, |i| h1[i..].iter().filter(|&&v| exceeds(v, radius)).count());
    let mut max_window: f64 = 0.0;
    let mut violations = 0;
    for start in 0..times.len() {
        let Some(end) = (start..times.len()).find(|&j| (times[j] - times[start] - 1.0).abs() < 1e-9) else {
            continue;
        };
        let integral: f64 = (start..end)
            .map(|j| 0.5 * (times[j + 1] - times[j]) * (h32_sq[j] + h32_sq[j + 1]))
            .sum();
        max_window = max_window.max(integral);
        if exceeds(integral, window_bound) {
            violations += 1;
        }
    }
    Ok(AbsorptionReport {
        radius,
        entry_time: first_in.map(|i| times[i]),
        exits_after_entry: exits,
        window_bound,
        max_window_integral: max_window,
        window_violations: violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MonitorStatus {
    Running,
    /// Difference hit numerical zero at this time; monitoring stopped.
    Indistinguishable {
        t: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogConvexitySample {
    pub t: f64,
    pub w: f64,
    pub budget: f64,
    pub violated: bool,
}

/// `w(t) = log(2m/‖θ₁ − θ₂‖)` against `w(0) + C ∫ ‖(θ₁+θ₂)/2‖²_{H^{3/2}}`,
/// with `m` the running max of the difference norm.
#[derive(Clone, Debug)]
pub struct LogConvexityMonitor {
    growth: f64,
    running_max: f64,
    w0: f64,
    integral: f64,
    last: Option<(f64, f64)>,
    samples: Vec<LogConvexitySample>,
    status: MonitorStatus,
}

impl LogConvexityMonitor {
    pub fn new(growth: f64) -> Self {
        Self {
            growth,
            running_max: 0.0,
            w0: f64::NAN,
            integral: 0.0,
            last: None,
            samples: Vec::new(),
            status: MonitorStatus::Running,
        }
    }

    pub fn status(&self) -> MonitorStatus {
        self.status
    }

    pub fn samples(&self) -> &[LogConvexitySample] {
        &self.samples
    }

    pub fn violations(&self) -> usize {
        self.samples.iter().filter(|s| s.violated).count()
    }

    pub fn observe(&mut self, t: f64, first: &SpectralField, second: &SpectralField) -> Result<()> {
        if first.grid() != second.grid() {
            return Err(Error::GridMismatch(first.grid().describe(), second.grid().describe()));
        }
        if self.status != MonitorStatus::Running {
            return Ok(());
        }
        let diff = (first - second).l2_norm();
        let scale = first.l2_norm().max(second.l2_norm());
        if diff == 0.0 || diff <= 1e-14 * scale {
            self.status = MonitorStatus::Indistinguishable { t };
            return Ok(());
        }
        let mean = (first + second).scale(0.5);
        let h32_sq = mean.sobolev_norm(1.5).powi(2);
        if let Some((t_prev, prev)) = self.last {
            self.integral += 0.5 * (t - t_prev) * (prev + h32_sq);
        }
        self.last = Some((t, h32_sq));
        self.running_max = self.running_max.max(diff);
        let w = (2.0 * self.running_max / diff).ln();
        if self.samples.is_empty() {
            self.w0 = w;
        }
        let budget = self.w0 + self.growth * self.integral;
        self.samples.push(LogConvexitySample {
            t,
            w,
            budget,
            violated: exceeds(w, budget),
        });
        Ok(())
    }
}

pub fn log_convexity_monitor(first: &Trajectory, second: &Trajectory, growth: f64) -> Result<LogConvexityMonitor> {
    if first.times != second.times {
        return Err(Error::Precondition("trajectory pair must share snapshot times".into()));
    }
    let mut monitor = LogConvexityMonitor::new(growth);
    for ((t, a), b) in first.times.iter().zip(&first.snapshots).zip(&second.snapshots) {
        monitor.observe(*t, a, b)?;
    }
    Ok(monitor)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeRow {
    pub t: f64,
    pub norm: f64,
    pub envelope: f64,
}

impl EnvelopeRow {
    pub fn slack(&self) -> f64 {
        self.envelope - self.norm
    }

    pub fn violated(&self) -> bool {
        exceeds(self.norm, self.envelope)
    }
}

pub fn envelope_csv(rows: &[EnvelopeRow]) -> String {
    let mut s = String::from("t,norm,envelope,slack,violated\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{}",
            r.t,
            r.norm,
            r.envelope,
            r.slack(),
            r.violated() as u8
        );
    }
    s
}

/// Compare a norm series with the `L^p` decay envelope.
pub fn decay_rows(times: &[f64], norms: &[f64], f_norm: f64, kappa: f64, c0: f64) -> Vec<EnvelopeRow> {
    let theta0 = norms.first().copied().unwrap_or(0.0);
    times
        .iter()
        .zip(norms)
        .map(|(&t, &norm)| EnvelopeRow {
            t,
            norm,
            envelope: decay_envelope(t, theta0, f_norm, kappa, c0),
        })
        .collect()
}

/// Every closed-form quantity for one `(θ₀, f, κ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeSet {
    pub constants: Constants,
    pub kappa: f64,
    pub holder: HolderBudget,
    pub absorbing: AbsorbingConstants,
}

impl EnvelopeSet {
    pub fn new(theta0_linf: f64, f_linf: f64, f_h1: f64, kappa: f64, constants: &Constants) -> Result<Self> {
        Ok(Self {
            constants: constants.clone(),
            kappa,
            holder: holder_budget(theta0_linf, f_linf, kappa, constants),
            absorbing: absorbing_constants(f_linf, f_h1, kappa, constants)?,
        })
    }

    /// `key = value` lines for reports.
    pub fn summary(&self) -> String {
        let a = &self.absorbing;
        format!(
            "kappa = {}\nm_inf = {:e}\nalpha0 = {:e}\nalpha_star = {:e}\nm_inf_f = {:e}\nm1f = {}\nm32f = {}\nm2f = {}\n",
            self.kappa, self.holder.m_inf, self.holder.alpha0, a.alpha_star, a.m_inf_f, a.m1f, a.m32f, a.m2f
        )
    }
}
