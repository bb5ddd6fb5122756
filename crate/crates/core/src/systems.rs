//! Concrete systems: the logistic and Hénon maps, the Lorenz and Chua flows,
//! and the scalar linear equation `x' = a x`.
//!
//! Each system is a typed parameter record with its step or field evaluator.
//! The letter `r` means three different things across the literature these
//! come from (logistic growth rate, Lorenz Rayleigh number, similarity ratio);
//! here each lives in its own record under its own name.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("logistic parameter mu must lie in [0, 4], got {0}")]
    LogisticOutOfRange(f64),
    #[error("Lorenz parameters must all be positive (sigma={sigma}, r={r}, b={b})")]
    LorenzNonPositive { sigma: f64, r: f64, b: f64 },
    #[error("Chua slopes must differ (m0 = m1 = {0} makes g linear)")]
    ChuaLinear(f64),
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("unknown system preset `{0}` (expected one of: logistic, henon, lorenz, chua, chua-paper-code, linear1d)")]
    UnknownPreset(String),
}

fn finite(name: &'static str, v: f64) -> Result<f64, ParamError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParamError::NonFinite { name })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    mu: f64,
}

impl LogisticParams {
    /// Graphical-iteration figure parameter.
    pub const COBWEB: Self = Self { mu: 3.8282 };
    /// Chaotic regime used by the stream cipher.
    pub const CHAOTIC: Self = Self { mu: 3.9 };

    pub fn new(mu: f64) -> Result<Self, ParamError> {
        if (0.0..=4.0).contains(&mu) {
            Ok(Self { mu })
        } else {
            Err(ParamError::LogisticOutOfRange(mu))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `mu * x * (1 - x)`, evaluated left to right.
pub fn logistic_step(p: LogisticParams, x: f64) -> f64 {
    p.mu * x * (1.0 - x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenonParams {
    pub a: f64,
    pub b: f64,
}

impl HenonParams {
    pub const CLASSIC: Self = Self { a: 1.2, b: 0.4 };

    pub fn new(a: f64, b: f64) -> Result<Self, ParamError> {
        Ok(Self { a: finite("a", a)?, b: finite("b", b)? })
    }
}

pub fn henon_step(p: HenonParams, (x, y): (f64, f64)) -> (f64, f64) {
    (1.0 + y - p.a * x * x, p.b * x)
}

/// Inverse of [`henon_step`]; only defined for `b != 0`.
pub fn henon_inverse(p: HenonParams, (x, y): (f64, f64)) -> (f64, f64) {
    let prev_x = y / p.b;
    (prev_x, x - 1.0 + p.a * prev_x * prev_x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    sigma: f64,
    r: f64,
    b: f64,
}

impl LorenzParams {
    pub const CLASSIC: Self = Self { sigma: 10.0, r: 28.0, b: 8.0 / 3.0 };

    pub fn new(sigma: f64, r: f64, b: f64) -> Result<Self, ParamError> {
        let (sigma, r, b) = (finite("sigma", sigma)?, finite("r", r)?, finite("b", b)?);
        if sigma > 0.0 && r > 0.0 && b > 0.0 {
            Ok(Self { sigma, r, b })
        } else {
            Err(ParamError::LorenzNonPositive { sigma, r, b })
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `(sigma (y - x), r x - y - x z, x y - b z)`.
pub fn lorenz_field(p: LorenzParams, s: &[f64], out: &mut [f64]) {
    let (x, y, z) = (s[0], s[1], s[2]);
    out[0] = p.sigma * (y - x);
    out[1] = p.r * x - y - x * z;
    out[2] = x * y - p.b * z;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChuaParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    m0: f64,
    m1: f64,
}

impl ChuaParams {
    /// Double-scroll parameters for the dimensionless circuit equations.
    pub const DOUBLE_SCROLL: Self = Self { c1: 15.0, c2: 1.0, c3: 25.58, m0: -8.0 / 7.0, m1: -5.0 / 7.0 };

    pub fn new(c1: f64, c2: f64, c3: f64, m0: f64, m1: f64) -> Result<Self, ParamError> {
        let m0 = finite("m0", m0)?;
        let m1 = finite("m1", m1)?;
        if m0 == m1 {
            return Err(ParamError::ChuaLinear(m0));
        }
        Ok(Self { c1: finite("c1", c1)?, c2: finite("c2", c2)?, c3: finite("c3", c3)?, m0, m1 })
    }

    /// Inner slope of the piecewise-linear characteristic.
    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// Outer slope of the piecewise-linear characteristic.
    pub fn m1(&self) -> f64 {
        self.m1
    }
}

/// Chua diode characteristic `m1 x + (m0 - m1)/2 (|x + 1| - |x - 1|)`.
pub fn chua_g(p: ChuaParams, x: f64) -> f64 {
    p.m1 * x + (p.m0 - p.m1) / 2.0 * ((x + 1.0).abs() - (x - 1.0).abs())
}

/// `(c1 (y - x - g(x)), c2 (x - y + z), -c3 y)`.
pub fn chua_field(p: ChuaParams, s: &[f64], out: &mut [f64]) {
    let (x, y, z) = (s[0], s[1], s[2]);
    out[0] = p.c1 * (y - x - chua_g(p, x));
    out[1] = p.c2 * (x - y + z);
    out[2] = -p.c3 * y;
}

/// Chua variant with the nonlinearity subtracted outside the `15 (y - x)`
/// term, outer slope `+5/7` and inner offset `(-8/7 + 5/7)/2`.
///
/// Both linear regions of this system are stable, so orbits decay to the
/// origin instead of forming a double scroll.
pub fn chua_paper_code_field(s: &[f64], out: &mut [f64]) {
    let (x, y, z) = (s[0], s[1], s[2]);
    let g = (5.0 / 7.0) * x + (1.0 / 2.0) * (-(8.0 / 7.0) - (-5.0 / 7.0)) * ((x + 1.0).abs() - (x - 1.0).abs());
    out[0] = 15.0 * (y - x) - g;
    out[1] = x - y + z;
    out[2] = -25.58 * y;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear1DParams {
    pub a: f64,
}

impl Linear1DParams {
    pub fn new(a: f64) -> Result<Self, ParamError> {
        Ok(Self { a: finite("a", a)? })
    }
}

pub fn linear_field(p: Linear1DParams, s: &[f64], out: &mut [f64]) {
    out[0] = p.a * s[0];
}

/// Closed-form solution `u0 e^{a t}`.
pub fn linear_solution(p: Linear1DParams, u0: f64, t: f64) -> f64 {
    u0 * (p.a * t).exp()
}

/// Named system presets understood by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Logistic,
    Henon,
    Lorenz,
    Chua,
    ChuaPaperCode,
    Linear1D,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Logistic, Preset::Henon, Preset::Lorenz, Preset::Chua, Preset::ChuaPaperCode, Preset::Linear1D];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Logistic => "logistic",
            Preset::Henon => "henon",
            Preset::Lorenz => "lorenz",
            Preset::Chua => "chua",
            Preset::ChuaPaperCode => "chua-paper-code",
            Preset::Linear1D => "linear1d",
        }
    }

    pub fn is_flow(self) -> bool {
        matches!(self, Preset::Lorenz | Preset::Chua | Preset::ChuaPaperCode | Preset::Linear1D)
    }

    pub fn dim(self) -> usize {
        match self {
            Preset::Logistic | Preset::Linear1D => 1,
            Preset::Henon => 2,
            Preset::Lorenz | Preset::Chua | Preset::ChuaPaperCode => 3,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| ParamError::UnknownPreset(s.to_string()))
    }
}

/// A fully parameterized system, ready to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Logistic(LogisticParams),
    Henon(HenonParams),
    Lorenz(LorenzParams),
    Chua(ChuaParams),
    ChuaPaperCode,
    Linear1D(Linear1DParams),
}

impl System {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Logistic => System::Logistic(LogisticParams::COBWEB),
            Preset::Henon => System::Henon(HenonParams::CLASSIC),
            Preset::Lorenz => System::Lorenz(LorenzParams::CLASSIC),
            Preset::Chua => System::Chua(ChuaParams::DOUBLE_SCROLL),
            Preset::ChuaPaperCode => System::ChuaPaperCode,
            Preset::Linear1D => System::Linear1D(Linear1DParams { a: 1.0 }),
        }
    }

    pub fn kind(&self) -> Preset {
        match self {
            System::Logistic(_) => Preset::Logistic,
            System::Henon(_) => Preset::Henon,
            System::Lorenz(_) => Preset::Lorenz,
            System::Chua(_) => Preset::Chua,
            System::ChuaPaperCode => Preset::ChuaPaperCode,
            System::Linear1D(_) => Preset::Linear1D,
        }
    }

    pub fn dim(&self) -> usize {
        self.kind().dim()
    }

    /// Names of the parameters accepted by [`System::with_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            System::Logistic(_) => &["mu"],
            System::Henon(_) => &["a", "b"],
            System::Lorenz(_) => &["sigma", "r", "b"],
            System::Chua(_) => &["c1", "c2", "c3", "m0", "m1"],
            System::ChuaPaperCode => &[],
            System::Linear1D(_) => &["a"],
        }
    }

    /// Returns a copy with one named parameter replaced, revalidated.
    pub fn with_param(self, name: &str, value: f64) -> Result<Self, String> {
        let unknown = || {
            format!(
                "system `{}` has no parameter `{}` (accepted: {})",
                self.kind(),
                name,
                if self.param_names().is_empty() { "none".to_string() } else { self.param_names().join(", ") }
            )
        };
        let err = |e: ParamError| e.to_string();
        Ok(match (self, name) {
            (System::Logistic(_), "mu") => System::Logistic(LogisticParams::new(value).map_err(err)?),
            (System::Henon(p), "a") => System::Henon(HenonParams::new(value, p.b).map_err(err)?),
            (System::Henon(p), "b") => System::Henon(HenonParams::new(p.a, value).map_err(err)?),
            (System::Lorenz(p), "sigma") => System::Lorenz(LorenzParams::new(value, p.r, p.b).map_err(err)?),
            (System::Lorenz(p), "r") => System::Lorenz(LorenzParams::new(p.sigma, value, p.b).map_err(err)?),
            (System::Lorenz(p), "b") => System::Lorenz(LorenzParams::new(p.sigma, p.r, value).map_err(err)?),
            (System::Chua(p), "c1") => System::Chua(ChuaParams::new(value, p.c2, p.c3, p.m0, p.m1).map_err(err)?),
            (System::Chua(p), "c2") => System::Chua(ChuaParams::new(p.c1, value, p.c3, p.m0, p.m1).map_err(err)?),
            (System::Chua(p), "c3") => System::Chua(ChuaParams::new(p.c1, p.c2, value, p.m0, p.m1).map_err(err)?),
            (System::Chua(p), "m0") => System::Chua(ChuaParams::new(p.c1, p.c2, p.c3, value, p.m1).map_err(err)?),
            (System::Chua(p), "m1") => System::Chua(ChuaParams::new(p.c1, p.c2, p.c3, p.m0, value).map_err(err)?),
            (System::Linear1D(_), "a") => System::Linear1D(Linear1DParams::new(value).map_err(err)?),
            _ => return Err(unknown()),
        })
    }

    /// Vector field of a flow preset; `None` for maps.
    pub fn field(&self) -> Option<impl Fn(f64, &[f64], &mut [f64]) + Sync + Copy> {
        if !self.kind().is_flow() {
            return None;
        }
        let sys = *self;
        Some(move |_t: f64, s: &[f64], out: &mut [f64]| match sys {
            System::Lorenz(p) => lorenz_field(p, s, out),
            System::Chua(p) => chua_field(p, s, out),
            System::ChuaPaperCode => chua_paper_code_field(s, out),
            System::Linear1D(p) => linear_field(p, s, out),
            System::Logistic(_) | System::Henon(_) => unreachable!("maps have no vector field"),
        })
    }

    /// One step of a map preset; `None` for flows.
    pub fn map(&self) -> Option<impl Fn(&[f64], &mut [f64]) + Sync + Copy> {
        let sys = *self;
        match sys {
            System::Logistic(_) | System::Henon(_) => Some(move |s: &[f64], out: &mut [f64]| match sys {
                System::Logistic(p) => out[0] = logistic_step(p, s[0]),
                System::Henon(p) => {
                    let (x, y) = henon_step(p, (s[0], s[1]));
                    out[0] = x;
                    out[1] = y;
                }
                _ => unreachable!("flows have no map step"),
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-6;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn logistic_examples() {
        for mu in [0.0, 1.5, 4.0] {
            assert_eq!(logistic_step(LogisticParams::new(mu).unwrap(), 0.0), 0.0);
        }
        assert_eq!(logistic_step(LogisticParams::new(2.0).unwrap(), 0.5), 0.5);
        assert!(close(logistic_step(LogisticParams::COBWEB, 0.2), 0.612512, 1e-12));
        assert!(LogisticParams::new(4.1).is_err());
        assert!(LogisticParams::new(-0.1).is_err());
    }

    #[test]
    fn henon_examples() {
        let p = HenonParams::CLASSIC;
        assert_eq!(henon_step(p, (0.0, 0.0)), (1.0, 0.0));
        let (x, y) = henon_step(p, (0.1, 0.0));
        assert!(close(x, 0.988, 1e-15) && close(y, 0.04, 1e-15));
        let degenerate = HenonParams::new(0.0, 0.0).unwrap();
        for (x, y) in [(3.0, -2.0), (-7.5, 0.25)] {
            assert_eq!(henon_step(degenerate, (x, y)), (1.0 + y, 0.0));
        }
    }

    #[test]
    fn lorenz_examples() {
        let mut out = [0.0; 3];
        lorenz_field(LorenzParams::CLASSIC, &[0.0, 0.0, 0.0], &mut out);
        assert_eq!(out, [0.0; 3]);
        lorenz_field(LorenzParams::CLASSIC, &[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 26.0);
        assert!(close(out[2], -5.0 / 3.0, 1e-12));
        let c = 72.0f64.sqrt();
        assert!(close(c, 8.485281, EPS));
        lorenz_field(LorenzParams::CLASSIC, &[c, c, 27.0], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12), "{out:?}");
        assert!(LorenzParams::new(10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn chua_g_examples() {
        let p = ChuaParams::DOUBLE_SCROLL;
        assert_eq!(chua_g(p, 0.0), 0.0);
        assert!(close(chua_g(p, 1.0), -8.0 / 7.0, 1e-15));
        assert!(close(chua_g(p, 1.0), -1.142857, EPS));
        assert!(close(chua_g(p, 10.0), -53.0 / 7.0, 1e-12));
        assert!(close(chua_g(p, 10.0), -7.571429, EPS));
        for x in [-0.9, -0.3, 0.25, 0.99] {
            assert!(close(chua_g(p, x), p.m0() * x, 1e-15));
        }
        assert!(ChuaParams::new(15.0, 1.0, 25.58, 0.5, 0.5).is_err());
    }

    #[test]
    fn chua_field_examples() {
        let p = ChuaParams::DOUBLE_SCROLL;
        let mut out = [1.0; 3];
        chua_field(p, &[0.0, 0.0, 0.0], &mut out);
        assert_eq!(out, [0.0; 3]);
        chua_field(p, &[1.0, 0.0, 0.0], &mut out);
        assert!(close(out[0], 15.0 / 7.0, 1e-12) && close(out[0], 2.142857, EPS));
        assert_eq!(out[1], 1.0);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn chua_paper_code_initial_field() {
        // g(-1.6) = -8/7 + (-3/14)(0.6 - 2.6) = -5/7, so x' = 24 + 5/7 = 173/7.
        let mut out = [0.0; 3];
        chua_paper_code_field(&[-1.6, 0.0, 1.6], &mut out);
        assert!(close(out[0], 173.0 / 7.0, 1e-12), "{}", out[0]);
        assert!(close(out[0], 24.714286, EPS));
        assert!(out[1].abs() < 1e-15);
        assert_eq!(out[2], 0.0);
        chua_paper_code_field(&[0.0, 0.0, 0.0], &mut out);
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn linear_solution_examples() {
        assert_eq!(linear_solution(Linear1DParams { a: 0.0 }, 7.0, 123.4), 7.0);
        assert!(close(linear_solution(Linear1DParams { a: 1.0 }, 1.0, 1.0), std::f64::consts::E, 1e-15));
        assert!(close(linear_solution(Linear1DParams { a: -1.0 }, 2.0, 2.0f64.ln()), 1.0, 1e-15));
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let err = "nosuch".parse::<Preset>().unwrap_err();
        assert!(err.to_string().contains("nosuch"));
    }

    #[test]
    fn with_param_validates() {
        let s = System::preset(Preset::Lorenz).with_param("r", 0.5).unwrap();
        assert_eq!(s, System::Lorenz(LorenzParams::new(10.0, 0.5, 8.0 / 3.0).unwrap()));
        assert!(System::preset(Preset::Lorenz).with_param("r", -1.0).is_err());
        assert!(System::preset(Preset::Lorenz).with_param("mu", 1.0).is_err());
        assert!(System::preset(Preset::ChuaPaperCode).with_param("c1", 1.0).is_err());
    }

    #[test]
    fn preset_dispatch() {
        assert!(System::preset(Preset::Lorenz).map().is_none());
        assert!(System::preset(Preset::Henon).field().is_none());
        let f = System::preset(Preset::Chua).field().unwrap();
        let mut out = [0.0; 3];
        f(0.0, &[1.0, 0.0, 0.0], &mut out);
        assert!(close(out[0], 15.0 / 7.0, 1e-12));
        let m = System::preset(Preset::Henon).map().unwrap();
        let mut next = [0.0; 2];
        m(&[0.0, 0.0], &mut next);
        assert_eq!(next, [1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn logistic_preserves_unit_interval(mu in 0.0f64..=4.0, x in 0.0f64..=1.0) {
            let y = logistic_step(LogisticParams::new(mu).unwrap(), x);
            prop_assert!((0.0..=1.0).contains(&y));
        }

        #[test]
        fn chua_g_is_odd(x in -1e6f64..1e6) {
            let p = ChuaParams::DOUBLE_SCROLL;
            prop_assert_eq!(chua_g(p, -x), -chua_g(p, x));
        }

        #[test]
        fn chua_g_continuous_at_breakpoints(eps in 1e-9f64..1e-3, m0 in -3.0f64..3.0, m1 in -3.0f64..3.0) {
            prop_assume!(m0 != m1);
            let p = ChuaParams::new(15.0, 1.0, 25.58, m0, m1).unwrap();
            for corner in [-1.0, 1.0] {
                // The two one-sided slopes are m0 and m1.
                let jump = (chua_g(p, corner + eps) - chua_g(p, corner - eps)).abs();
                prop_assert!(jump <= (m0.abs() + m1.abs()) * eps + 1e-12);
            }
        }

        #[test]
        fn henon_inverse_round_trip(x in -2.0f64..2.0, y in -1.0f64..1.0, a in 0.5f64..1.5, b in 0.1f64..0.9) {
            let p = HenonParams::new(a, b).unwrap();
            let (bx, by) = henon_inverse(p, henon_step(p, (x, y)));
            prop_assert!((bx - x).abs() < 1e-12 && (by - y).abs() < 1e-12);
        }
    }
}
