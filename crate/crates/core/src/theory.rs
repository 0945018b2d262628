//! Closed-form rate constants, localization thresholds and predicted
//! exponents of the convergence analysis, plus grid-level localization
//! indicators.
//!
//! The additive constants left unspecified by the analysis (the
//! `C(nu, L1, beta, eps)` term of the splitting growth constant and the
//! `C(eps_bar)` factor of the Euler one) are carried as explicit offsets that
//! default to zero. Rate exponents never depend on them.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::harness::random_smooth_field;
use crate::schemes::TrajectoryRecord;
use crate::spectral::{norm_bundle, Grid, SpectralField};

/// Inputs of the constant formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisParams {
    pub viscosity: f64,
    pub horizon: f64,
    /// `K0` of the growth condition (for `V`-valued coefficients when used
    /// in exponential-moment bounds).
    pub k0: f64,
    pub k1: f64,
    pub l1: f64,
    /// Moment order `q`.
    pub q_moment: f64,
    /// Young splitting parameter `beta` in `(0, 1)`.
    pub beta: f64,
    /// `eps_bar` of the Euler growth constant.
    pub eps_bar: f64,
    /// `eps` of the splitting thresholds.
    pub epsilon: f64,
    /// Time-Hölder / error exponent in `(0, 1/2)`.
    pub eta: f64,
    /// Interpolation constant in `||u||_{L^4}^2 <= C |u|_{L^2} |grad u|_{L^2}`.
    pub c_bar: f64,
    /// Poincaré-type constant in `||u||_V^2 <= C (|grad u|^2 + |A u|^2)`.
    pub c_tilde: f64,
    /// Hölder exponent `p > 1` of the additive thresholds.
    pub holder_p: f64,
    /// Additive constant of the splitting growth constant.
    pub splitting_offset: f64,
    /// Factor multiplying `L1` in the Euler growth constant.
    pub euler_offset: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            viscosity: 1.0,
            horizon: 1.0,
            k0: 1.0,
            k1: 0.0,
            l1: 0.0,
            q_moment: 3.0,
            beta: 0.5,
            eps_bar: 0.01,
            epsilon: 0.1,
            eta: 0.49,
            c_bar: 1.0,
            c_tilde: 1.0,
            holder_p: 1.05,
            splitting_offset: 0.0,
            euler_offset: 0.0,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        self.violations().into_iter().next().map_or(Ok(()), Err)
    }

    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<crate::Error> {
        let mut out = Vec::new();
        let mut check = |ok: bool, name: &'static str, what: String| {
            if !ok {
                out.push(invalid(name, what));
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        check(pos(self.viscosity), "viscosity", format!("must be > 0, got {}", self.viscosity));
        check(pos(self.horizon), "horizon", format!("must be > 0, got {}", self.horizon));
        check(nonneg(self.k0), "k0", format!("must be >= 0, got {}", self.k0));
        check(nonneg(self.k1), "k1", format!("must be >= 0, got {}", self.k1));
        check(nonneg(self.l1), "l1", format!("must be >= 0, got {}", self.l1));
        check(
            self.q_moment.is_finite() && self.q_moment >= 2.0,
            "q_moment",
            format!("must be >= 2, got {}", self.q_moment),
        );
        check(
            self.beta > 0.0 && self.beta < 1.0,
            "beta",
            format!("must lie in (0, 1), got {}", self.beta),
        );
        check(pos(self.eps_bar), "eps_bar", format!("must be > 0, got {}", self.eps_bar));
        check(pos(self.epsilon), "epsilon", format!("must be > 0, got {}", self.epsilon));
        check(
            self.eta > 0.0 && self.eta < 0.5,
            "eta",
            format!("must lie in (0, 1/2), got {}", self.eta),
        );
        check(pos(self.c_bar), "c_bar", format!("must be > 0, got {}", self.c_bar));
        check(pos(self.c_tilde), "c_tilde", format!("must be > 0, got {}", self.c_tilde));
        check(
            self.holder_p.is_finite() && self.holder_p > 1.0,
            "holder_p",
            format!("must be > 1, got {}", self.holder_p),
        );
        check(
            self.splitting_offset.is_finite(),
            "splitting_offset",
            "must be finite".into(),
        );
        check(self.euler_offset.is_finite(), "euler_offset", "must be finite".into());
        out
    }

    fn additive(&self) -> bool {
        self.k1 == 0.0 && self.k0 > 0.0
    }
}

/// `C_beta = 27 C_bar^2 / (256 beta^3)`.
pub fn c_beta(beta: f64, c_bar: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be > 0, got {beta}")));
    }
    Ok(c_bar * c_bar * 27.0 / (256.0 * beta.powi(3)))
}

/// `alpha_0 = nu / (4 K0 C_tilde)`; infinite when `K0 = 0`.
pub fn alpha0(viscosity: f64, k0: f64, c_tilde: f64) -> f64 {
    viscosity / (4.0 * k0 * c_tilde)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeFamily {
    Splitting,
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseRegime {
    /// General coefficients with linear growth (`K1 >= 0`).
    LinearGrowth,
    /// Bounded coefficients (`K1 = 0`), e.g. additive noise.
    Additive,
}

impl NoiseRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseRegime::LinearGrowth => "linear_growth",
            NoiseRegime::Additive => "additive",
        }
    }
}

/// Constants of one scheme family evaluated at fixed [`AnalysisParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct RateConstants {
    pub family: SchemeFamily,
    /// `C_beta` at the configured `beta`.
    pub c_beta: f64,
    /// `C_{nu beta}`, the constant entering the splitting thresholds.
    pub c_nu_beta: f64,
    /// Slope in `M` of the localized growth constant (`C~(M)` or `C1(M)`).
    pub growth_slope: f64,
    /// `M`-independent part of the growth constant.
    pub growth_offset: f64,
    pub alpha0: f64,
    /// Supremal admissible exponent for bounded noise; `None` when `K1 != 0`
    /// or `K0 = 0`.
    pub gamma_sup: Option<f64>,
    params: AnalysisParams,
}

/// Constants of the splitting scheme.
pub fn splitting_constants(p: &AnalysisParams) -> Result<RateConstants> {
    p.validate()?;
    let nu = p.viscosity;
    let a0 = alpha0(nu, p.k0, p.c_tilde);
    let gamma_sup = p
        .additive()
        .then(|| a0 / (p.c_bar * p.c_bar) * (512.0 * nu.powi(3) / (27.0 * p.horizon)).sqrt());
    Ok(RateConstants {
        family: SchemeFamily::Splitting,
        c_beta: c_beta(p.beta, p.c_bar)?,
        c_nu_beta: c_beta(nu * p.beta, p.c_bar)?,
        growth_slope: 27.0 * p.c_bar * p.c_bar / (32.0 * p.beta.powi(3) * nu.powi(3)),
        growth_offset: p.splitting_offset,
        alpha0: a0,
        gamma_sup,
        params: p.clone(),
    })
}

/// Constants of the fully implicit Euler scheme.
pub fn euler_constants(p: &AnalysisParams) -> Result<RateConstants> {
    p.validate()?;
    let nu = p.viscosity;
    let a0 = alpha0(nu, p.k0, p.c_tilde);
    let gamma_sup = p
        .additive()
        .then(|| 0.5 * a0 / (a0 + p.c_bar * p.c_bar * p.horizon / (2.0 * nu)));
    Ok(RateConstants {
        family: SchemeFamily::Euler,
        c_beta: c_beta(p.beta, p.c_bar)?,
        c_nu_beta: c_beta(nu * p.beta, p.c_bar)?,
        growth_slope: (1.0 + p.eps_bar) * p.c_bar * p.c_bar / (2.0 * nu),
        growth_offset: p.euler_offset * p.l1,
        alpha0: a0,
        gamma_sup,
        params: p.clone(),
    })
}

impl RateConstants {
    pub fn params(&self) -> &AnalysisParams {
        &self.params
    }

    /// `C~(M)` (splitting) or `C1(M)` (Euler).
    pub fn growth_constant(&self, m: f64) -> f64 {
        self.growth_slope * m + self.growth_offset
    }

    fn require_additive(&self) -> Result<()> {
        if self.params.additive() {
            Ok(())
        } else {
            Err(invalid(
                "k1",
                format!(
                    "bounded-noise rates need K1 = 0 and K0 > 0 (K0 = {}, K1 = {})",
                    self.params.k0, self.params.k1
                ),
            ))
        }
    }

    /// Splitting `2 (1 + eps) C_{nu beta} T`.
    fn splitting_a2(&self) -> f64 {
        2.0 * (1.0 + self.params.epsilon) * self.c_nu_beta * self.params.horizon
    }

    /// Euler additive denominator `nu / (p 4 K0 C~) + (1 + eps_bar) C_bar^2 T / (2 nu)`.
    fn euler_additive_denominator(&self) -> f64 {
        let p = &self.params;
        p.viscosity / (p.holder_p * 4.0 * p.k0 * p.c_tilde)
            + (1.0 + p.eps_bar) * p.c_bar * p.c_bar * p.horizon / (2.0 * p.viscosity)
    }

    /// Localization threshold `M(N)` balancing the localized error bound
    /// against the probability of leaving the localization set.
    pub fn threshold_m_of_n(&self, n: f64, regime: NoiseRegime) -> Result<f64> {
        if !(n.is_finite() && n > 1.0) {
            return Err(invalid("n", format!("must be > 1, got {n}")));
        }
        let p = &self.params;
        let ln_n = n.ln();
        match (self.family, regime) {
            (SchemeFamily::Splitting, NoiseRegime::LinearGrowth) => {
                Ok((ln_n - 0.5 * (p.q_moment - 1.0) * ln_n.ln()) / self.splitting_a2())
            }
            (SchemeFamily::Splitting, NoiseRegime::Additive) => {
                self.require_additive()?;
                let a2 = self.splitting_a2();
                let a1 = 2.0 * self.alpha0 / (p.holder_p * p.c_bar);
                let x = (-a1 + (a1 * a1 + 4.0 * a2 * ln_n).sqrt()) / (2.0 * a2);
                Ok(x * x)
            }
            (SchemeFamily::Euler, NoiseRegime::LinearGrowth) => {
                let lead = 2.0 * p.viscosity / ((1.0 + p.eps_bar) * p.c_bar * p.c_bar * p.horizon);
                let correction = 2f64.powf(p.q_moment - 1.0) - 1.0;
                Ok(lead * (p.eta * ln_n - correction * ln_n.ln()))
            }
            (SchemeFamily::Euler, NoiseRegime::Additive) => {
                self.require_additive()?;
                Ok(p.eta * ln_n / self.euler_additive_denominator())
            }
        }
    }

    /// `lim M(N) / ln N` of [`threshold_m_of_n`](Self::threshold_m_of_n).
    pub fn threshold_leading_coefficient(&self, regime: NoiseRegime) -> Result<f64> {
        let p = &self.params;
        match (self.family, regime) {
            (SchemeFamily::Splitting, NoiseRegime::LinearGrowth) => Ok(1.0 / self.splitting_a2()),
            (SchemeFamily::Splitting, NoiseRegime::Additive) => {
                self.require_additive()?;
                Ok(1.0 / self.splitting_a2())
            }
            (SchemeFamily::Euler, NoiseRegime::LinearGrowth) => {
                Ok(2.0 * p.viscosity * p.eta / ((1.0 + p.eps_bar) * p.c_bar * p.c_bar * p.horizon))
            }
            (SchemeFamily::Euler, NoiseRegime::Additive) => {
                self.require_additive()?;
                Ok(p.eta / self.euler_additive_denominator())
            }
        }
    }
}

/// Spectral Poincaré constant: the smallest `C` with
/// `|u|^2 + |grad u|^2 <= C (|grad u|^2 + |A u|^2)` on mean-zero fields,
/// `(L / 2 pi)^2`.
pub fn poincare_constant(grid: &Grid) -> f64 {
    1.0 / grid.wavenumber_unit().powi(2)
}

/// `||u||_{L^4}^2 / (|u|_{L^2} |grad u|_{L^2})`, or 0 for the zero field.
pub fn gn_ratio(u: &SpectralField) -> f64 {
    let nb = norm_bundle(u);
    if nb.l2 == 0.0 {
        0.0
    } else {
        nb.l4 * nb.l4 / (nb.l2 * nb.grad_l2)
    }
}

/// Running maximum of [`gn_ratio`] over `n_samples` random dealiased fields.
///
/// Sample `s` depends only on `(seed, s)`, with spectral decay exponents
/// cycling through `[0.5, 3)`; the result is a lower bound for any valid
/// interpolation constant.
pub fn estimate_gn_constant(grid: &Grid, n_samples: usize, seed: u64) -> f64 {
    (0..n_samples)
        .map(|s| {
            let decay = 0.5 + 2.5 * ((s as f64 * 0.618_033_988_749_895).fract());
            let field = random_smooth_field(*grid, decay, 1.0, seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            gn_ratio(&field)
        })
        .fold(0.0, f64::max)
}

/// Which running supremum defines the localization set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Localization {
    /// `max_{1 <= j <= k} |grad u(t_j)|^2 <= M`.
    GradSup,
    /// `max_{0 <= j <= k} ||u(t_j)||_X^4 <= M`.
    XNormSup,
}

/// Indicator of the localization set at every grid index `k = 0..=N`.
/// Non-increasing in `k`; `M = +inf` gives all `true`.
pub fn localization_indicator(record: &TrajectoryRecord, m_threshold: f64, variant: Localization) -> Vec<bool> {
    let mut running = f64::NEG_INFINITY;
    record
        .states
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let value = match variant {
                Localization::GradSup if k == 0 => f64::NEG_INFINITY,
                Localization::GradSup => norm_bundle(u).grad_l2.powi(2),
                Localization::XNormSup => norm_bundle(u).x_norm.powi(4),
            };
            running = running.max(value);
            running <= m_threshold
        })
        .collect()
}

/// One row of the constants table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantRow {
    pub name: String,
    pub value: f64,
    pub formula: &'static str,
    pub regime: &'static str,
}

/// Every closed-form quantity at `p`, with thresholds evaluated at `n`.
/// Bounded-noise entries are omitted when `K1 != 0` or `K0 = 0`.
pub fn constants_table(p: &AnalysisParams, n: f64) -> Result<Vec<ConstantRow>> {
    let s = splitting_constants(p)?;
    let e = euler_constants(p)?;
    let row = |name: String, value: f64, formula: &'static str, regime: &'static str| ConstantRow {
        name,
        value,
        formula,
        regime,
    };
    let mut rows = vec![
        row("c_bar".into(), p.c_bar, "input (empirical estimate unless overridden)", "all"),
        row("c_tilde".into(), p.c_tilde, "input (spectral bound unless overridden)", "all"),
        row("c_beta".into(), s.c_beta, "27*c_bar^2/(256*beta^3)", "all"),
        row("c_nu_beta".into(), s.c_nu_beta, "27*c_bar^2/(256*(nu*beta)^3)", "all"),
        row(
            "splitting.growth_slope".into(),
            s.growth_slope,
            "27*c_bar^2/(32*beta^3*nu^3)",
            "splitting",
        ),
        row(
            "splitting.growth_offset".into(),
            s.growth_offset,
            "unspecified constant (configured)",
            "splitting",
        ),
        row(
            format!("splitting.threshold_m({n})"),
            s.threshold_m_of_n(n, NoiseRegime::LinearGrowth)?,
            "(ln N - (q-1)/2 ln ln N)/(2(1+eps) c_nu_beta T)",
            "splitting_linear_growth",
        ),
        row("euler.growth_slope".into(), e.growth_slope, "(1+eps_bar)*c_bar^2/(2 nu)", "euler"),
        row("euler.growth_offset".into(), e.growth_offset, "C(eps_bar)*L1 (configured)", "euler"),
        row(
            format!("euler.threshold_m({n})"),
            e.threshold_m_of_n(n, NoiseRegime::LinearGrowth)?,
            "2 nu/((1+eps_bar) c_bar^2 T) (eta ln N - (2^(q-1)-1) ln ln N)",
            "euler_linear_growth",
        ),
        row(
            "euler.threshold_leading_coefficient".into(),
            e.threshold_leading_coefficient(NoiseRegime::LinearGrowth)?,
            "2 nu eta/((1+eps_bar) c_bar^2 T)",
            "euler_linear_growth",
        ),
    ];
    if p.additive() {
        rows.extend([
            row("alpha0".into(), e.alpha0, "nu/(4 K0 c_tilde)", "additive"),
            row(
                "splitting.gamma_sup".into(),
                s.gamma_sup.expect("additive regime"),
                "alpha0/c_bar^2 * sqrt(512 nu^3/(27 T))",
                "splitting_additive",
            ),
            row(
                format!("splitting.threshold_m_additive({n})"),
                s.threshold_m_of_n(n, NoiseRegime::Additive)?,
                "X^2, a2 X^2 + a1 X - ln N = 0, a2 = 2(1+eps) c_nu_beta T, a1 = 2 alpha0/(p c_bar)",
                "splitting_additive",
            ),
            row(
                "euler.gamma_sup".into(),
                e.gamma_sup.expect("additive regime"),
                "1/2 * alpha0/(alpha0 + c_bar^2 T/(2 nu))",
                "euler_additive",
            ),
            row(
                format!("euler.threshold_m_additive({n})"),
                e.threshold_m_of_n(n, NoiseRegime::Additive)?,
                "eta ln N/(nu/(p 4 K0 c_tilde) + (1+eps_bar) c_bar^2 T/(2 nu))",
                "euler_additive",
            ),
        ]);
    }
    Ok(rows)
}

/// CSV with columns `name,value,formula_ref,regime`.
pub fn write_constants_csv<W: Write>(rows: &[ConstantRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "value", "formula_ref", "regime"])?;
    for r in rows {
        out.write_record([r.name.as_str(), &format!("{:.17e}", r.value), r.formula, r.regime])?;
    }
    out.flush()?;
    Ok(())
}
