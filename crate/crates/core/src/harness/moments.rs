use std::fmt;
use std::io::Write;

use super::stats::compensated_sum;
use crate::error::{invalid, Error, Result};
use crate::schemes::TrajectoryRecord;
use crate::spectral::sobolev_sq;
use crate::theory::{localization_indicator, Localization};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentStatistic {
    /// `E max_k ||u_k||_V^{2p}`.
    MaxVMoment,
    /// `E (T/N) sum_{k=1}^N ||u_k||_V^{2p-2} |A u_k|^2`.
    DissipationMoment,
    /// Empirical probability of leaving the `grad_sup` localization set by `t_N`.
    ComplementProbability,
    /// `E exp(alpha max_k ||u_k||_V^2)`.
    ExpMoment,
}

impl MomentStatistic {
    pub fn as_str(&self) -> &'static str {
        match self {
            MomentStatistic::MaxVMoment => "max_v_moment",
            MomentStatistic::DissipationMoment => "dissipation_moment",
            MomentStatistic::ComplementProbability => "complement_probability",
            MomentStatistic::ExpMoment => "exp_moment",
        }
    }
}

impl fmt::Display for MomentStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    /// `p`, `M` or `alpha` depending on the statistic.
    pub parameter: f64,
    pub statistic: MomentStatistic,
    pub value: f64,
    /// Largest relative deviation of either half-sample mean from the full
    /// mean (exp moments only).
    pub half_sample_change: Option<f64>,
}

impl MomentRow {
    /// Stable when both half-sample means lie within 20% of the full mean.
    pub fn is_stable(&self) -> Option<bool> {
        self.half_sample_change.map(|c| c.is_finite() && c < 0.2)
    }
}

struct Summary {
    max_v_sq: f64,
    dt: f64,
    /// `(||u_k||_V^2, |A u_k|^2)` for `k = 1..=N`.
    tail: Vec<(f64, f64)>,
    record: usize,
}

fn mean(values: impl IntoIterator<Item = f64>, n: usize) -> f64 {
    compensated_sum(values) / n as f64
}

/// Empirical moment and localization statistics over an ensemble.
pub fn moment_report(
    records: &[TrajectoryRecord],
    p_orders: &[f64],
    m_ladder: &[f64],
    alpha_ladder: &[f64],
) -> Result<Vec<MomentRow>> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("moment report needs at least one record".into()))?;
    for r in records {
        if r.params != first.params || r.states.first().map(|u| *u.grid()) != first.states.first().map(|u| *u.grid()) {
            return Err(invalid("records", "records must share scheme parameters and grid".to_string()));
        }
    }
    for &p in p_orders {
        if !(p.is_finite() && p >= 1.0) {
            return Err(invalid("p_orders", format!("entries must be >= 1, got {p}")));
        }
    }
    let summaries: Vec<Summary> = records
        .iter()
        .enumerate()
        .map(|(idx, r)| {
            let norms: Vec<(f64, f64)> = r
                .states
                .iter()
                .map(|u| {
                    let (l2, grad, stokes) = sobolev_sq(u);
                    (l2 + grad, stokes)
                })
                .collect();
            Summary {
                max_v_sq: norms.iter().map(|n| n.0).fold(0.0, f64::max),
                dt: r.params.dt(),
                tail: norms[1..].to_vec(),
                record: idx,
            }
        })
        .collect();
    let n = summaries.len();
    let mut rows = Vec::new();
    for &p in p_orders {
        rows.push(MomentRow {
            parameter: p,
            statistic: MomentStatistic::MaxVMoment,
            value: mean(summaries.iter().map(|s| s.max_v_sq.powf(p)), n),
            half_sample_change: None,
        });
        rows.push(MomentRow {
            parameter: p,
            statistic: MomentStatistic::DissipationMoment,
            value: mean(
                summaries
                    .iter()
                    .map(|s| s.dt * compensated_sum(s.tail.iter().map(|(v, a)| v.powf(p - 1.0) * a))),
                n,
            ),
            half_sample_change: None,
        });
    }
    for &m in m_ladder {
        let escaped = summaries
            .iter()
            .filter(|s| {
                let ind = localization_indicator(&records[s.record], m, Localization::GradSup);
                !*ind.last().expect("record holds u_0")
            })
            .count();
        rows.push(MomentRow {
            parameter: m,
            statistic: MomentStatistic::ComplementProbability,
            value: escaped as f64 / n as f64,
            half_sample_change: None,
        });
    }
    for &alpha in alpha_ladder {
        let vals: Vec<f64> = summaries.iter().map(|s| (alpha * s.max_v_sq).exp()).collect();
        let full = mean(vals.iter().copied(), n);
        let half = n / 2;
        let change = if half == 0 {
            None
        } else {
            let a = mean(vals[..half].iter().copied(), half);
            let b = mean(vals[half..].iter().copied(), n - half);
            Some(((a - full).abs()).max((b - full).abs()) / full)
        };
        rows.push(MomentRow {
            parameter: alpha,
            statistic: MomentStatistic::ExpMoment,
            value: full,
            half_sample_change: change,
        });
    }
    Ok(rows)
}

/// `moments.csv`: `p_or_alpha_or_M,statistic,value,stability_flag`; the flag
/// is `stable`, `unstable` or `na`.
pub fn write_moments_csv<W: Write>(rows: &[MomentRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["p_or_alpha_or_M", "statistic", "value", "stability_flag"])?;
    for r in rows {
        let flag = match r.is_stable() {
            Some(true) => "stable",
            Some(false) => "unstable",
            None => "na",
        };
        out.write_record([
            format!("{}", r.parameter),
            r.statistic.to_string(),
            format!("{:.17e}", r.value),
            flag.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
