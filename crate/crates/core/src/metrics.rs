//! Aggregation of episode records into curves, tables and summary checks.
//!
//! Every function here is a pure function of its inputs.

use std::fmt::Write as _;

use crate::constraint::{delay_cdf, reliability};
use crate::error::{Error, Result};
use crate::sim::{EpisodeRecord, UserTotals};

/// Trailing mean; the first `k < w` points average the `k` samples seen.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySamples);
    }
    if window == 0 {
        return Err(Error::Usage("moving-average window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        let n = (i + 1).min(window);
        // recompute short windows exactly so constant series stay constant
        let v = if n < 64 {
            series[i + 1 - n..=i].iter().sum::<f64>() / n as f64
        } else {
            sum / n as f64
        };
        out.push(v);
    }
    Ok(out)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`.
pub fn linear_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = mean(ys);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Ranks with ties given their average rank (1-based).
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns 0 when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "rank correlation needs paired samples");
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let (mx, my) = (mean(&rx), mean(&ry));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Per-episode series of a run plus its pooled delay statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub returns: Vec<f64>,
    pub smoothed_returns: Vec<f64>,
    pub backlog_embb: Vec<f64>,
    pub backlog_hrllc: Vec<f64>,
    pub drift_embb: Vec<f64>,
    pub drift_hrllc: Vec<f64>,
    pub delays: Vec<f64>,
    /// Fraction of HRLLC packets within `d_max_s`; `None` if none departed.
    pub reliability: Option<f64>,
    pub totals: UserTotals,
}

impl RunSummary {
    pub fn from_records(records: &[EpisodeRecord], window: usize, d_max_s: f64) -> Result<Self> {
        let returns: Vec<f64> = records.iter().map(|r| r.episode_return).collect();
        let delays: Vec<f64> = records.iter().flat_map(|r| r.hrllc_delays.iter().copied()).collect();
        let mut totals = UserTotals::default();
        for r in records {
            totals.merge(&r.totals);
        }
        Ok(Self {
            smoothed_returns: moving_average(&returns, window)?,
            returns,
            backlog_embb: records.iter().map(|r| r.mean_backlog_embb).collect(),
            backlog_hrllc: records.iter().map(|r| r.mean_backlog_hrllc).collect(),
            drift_embb: records.iter().map(|r| r.mean_drift_embb).collect(),
            drift_hrllc: records.iter().map(|r| r.mean_drift_hrllc).collect(),
            reliability: reliability(&delays, d_max_s).ok(),
            delays,
            totals,
        })
    }
}

/// Mean of the first and last `fraction` of a series.
pub fn head_tail_means(series: &[f64], fraction: f64) -> (f64, f64) {
    let k = ((series.len() as f64 * fraction).round() as usize).clamp(1, series.len().max(1));
    (mean(&series[..k]), mean(&series[series.len() - k..]))
}

/// Slope of the smoothed return curve at the end versus its steepest part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauReport {
    pub final_slope: f64,
    pub peak_slope: f64,
    /// `|final_slope| / |peak_slope|`.
    pub ratio: f64,
}

/// Fits a least-squares slope to every `window`-long stretch of `smoothed`
/// and compares the last stretch with the steepest one.
pub fn plateau(smoothed: &[f64], window: usize) -> PlateauReport {
    let w = window.clamp(2, smoothed.len().max(2));
    if smoothed.len() < w {
        return PlateauReport {
            final_slope: 0.0,
            peak_slope: 0.0,
            ratio: 0.0,
        };
    }
    let slopes: Vec<f64> = smoothed.windows(w).map(linear_slope).collect();
    let final_slope = *slopes.last().unwrap();
    let peak_slope = slopes.iter().copied().fold(0.0f64, |m, s| if s.abs() > m.abs() { s } else { m });
    let ratio = if peak_slope == 0.0 { 0.0 } else { final_slope.abs() / peak_slope.abs() };
    PlateauReport {
        final_slope,
        peak_slope,
        ratio,
    }
}

/// Largest rise of a trailing-mean series over its final third, relative
/// to the series maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendReport {
    /// `max over i < j in the final third of s[j] - s[i]`.
    pub max_rise: f64,
    pub series_max: f64,
    /// `max_rise / series_max` (0 when the series is all zero).
    pub relative_rise: f64,
}

pub fn final_third_rise(series: &[f64], window: usize) -> Result<TrendReport> {
    let s = moving_average(series, window)?;
    let start = s.len() - s.len() / 3;
    let tail = &s[start..];
    let mut low = f64::INFINITY;
    let mut max_rise = 0.0f64;
    for &v in tail {
        low = low.min(v);
        max_rise = max_rise.max(v - low);
    }
    let series_max = s.iter().copied().fold(0.0, f64::max);
    Ok(TrendReport {
        max_rise,
        series_max,
        relative_rise: if series_max > 0.0 { max_rise / series_max } else { 0.0 },
    })
}

/// Mean of the final third of `series` against the largest absolute value
/// anywhere in it.
pub fn final_third_share(series: &[f64]) -> (f64, f64) {
    let start = series.len() - series.len() / 3;
    let tail_mean = mean(&series[start..]);
    let peak = series.iter().map(|x| x.abs()).fold(0.0, f64::max);
    (tail_mean, peak)
}

/// Aligned per-episode return table and delay statistics per policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub policies: Vec<String>,
    /// `returns[e][p]`: return of policy `p` in episode `e`.
    pub returns: Vec<Vec<f64>>,
    pub smoothed: Vec<Vec<f64>>,
    pub cdfs: Vec<Vec<(f64, f64)>>,
    pub reliability: Vec<f64>,
    pub delay_samples: Vec<usize>,
}

/// Lines up runs of several policies that used identical seeds.
pub fn compare_policies(runs: &[(String, Vec<EpisodeRecord>)], window: usize, d_max_s: f64) -> Result<Comparison> {
    let Some((_, first)) = runs.first() else {
        return Err(Error::EmptySamples);
    };
    let n = first.len();
    for (name, recs) in runs {
        if recs.len() != n {
            return Err(Error::MismatchedRuns(format!(
                "{name} has {} episodes, expected {n}",
                recs.len()
            )));
        }
        for (a, b) in recs.iter().zip(first) {
            if a.episode != b.episode {
                return Err(Error::MismatchedRuns(format!(
                    "{name} ran episode {} where the first run has {}",
                    a.episode, b.episode
                )));
            }
        }
    }
    let mut returns = vec![Vec::with_capacity(runs.len()); n];
    let mut smoothed_cols = Vec::new();
    let mut cdfs = Vec::new();
    let mut rel = Vec::new();
    let mut samples = Vec::new();
    for (_, recs) in runs {
        let col: Vec<f64> = recs.iter().map(|r| r.episode_return).collect();
        for (e, v) in col.iter().enumerate() {
            returns[e].push(*v);
        }
        smoothed_cols.push(if col.is_empty() { Vec::new() } else { moving_average(&col, window)? });
        let delays: Vec<f64> = recs.iter().flat_map(|r| r.hrllc_delays.iter().copied()).collect();
        samples.push(delays.len());
        cdfs.push(delay_cdf(&delays)?);
        rel.push(reliability(&delays, d_max_s)?);
    }
    let smoothed = (0..n).map(|e| smoothed_cols.iter().map(|c| c[e]).collect()).collect();
    Ok(Comparison {
        policies: runs.iter().map(|(n, _)| n.clone()).collect(),
        returns,
        smoothed,
        cdfs,
        reliability: rel,
        delay_samples: samples,
    })
}

/// One HRLLC user in the dexterity-sensitivity table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRow {
    pub user: usize,
    pub dxi: f64,
    pub mean_arrivals: f64,
    pub mean_departures: f64,
    pub mean_prbs: f64,
    pub mean_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable {
    /// Sorted by DXI (stable, so equal DXI keep user order).
    pub rows: Vec<SensitivityRow>,
    /// Spearman correlation between DXI and mean PRBs.
    pub rank_correlation: f64,
}

/// Per-HRLLC-user means pooled over `records`. `dxi[h]` is the constant
/// index of HRLLC user `h`.
pub fn dexterity_sensitivity(records: &[EpisodeRecord], dxi: &[f64], num_embb: usize) -> Result<SensitivityTable> {
    if records.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut totals = UserTotals::default();
    for r in records {
        totals.merge(&r.totals);
    }
    let mut rows: Vec<SensitivityRow> = dxi
        .iter()
        .enumerate()
        .map(|(h, &d)| {
            let (a, dep, prb, rate) = totals.means(num_embb + h);
            SensitivityRow {
                user: h,
                dxi: d,
                mean_arrivals: a,
                mean_departures: dep,
                mean_prbs: prb,
                mean_rate_bps: rate,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.dxi.total_cmp(&b.dxi));
    let xs: Vec<f64> = rows.iter().map(|r| r.dxi).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_prbs).collect();
    Ok(SensitivityTable {
        rank_correlation: spearman(&xs, &ys),
        rows,
    })
}

/// Before/during comparison for the user hit by a two-step DXI profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResponse {
    pub user: usize,
    pub dxi_base: f64,
    pub dxi_peak: f64,
    pub beta_dex: f64,
    pub outside_arrivals: f64,
    pub inside_arrivals: f64,
    pub outside_prbs: f64,
    pub inside_prbs: f64,
    pub outside_rate_bps: f64,
    pub inside_rate_bps: f64,
}

impl StepResponse {
    /// Expected arrival drop `beta_dex * (peak - base)`.
    pub fn expected_drop(&self) -> f64 {
        self.beta_dex * (self.dxi_peak - self.dxi_base)
    }

    pub fn measured_drop(&self) -> f64 {
        self.outside_arrivals - self.inside_arrivals
    }

    pub fn prb_change(&self) -> f64 {
        self.inside_prbs - self.outside_prbs
    }
}

/// Splits pooled per-user totals into the step window and the rest.
pub fn step_response(
    records: &[EpisodeRecord],
    user: usize,
    num_embb: usize,
    dxi_base: f64,
    dxi_peak: f64,
    beta_dex: f64,
) -> Result<StepResponse> {
    if records.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut all = UserTotals::default();
    let mut inside = UserTotals::default();
    for r in records {
        all.merge(&r.totals);
        inside.merge(&r.step_totals);
    }
    let outside = all.minus(&inside);
    let u = num_embb + user;
    let (oa, _, op, orate) = outside.means(u);
    let (ia, _, ip, irate) = inside.means(u);
    Ok(StepResponse {
        user,
        dxi_base,
        dxi_peak,
        beta_dex,
        outside_arrivals: oa,
        inside_arrivals: ia,
        outside_prbs: op,
        inside_prbs: ip,
        outside_rate_bps: orate,
        inside_rate_bps: irate,
    })
}

/// Per-slot means over episodes of one HRLLC user's DXI, arrivals and
/// PRBs. Uses the slot traces of `records`.
pub fn slot_profile(records: &[EpisodeRecord], user: usize, num_embb: usize) -> Result<Vec<[f64; 3]>> {
    let traced: Vec<&EpisodeRecord> = records.iter().filter(|r| !r.slots.is_empty()).collect();
    let Some(len) = traced.iter().map(|r| r.slots.len()).min() else {
        return Err(Error::EmptySamples);
    };
    let n = traced.len() as f64;
    let u = num_embb + user;
    Ok((0..len)
        .map(|t| {
            let mut acc = [0.0; 3];
            for r in &traced {
                let s = &r.slots[t];
                acc[0] += s.dxi[user];
                acc[1] += s.arrivals[u] as f64;
                acc[2] += s.prb_counts[u] as f64;
            }
            acc.map(|v| v / n)
        })
        .collect())
}

// CSV ---------------------------------------------------------------------

/// Column set of the training diagnostics file for a learner.
pub fn training_csv_header(dqn: bool) -> &'static str {
    if dqn {
        "episode,return,smoothed_return,backlog_embb,backlog_hrllc,drift_embb,drift_hrllc,mean_cost,mean_y,lambda,q_loss,epsilon,updates"
    } else {
        "episode,return,smoothed_return,backlog_embb,backlog_hrllc,drift_embb,drift_hrllc,mean_cost,mean_y,lambda,td_error,actor_loss,critic_loss,entropy,updates"
    }
}

pub fn training_csv(records: &[EpisodeRecord], window: usize, dqn: bool) -> Result<String> {
    let mut out = String::new();
    out.push_str(training_csv_header(dqn));
    out.push('\n');
    if records.is_empty() {
        return Ok(out);
    }
    let returns: Vec<f64> = records.iter().map(|r| r.episode_return).collect();
    let smoothed = moving_average(&returns, window)?;
    for (r, s) in records.iter().zip(&smoothed) {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.episode,
            r.episode_return,
            s,
            r.mean_backlog_embb,
            r.mean_backlog_hrllc,
            r.mean_drift_embb,
            r.mean_drift_hrllc,
            r.mean_cost,
            r.mean_y,
            r.final_lambda
        )
        .unwrap();
        let l = &r.learner;
        if dqn {
            writeln!(out, ",{},{},{}", l.q_loss, l.epsilon, r.updates).unwrap();
        } else {
            writeln!(
                out,
                ",{},{},{},{},{}",
                l.td_error, l.actor_loss, l.critic_loss, l.entropy, r.updates
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Slot trace of one episode; requires slot capture.
pub fn slot_csv(record: &EpisodeRecord, num_embb: usize) -> String {
    let users = record.final_backlogs.len();
    let mut out = String::from("slot");
    let name = |u: usize| {
        if u < num_embb {
            format!("e{u}")
        } else {
            format!("h{}", u - num_embb)
        }
    };
    for col in ["backlog", "prbs", "rate", "arrivals", "departures"] {
        for u in 0..users {
            write!(out, ",{col}_{}", name(u)).unwrap();
        }
    }
    for h in 0..users.saturating_sub(num_embb) {
        write!(out, ",dxi_h{h}").unwrap();
    }
    out.push_str(",drift,drift_embb,drift_hrllc,y,lambda,reward\n");
    for s in &record.slots {
        write!(out, "{}", s.slot).unwrap();
        for u in 0..users {
            write!(out, ",{}", s.backlogs_after[u]).unwrap();
        }
        for u in 0..users {
            write!(out, ",{}", s.prb_counts[u]).unwrap();
        }
        for u in 0..users {
            write!(out, ",{}", s.rates[u]).unwrap();
        }
        for u in 0..users {
            write!(out, ",{}", s.arrivals[u]).unwrap();
        }
        for u in 0..users {
            write!(out, ",{}", s.departures[u]).unwrap();
        }
        for d in &s.dxi {
            write!(out, ",{d}").unwrap();
        }
        writeln!(
            out,
            ",{},{},{},{},{},{}",
            s.drift.total, s.drift.embb, s.drift.hrllc, s.y_mean, s.lambda, s.reward
        )
        .unwrap();
    }
    out
}

/// Per-episode returns, one column per policy.
pub fn comparison_returns_csv(c: &Comparison) -> String {
    let mut out = String::from("episode");
    for p in &c.policies {
        write!(out, ",{p},{p}_smoothed").unwrap();
    }
    out.push('\n');
    for (e, row) in c.returns.iter().enumerate() {
        write!(out, "{e}").unwrap();
        for (v, s) in row.iter().zip(&c.smoothed[e]) {
            write!(out, ",{v},{s}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn reliability_csv(c: &Comparison, d_max_s: f64, chi_h: f64) -> String {
    let mut out = String::from("policy,reliability,d_max_s,target,meets_target,samples\n");
    for ((p, r), n) in c.policies.iter().zip(&c.reliability).zip(&c.delay_samples) {
        writeln!(out, "{p},{r},{d_max_s},{chi_h},{},{n}", *r >= chi_h).unwrap();
    }
    out
}

/// Step CDF points of every policy in long format.
pub fn cdf_csv(c: &Comparison) -> String {
    let mut out = String::from("policy,delay_s,cdf\n");
    for (p, cdf) in c.policies.iter().zip(&c.cdfs) {
        for (d, f) in cdf {
            writeln!(out, "{p},{d},{f}").unwrap();
        }
    }
    out
}

pub fn sensitivity_csv(t: &SensitivityTable) -> String {
    let mut out = String::from("user,dxi,mean_arrivals,mean_departures,mean_prbs,mean_rate_bps\n");
    for r in &t.rows {
        writeln!(
            out,
            "h{},{},{},{},{},{}",
            r.user, r.dxi, r.mean_arrivals, r.mean_departures, r.mean_prbs, r.mean_rate_bps
        )
        .unwrap();
    }
    writeln!(out, "# spearman(dxi, mean_prbs) = {}", t.rank_correlation).unwrap();
    out
}

pub fn step_response_csv(s: &StepResponse) -> String {
    let mut out = String::from("quantity,outside_step,inside_step,change\n");
    let rows = [
        ("dxi", s.dxi_base, s.dxi_peak),
        ("mean_arrivals", s.outside_arrivals, s.inside_arrivals),
        ("mean_prbs", s.outside_prbs, s.inside_prbs),
        ("mean_rate_bps", s.outside_rate_bps, s.inside_rate_bps),
    ];
    for (name, a, b) in rows {
        writeln!(out, "{name},{a},{b},{}", b - a).unwrap();
    }
    writeln!(out, "expected_arrival_drop,,,{}", -s.expected_drop()).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[3.0; 5], 3).unwrap(), vec![3.0; 5]);
        assert_eq!(moving_average(&[1.0, 5.0, 2.0], 1).unwrap(), vec![1.0, 5.0, 2.0]);
        assert_eq!(moving_average(&[0.0, 10.0], 2).unwrap(), vec![0.0, 5.0]);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![1.0, 1.5, 2.5, 3.5]);
        assert!(matches!(moving_average(&[], 3), Err(Error::EmptySamples)));
        assert!(moving_average(&[1.0], 0).is_err());
    }

    #[test]
    fn slope_and_ranks() {
        assert!((linear_slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-12);
        assert_eq!(linear_slope(&[4.0; 10]), 0.0);
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]) - 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), 0.0);
        // textbook example with one swap among five: 1 - 6*2/(5*24) = 0.9
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 4.0, 3.0, 5.0]) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn plateau_detects_flat_tail() {
        let mut curve: Vec<f64> = (0..100).map(|i| i as f64).collect();
        curve.extend(std::iter::repeat_n(100.0, 100));
        let p = plateau(&curve, 50);
        assert!((p.peak_slope - 1.0).abs() < 1e-12);
        assert_eq!(p.final_slope, 0.0);
        assert_eq!(p.ratio, 0.0);
    }

    #[test]
    fn trend_report() {
        let falling: Vec<f64> = (0..90).map(|i| 100.0 - i as f64).collect();
        let r = final_third_rise(&falling, 5).unwrap();
        assert_eq!(r.max_rise, 0.0);
        let mut bump = vec![10.0; 60];
        bump.extend(vec![1.0; 20]);
        bump.extend(vec![5.0; 10]);
        let r = final_third_rise(&bump, 1).unwrap();
        assert_eq!(r.max_rise, 4.0);
        assert!((r.relative_rise - 0.4).abs() < 1e-12);
        assert_eq!(final_third_share(&[-4.0, 2.0, 1.0]), (1.0, 4.0));
    }

    #[test]
    fn head_tail() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(head_tail_means(&xs, 0.1), (4.5, 94.5));
    }

    proptest! {
        #[test]
        fn moving_average_stays_in_bounds(xs in proptest::collection::vec(-1e6f64..1e6, 1..300), w in 1usize..40) {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s = moving_average(&xs, w).unwrap();
            prop_assert_eq!(s.len(), xs.len());
            let tol = 1e-9 * hi.abs().max(lo.abs()).max(1.0);
            prop_assert!(s.iter().all(|&v| v >= lo - tol && v <= hi + tol));
        }

        #[test]
        fn spearman_in_range(pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..50)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = spearman(&xs, &ys);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}
