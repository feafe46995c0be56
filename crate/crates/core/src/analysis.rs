//! Oscillation and beat structure of sampled δ(τ) and ⟨σz⟩(τ) curves.
//!
//! The fast period is the median spacing of consecutive same-kind extrema;
//! the median ignores the half-cycle phase slip the carrier undergoes at
//! every envelope node. The envelope is read from the sequence of |maxima|:
//! its deep minima (prominence at least half the envelope range) mark beat
//! nodes, each located by V-interpolation between neighbouring maxima.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::closed_form::{EvolutionAngles, ThermalWeights};
use crate::error::{Error, Result};
use crate::measurement::{discord, MeasurementBasis};

/// Extrema whose height differs from their neighbour by less than this are ripple.
pub const PROMINENCE: f64 = 1e-6;
/// Beat nodes must sit this fraction of the envelope range below both sides.
pub const ENVELOPE_PROMINENCE: f64 = 0.5;
/// Minimum samples per predicted fast period for generated signals.
pub const SAMPLES_PER_PERIOD: f64 = 64.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    tau: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSignal {
    /// Requires equal lengths, finite values and a strictly increasing grid
    /// whose steps agree to 1e-12 of the total span.
    pub fn new(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: tau.len(), got: values.len() });
        }
        if tau.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal sample"));
        }
        if tau.len() >= 2 {
            let span = tau[tau.len() - 1] - tau[0];
            let step = span / (tau.len() - 1) as f64;
            for w in tau.windows(2) {
                let d = w[1] - w[0];
                if d <= 0.0 {
                    return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
                }
                if (d - step).abs() > 1e-12 * span.max(1.0) {
                    return Err(Error::InvalidGrid(format!("non-uniform step {d} (expected {step})")));
                }
            }
        }
        Ok(Self { tau, values })
    }

    /// `f` sampled at `steps` points evenly spaced on [0, tau_max].
    pub fn sample(tau_max: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let tau = uniform_grid(tau_max, steps);
        let values = tau.iter().map(|&t| f(t)).collect();
        Self::new(tau, values)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.tau.len() < 2 {
            return 0.0;
        }
        (self.tau[self.tau.len() - 1] - self.tau[0]) / (self.tau.len() - 1) as f64
    }
}

/// `steps` points evenly spaced on [0, tau_max], endpoints included.
pub fn uniform_grid(tau_max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![0.0];
    }
    (0..steps).map(|i| tau_max * i as f64 / (steps - 1) as f64).collect()
}

/// Grid size giving at least [`SAMPLES_PER_PERIOD`] samples per predicted
/// fast period 2π/(√(n+1)+√n), or per half of it when `halved`.
pub fn required_steps(n: u32, tau_max: f64, halved: bool) -> usize {
    let mut period = 2.0 * PI / rabi_sum(n);
    if halved {
        period /= 2.0;
    }
    (tau_max / (period / SAMPLES_PER_PERIOD)).ceil() as usize + 1
}

fn rabi_sum(n: u32) -> f64 {
    f64::from(n + 1).sqrt() + f64::from(n).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub tau: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Interior extrema by sign change of the discrete derivative, refined with a
/// parabola through the three surrounding samples. Ripple pairs with height
/// difference below [`PROMINENCE`] are removed.
pub fn detect_extrema(s: &SampledSignal) -> Result<Vec<Extremum>> {
    let v = s.values();
    if v.len() < 3 {
        return Err(Error::InsufficientSpan(format!("need at least 3 samples, got {}", v.len())));
    }
    let h = s.step();
    let mut raw = Vec::new();
    // sign of the last nonzero difference, and where that run started
    let mut prev_sign = 0i8;
    let mut run_start = 0usize;
    for i in 0..v.len() - 1 {
        let d = v[i + 1] - v[i];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if prev_sign != 0 && sign != prev_sign {
            // extremum spans the flat run run_start..=i; take its middle
            let mid = (run_start + i) / 2;
            let kind = if prev_sign > 0 { ExtremumKind::Max } else { ExtremumKind::Min };
            raw.push(refine(s, mid, h, kind));
        }
        if sign != prev_sign || v[i] != v[i.saturating_sub(1)] {
            run_start = i + 1;
        }
        prev_sign = sign;
    }

    let mut kept: Vec<Extremum> = Vec::with_capacity(raw.len());
    for e in raw {
        match kept.last() {
            Some(top) if top.kind != e.kind && (top.value - e.value).abs() < PROMINENCE => {
                kept.pop();
            }
            Some(top) if top.kind == e.kind => {
                // a ripple pair was dropped between two same-kind extrema
                let better = match e.kind {
                    ExtremumKind::Max => e.value > top.value,
                    ExtremumKind::Min => e.value < top.value,
                };
                if better {
                    kept.pop();
                    kept.push(e);
                }
            }
            _ => kept.push(e),
        }
    }
    Ok(kept)
}

fn refine(s: &SampledSignal, i: usize, h: f64, kind: ExtremumKind) -> Extremum {
    let v = s.values();
    let (l, m, r) = (v[i.saturating_sub(1)], v[i], v[(i + 1).min(v.len() - 1)]);
    let curv = l - 2.0 * m + r;
    let offset = if curv != 0.0 { (0.5 * (l - r) / curv).clamp(-0.5, 0.5) } else { 0.0 };
    Extremum { tau: s.tau()[i] + offset * h, value: m - 0.25 * (l - r) * offset, kind }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeatReport {
    pub mean_period: f64,
    pub beat_period: f64,
    pub oscillations_per_beat: f64,
    pub extrema_count: usize,
    pub envelope_minima: Vec<f64>,
    /// Per beat window: mean |difference| between consecutive maxima. Large
    /// values flag alternately high and low maxima.
    pub alternation: Vec<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Node position from a V fitted to three envelope samples.
fn v_interpolate(t: [f64; 3], y: [f64; 3]) -> f64 {
    let [tl, tm, tr] = t;
    let [yl, ym, yr] = y;
    let est = if yl > yr {
        let slope = (yl - ym) / (tm - tl);
        if slope <= 0.0 {
            return tm;
        }
        // left arm through (tl, yl), (tm, ym); right arm through (tr, yr) with opposite slope
        ((yr - slope * tr) - (ym + slope * tm)) / (-2.0 * slope)
    } else {
        let slope = (yr - ym) / (tr - tm);
        if slope <= 0.0 {
            return tm;
        }
        ((yl + slope * tl) - (ym - slope * tm)) / (2.0 * slope)
    };
    est.clamp(tl, tr)
}

/// Indices of deep local minima of `vals`.
fn envelope_nodes(times: &[f64], vals: &[f64]) -> Vec<usize> {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let need = ENVELOPE_PROMINENCE * (hi - lo);
    let rise = |i: usize, step: isize| {
        let mut j = i as isize + step;
        let mut top = vals[i];
        while j >= 0 && (j as usize) < vals.len() && vals[j as usize] >= vals[i] {
            top = top.max(vals[j as usize]);
            j += step;
        }
        top - vals[i]
    };
    let nodes: Vec<usize> = (1..vals.len().saturating_sub(1))
        .filter(|&i| vals[i] < vals[i - 1] && vals[i] <= vals[i + 1])
        .filter(|&i| need > 0.0 && rise(i, -1).min(rise(i, 1)) >= need)
        .collect();
    if nodes.len() < 3 {
        return nodes;
    }
    // nodes much closer than the typical spacing belong to one messy beat node
    let gap = median(nodes.windows(2).map(|w| times[w[1]] - times[w[0]]).collect());
    let mut merged: Vec<usize> = vec![nodes[0]];
    for &i in &nodes[1..] {
        let last = merged.len() - 1;
        if times[i] - times[merged[last]] < 0.5 * gap {
            if vals[i] < vals[merged[last]] {
                merged[last] = i;
            }
        } else {
            merged.push(i);
        }
    }
    merged
}

pub fn beat_report(s: &SampledSignal) -> Result<BeatReport> {
    let extrema = detect_extrema(s)?;
    let spacings: Vec<f64> = [ExtremumKind::Max, ExtremumKind::Min]
        .iter()
        .flat_map(|&k| {
            let t: Vec<f64> = extrema.iter().filter(|e| e.kind == k).map(|e| e.tau).collect();
            t.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
        })
        .collect();
    if spacings.is_empty() {
        return Err(Error::InsufficientSpan("no oscillation found".into()));
    }
    let mean_period = median(spacings);

    let maxima: Vec<&Extremum> = extrema.iter().filter(|e| e.kind == ExtremumKind::Max).collect();
    let times: Vec<f64> = maxima.iter().map(|e| e.tau).collect();
    let heights: Vec<f64> = maxima.iter().map(|e| e.value.abs()).collect();
    let nodes = envelope_nodes(&times, &heights);
    if nodes.len() < 2 {
        return Err(Error::InsufficientSpan(format!(
            "found {} envelope node(s); the signal must span at least two beat periods",
            nodes.len()
        )));
    }
    let envelope_minima: Vec<f64> = nodes
        .iter()
        .map(|&i| v_interpolate([times[i - 1], times[i], times[i + 1]], [heights[i - 1], heights[i], heights[i + 1]]))
        .collect();
    let beat_period = (envelope_minima[envelope_minima.len() - 1] - envelope_minima[0]) / (envelope_minima.len() - 1) as f64;

    let alternation = nodes
        .windows(2)
        .map(|w| {
            let seg = &heights[w[0]..=w[1]];
            seg.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>() / (seg.len() - 1) as f64
        })
        .collect();

    Ok(BeatReport {
        mean_period,
        beat_period,
        oscillations_per_beat: beat_period / mean_period,
        extrema_count: extrema.len(),
        envelope_minima,
        alternation,
    })
}

/// Beat quantities of ⟨σz⟩ at λ0 = λ1 = ½, in units of τ = βt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeatPrediction {
    pub n: u32,
    /// 2π/(√(n+1)+√n)
    pub mean_period: f64,
    /// π(√(n+1)+√n)
    pub beat_period: f64,
    /// ½[2n+1+2√(n(n+1))]
    pub oscillations_per_beat: f64,
    /// 2n
    pub large_n_approx: f64,
    /// π/√n
    pub large_n_mean_period: f64,
    /// 2π√n
    pub large_n_beat_period: f64,
}

pub fn predicted_beats(n: u32) -> Result<BeatPrediction> {
    if n == 0 {
        return Err(Error::OutOfRange { name: "photon number (beats need n >= 1)", value: 0.0 });
    }
    let nf = f64::from(n);
    let sum = rabi_sum(n);
    Ok(BeatPrediction {
        n,
        mean_period: 2.0 * PI / sum,
        beat_period: PI * sum,
        oscillations_per_beat: 0.5 * (2.0 * nf + 1.0 + 2.0 * (nf * (nf + 1.0)).sqrt()),
        large_n_approx: 2.0 * nf,
        large_n_mean_period: PI / nf.sqrt(),
        large_n_beat_period: 2.0 * PI * nf.sqrt(),
    })
}

/// (δ mean period / ⟨σz⟩ mean period, δ beat period / ⟨σz⟩ beat period).
pub fn period_ratio(delta_signal: &SampledSignal, inversion_signal: &SampledSignal) -> Result<(f64, f64)> {
    if delta_signal.tau() != inversion_signal.tau() {
        return Err(Error::InvalidGrid("signals must share one τ grid".into()));
    }
    let d = beat_report(delta_signal)?;
    let i = beat_report(inversion_signal)?;
    Ok((d.mean_period / i.mean_period, d.beat_period / i.beat_period))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaExtremum {
    pub theta: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    /// Distance to the nearest multiple of π/4.
    pub offset_from_quarter_pi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaScan {
    /// max |D(θ + π/2) - D(θ)| < 1e-12 over the grid
    pub period_check: bool,
    pub max_period_deviation: f64,
    /// max |D(π/2 - θ) - D(θ)|, reported only
    pub max_reflection_deviation: f64,
    pub extrema: Vec<ThetaExtremum>,
}

impl ThetaScan {
    pub fn max_offset_from_quarter_pi(&self) -> f64 {
        self.extrema.iter().map(|e| e.offset_from_quarter_pi).fold(0.0, f64::max)
    }
}

/// Discord on a periodic θ grid over [0, π): periodicity, reflection symmetry
/// and extremum locations.
pub fn theta_structure_scan(w: &ThermalWeights, n: u32, tau: f64, grid_size: usize) -> Result<ThetaScan> {
    if grid_size < 360 {
        return Err(Error::InvalidGrid(format!("theta grid needs >= 360 points, got {grid_size}")));
    }
    let ang = EvolutionAngles::new(n, tau)?;
    let d = |theta: f64| discord(w, &ang, &MeasurementBasis::theta(theta)).discord;
    let h = PI / grid_size as f64;
    let thetas: Vec<f64> = (0..grid_size).map(|i| i as f64 * h).collect();
    let values: Vec<f64> = thetas.iter().map(|&t| d(t)).collect();

    let mut max_period_deviation = 0.0_f64;
    let mut max_reflection_deviation = 0.0_f64;
    for (&t, &v) in thetas.iter().zip(&values) {
        max_period_deviation = max_period_deviation.max((d(t + FRAC_PI_2) - v).abs());
        max_reflection_deviation = max_reflection_deviation.max((d(FRAC_PI_2 - t) - v).abs());
    }

    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut extrema = Vec::new();
    if hi - lo >= PROMINENCE {
        let m = grid_size;
        for i in 0..m {
            let (l, c, r) = (values[(i + m - 1) % m], values[i], values[(i + 1) % m]);
            let kind = if c > l && c >= r {
                ExtremumKind::Max
            } else if c < l && c <= r {
                ExtremumKind::Min
            } else {
                continue;
            };
            let curv = l - 2.0 * c + r;
            let offset = if curv != 0.0 { (0.5 * (l - r) / curv).clamp(-0.5, 0.5) } else { 0.0 };
            let theta = (thetas[i] + offset * h).rem_euclid(PI);
            let quarter = PI / 4.0;
            let k = (theta / quarter).round();
            extrema.push(ThetaExtremum {
                theta,
                value: c - 0.25 * (l - r) * offset,
                kind,
                offset_from_quarter_pi: (theta - k * quarter).abs(),
            });
        }
    }

    Ok(ThetaScan { period_check: max_period_deviation < 1e-12, max_period_deviation, max_reflection_deviation, extrema })
}
