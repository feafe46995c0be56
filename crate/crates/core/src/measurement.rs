//! Projective measurement on the atom and the resulting quantum discord.
//!
//! The measurement basis is `|π0⟩ = C|0⟩ + zS|1⟩`, `|π1⟩ = z*S|0⟩ - C|1⟩`
//! with `C = cos θ`, `S = sin θ`, `z = e^{iφ}`. Conditional cavity states
//! live on `|n-1⟩, |n⟩, |n+1⟩` and have rank at most two, so their spectra
//! are fixed by the single product parameter `y` of the two nonzero
//! eigenvalues.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::closed_form::{atom_populations, cavity_populations, EvolutionAngles, ThermalWeights};
use crate::density::{c64, CMatrix, DensityMatrix, C64};
use crate::entropy::neg_p_log2_p;
use crate::error::{Error, Result};

/// Outcomes below this probability have no defined conditional state.
pub const VANISHING_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementBasis {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn theta(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }

    /// Components of |π0⟩ and |π1⟩ in the {|0⟩, |1⟩} basis.
    pub fn kets(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let z = C64::from_polar(1.0, self.phi);
        [[c64(c, 0.0), z * s], [z.conj() * s, c64(-c, 0.0)]]
    }

    /// |πj⟩⟨πj| as a 2×2 matrix.
    pub fn projector(&self, outcome: u8) -> CMatrix {
        let k = self.kets()[usize::from(outcome)];
        CMatrix::from_fn(2, 2, |r, c| k[r] * k[c].conj())
    }
}

/// (P0, P1) for the given measurement.
pub fn outcome_probabilities(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> (f64, f64) {
    let (s, c) = b.theta.sin_cos();
    let (c2, s2) = (c * c, s * s);
    let (cn2, sn2) = (ang.cn * ang.cn, ang.sn * ang.sn);
    let (cm2, sm2) = (ang.cnp1 * ang.cnp1, ang.snp1 * ang.snp1);
    let p0 = w.lambda0 * (c2 * cn2 + s2 * sn2) + w.lambda1 * (c2 * sm2 + s2 * cm2);
    let p1 = w.lambda0 * (s2 * cn2 + c2 * sn2) + w.lambda1 * (s2 * sm2 + c2 * cm2);
    (p0, p1)
}

/// Numerator λ0λ1(...) of the product parameter y for one outcome; divide by Pj².
fn y_numerator(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis, outcome: u8) -> f64 {
    let (s, c) = b.theta.sin_cos();
    let (c2, s2) = (c * c, s * s);
    let (first, second) = match outcome {
        0 => (c2 * c2, s2 * s2),
        _ => (s2 * s2, c2 * c2),
    };
    let (cn2, sn2) = (ang.cn * ang.cn, ang.sn * ang.sn);
    let (cm2, sm2) = (ang.cnp1 * ang.cnp1, ang.snp1 * ang.snp1);
    w.lambda0 * w.lambda1 * (first * cn2 * sm2 + second * sn2 * cm2 + c2 * s2 * sn2 * sm2)
}

/// Product of the two nonzero eigenvalues of the normalized conditional state.
pub fn product_parameter(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis, outcome: u8) -> Option<f64> {
    let (p0, p1) = outcome_probabilities(w, ang, b);
    let p = if outcome == 0 { p0 } else { p1 };
    (p > VANISHING_PROBABILITY).then(|| y_numerator(w, ang, b, outcome) / (p * p))
}

/// Conditional spectrum {0, ½(1 - √(1-4y)), ½(1 + √(1-4y))}, ascending.
///
/// The small root is formed as y / large root to avoid cancellation.
pub fn conditional_spectrum(y: f64) -> [f64; 3] {
    let r = (1.0 - 4.0 * y).max(0.0).sqrt();
    let hi = 0.5 * (1.0 + r);
    [0.0, y.max(0.0) / hi, hi]
}

/// Entropy in bits of the spectrum {0, ½(1 ± √(1-4y))}.
fn conditional_state_entropy(y: f64) -> f64 {
    conditional_spectrum(y).iter().map(|&v| neg_p_log2_p(v)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalOutcome {
    pub outcome: u8,
    pub probability: f64,
    /// Cavity state on |n-1⟩, |n⟩, |n+1⟩.
    pub state: DensityMatrix,
    pub y: f64,
}

/// Unnormalized conditional cavity matrix Tr_a[Πj ρ Πj] on |n-1⟩, |n⟩, |n+1⟩.
pub fn conditional_cavity_matrix(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis, outcome: u8) -> CMatrix {
    let (s, c) = b.theta.sin_cos();
    let z = C64::from_polar(1.0, b.phi);
    let i = c64(0.0, 1.0);
    let (l0, l1) = (w.lambda0, w.lambda1);
    let (cn, sn, cm, sm) = (ang.cn, ang.sn, ang.cnp1, ang.snp1);
    // outcome 1 swaps C² ↔ S² on the diagonal and flips the coherence signs
    let (cc, ss, sign) = if outcome == 0 { (c * c, s * s, 1.0) } else { (s * s, c * c, -1.0) };
    let a = l0 * c * s * cn * sn * sign;
    let bb = l1 * c * s * cm * sm * sign;

    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = c64(l0 * ss * sn * sn, 0.0);
    m[(1, 1)] = c64(l0 * cc * cn * cn + l1 * ss * cm * cm, 0.0);
    m[(2, 2)] = c64(l1 * cc * sm * sm, 0.0);
    m[(0, 1)] = -i * z.conj() * a;
    m[(1, 0)] = i * z * a;
    m[(1, 2)] = i * z.conj() * bb;
    m[(2, 1)] = -i * z * bb;
    m
}

pub fn conditional_cavity_state(
    w: &ThermalWeights,
    ang: &EvolutionAngles,
    b: &MeasurementBasis,
    outcome: u8,
) -> Result<ConditionalOutcome> {
    if outcome > 1 {
        return Err(Error::OutOfRange { name: "outcome", value: f64::from(outcome) });
    }
    let (p0, p1) = outcome_probabilities(w, ang, b);
    let probability = if outcome == 0 { p0 } else { p1 };
    if probability <= VANISHING_PROBABILITY {
        return Err(Error::VanishingProbability { outcome, probability });
    }
    let m = conditional_cavity_matrix(w, ang, b, outcome).unscale(probability);
    let n = i64::from(ang.n);
    let labels = vec![format!("|{}⟩", n - 1), format!("|{n}⟩"), format!("|{}⟩", n + 1)];
    let state = DensityMatrix::new(m, labels)?;
    let y = y_numerator(w, ang, b, outcome) / (probability * probability);
    Ok(ConditionalOutcome { outcome, probability, state, y })
}

/// Σj Pj S(ρ c|πj) in bits. Vanishing outcomes contribute nothing.
pub fn conditional_entropy(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> f64 {
    let (p0, p1) = outcome_probabilities(w, ang, b);
    [(0u8, p0), (1u8, p1)]
        .into_iter()
        .filter(|&(_, p)| p > VANISHING_PROBABILITY)
        .map(|(j, p)| p * conditional_state_entropy(y_numerator(w, ang, b, j) / (p * p)))
        .sum()
}

/// Entropy bookkeeping of the discord for one measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscordBreakdown {
    pub s_atom: f64,
    pub s_cavity: f64,
    pub s_joint: f64,
    pub s_conditional: f64,
    /// I(c:a) = S(a) + S(c) - S(ac)
    pub mutual_info_i: f64,
    /// J(c:a) = S(c) - S(c|{Πj})
    pub mutual_info_j: f64,
    pub discord: f64,
}

/// Measurement-independent entropies S(a), S(c), S(ac).
#[derive(Clone, Copy, Debug)]
struct MarginalEntropies {
    s_atom: f64,
    s_cavity: f64,
    s_joint: f64,
}

impl MarginalEntropies {
    fn new(w: &ThermalWeights, ang: &EvolutionAngles) -> Self {
        let ent = |vals: &[f64]| vals.iter().map(|&v| neg_p_log2_p(v)).sum::<f64>();
        Self { s_atom: ent(&atom_populations(w, ang)), s_cavity: ent(&cavity_populations(w, ang)), s_joint: ent(&[w.lambda0, w.lambda1]) }
    }

    fn breakdown(&self, s_conditional: f64) -> DiscordBreakdown {
        DiscordBreakdown {
            s_atom: self.s_atom,
            s_cavity: self.s_cavity,
            s_joint: self.s_joint,
            s_conditional,
            mutual_info_i: self.s_atom + self.s_cavity - self.s_joint,
            mutual_info_j: self.s_cavity - s_conditional,
            discord: self.s_atom - self.s_joint + s_conditional,
        }
    }
}

pub fn discord(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> DiscordBreakdown {
    MarginalEntropies::new(w, ang).breakdown(conditional_entropy(w, ang, b))
}

/// The closed-form discord expression written out term by term, with
/// `Σ±(1±r) log2(1±r)` standing in for the conditional entropies.
///
/// This drops the `log2 2` carried by each ½ in the eigenvalues, so it sits
/// exactly one bit below [`discord`]. Kept for comparison only.
pub fn discord_printed_formula(w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> f64 {
    let xlx = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    let [a0, a1] = atom_populations(w, ang);
    let (p0, p1) = outcome_probabilities(w, ang, b);
    let branch = |p: f64, j: u8| {
        if p <= VANISHING_PROBABILITY {
            return 0.0;
        }
        let y = y_numerator(w, ang, b, j) / (p * p);
        let r = (1.0 - 4.0 * y).max(0.0).sqrt();
        0.5 * p * (xlx(1.0 + r) + xlx(1.0 - r))
    };
    -(xlx(a0) + xlx(a1)) + (xlx(w.lambda0) + xlx(w.lambda1)) - (branch(p0, 0) + branch(p1, 1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions {
    /// Points of the uniform θ grid on [0, π/2].
    pub coarse_points: usize,
    /// Golden-section refinement stops once the bracket is this narrow.
    pub theta_tolerance: f64,
    /// How many of the lowest grid minima get refined.
    pub refine_candidates: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { coarse_points: 1801, theta_tolerance: 1e-10, refine_candidates: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscordMinimum {
    pub delta: f64,
    pub theta_star: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of `f` on [lo, hi].
/// Returns the best (x, f(x)) seen and the number of evaluations.
pub(crate) fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 <= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// δ = min over θ ∈ [0, π/2] of the discord, with φ = 0.
pub fn minimize_discord(w: &ThermalWeights, ang: &EvolutionAngles, options: &MinimizeOptions) -> DiscordMinimum {
    let marg = MarginalEntropies::new(w, ang);
    let d = |theta: f64| marg.breakdown(conditional_entropy(w, ang, &MeasurementBasis::theta(theta))).discord;

    let points = options.coarse_points.max(3);
    let step = FRAC_PI_2 / (points - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let theta = i as f64 * step;
            (theta, d(theta))
        })
        .collect();
    let mut evaluations = points;

    let mut best = (f64::NAN, f64::INFINITY);
    let mut consider = |theta: f64, value: f64| {
        if value < best.1 {
            best = (theta, value);
        }
    };
    for &(theta, value) in &grid {
        consider(theta, value);
    }
    for theta in [0.0, FRAC_PI_4, FRAC_PI_2] {
        consider(theta, d(theta));
        evaluations += 1;
    }

    let mut candidates: Vec<usize> = (0..points)
        .filter(|&i| {
            let v = grid[i].1;
            (i == 0 || v <= grid[i - 1].1) && (i + 1 == points || v <= grid[i + 1].1)
        })
        .collect();
    candidates.sort_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1));
    for &i in candidates.iter().take(options.refine_candidates) {
        let lo = grid[i.saturating_sub(1)].0;
        let hi = grid[(i + 1).min(points - 1)].0;
        let (theta, value, evals) = golden_section(d, lo, hi, options.theta_tolerance);
        evaluations += evals;
        consider(theta, value);
    }

    DiscordMinimum { delta: best.1, theta_star: best.0, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::evolution_angles;
    use crate::entropy::binary_entropy;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn half() -> ThermalWeights {
        ThermalWeights::infinite_temperature()
    }

    #[test]
    fn projectors_are_complete() {
        for &(t, p) in &[(0.0, 0.0), (0.3, 1.1), (2.0, -0.7), (PI, 5.0)] {
            let b = MeasurementBasis::new(t, p);
            let sum = b.projector(0) + b.projector(1);
            assert!((sum - CMatrix::identity(2, 2)).norm() < 1e-15);
            let overlap = b.projector(0) * b.projector(1);
            assert!(overlap.norm() < 1e-15);
        }
    }

    #[test]
    fn probability_examples() {
        let w = ThermalWeights::new(0.65).unwrap();
        let b = MeasurementBasis::new(0.4, 0.2);
        let (p0, _) = outcome_probabilities(&w, &evolution_angles(3, 0.0).unwrap(), &b);
        assert!((p0 - (0.65 * 0.4f64.cos().powi(2) + 0.35 * 0.4f64.sin().powi(2))).abs() < 1e-15);
        let ang = evolution_angles(3, 1.7).unwrap();
        let (p0, p1) = outcome_probabilities(&w, &ang, &MeasurementBasis::theta(0.0));
        assert!((p0 - (0.65 * ang.cn.powi(2) + 0.35 * ang.snp1.powi(2))).abs() < 1e-15);
        assert!((p0 + p1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_state_at_zero_time_is_fock() {
        let w = ThermalWeights::new(0.6).unwrap();
        let out = conditional_cavity_state(&w, &evolution_angles(2, 0.0).unwrap(), &MeasurementBasis::new(0.3, 0.9), 0).unwrap();
        assert!(out.y.abs() < 1e-15);
        assert!((out.state.entry(1, 1).re - 1.0).abs() < 1e-14);
        let spectrum = out.state.spectrum().unwrap();
        assert!(spectrum.values()[0].abs() < 1e-14 && spectrum.values()[1].abs() < 1e-14);
        assert!((spectrum.values()[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_parameter_at_theta_zero() {
        let w = ThermalWeights::new(0.7).unwrap();
        let ang = evolution_angles(4, 2.2).unwrap();
        let b = MeasurementBasis::theta(0.0);
        let out = conditional_cavity_state(&w, &ang, &b, 0).unwrap();
        let want = 0.7 * 0.3 * ang.cn.powi(2) * ang.snp1.powi(2) / out.probability.powi(2);
        assert!((out.y - want).abs() < 1e-15);
    }

    #[test]
    fn vanishing_outcome_is_reported() {
        // λ0 = 1, θ = 0, Cn = 0: outcome 0 impossible
        let w = ThermalWeights::new(1.0).unwrap();
        let ang = evolution_angles(1, FRAC_PI_2).unwrap();
        let ang = EvolutionAngles { cn: 0.0, sn: 1.0, ..ang };
        let err = conditional_cavity_state(&w, &ang, &MeasurementBasis::theta(0.0), 0).unwrap_err();
        assert!(matches!(err, Error::VanishingProbability { outcome: 0, .. }));
        let ce = conditional_entropy(&w, &ang, &MeasurementBasis::theta(0.0));
        assert!(ce.is_finite());
    }

    #[test]
    fn conditional_entropy_limits() {
        let w = ThermalWeights::new(0.4).unwrap();
        assert_eq!(conditional_entropy(&w, &evolution_angles(5, 0.0).unwrap(), &MeasurementBasis::new(1.0, 2.0)), 0.0);
        assert!((conditional_state_entropy(0.25) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discord_zero_for_product_state() {
        for n in [0, 1, 3, 8] {
            for &l0 in &[0.5, 0.8, 1.0] {
                let w = ThermalWeights::new(l0).unwrap();
                for k in 0..12 {
                    let b = MeasurementBasis::new(0.3 * f64::from(k), 0.5 * f64::from(k));
                    let d = discord(&w, &evolution_angles(n, 0.0).unwrap(), &b);
                    assert!(d.discord.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pure_state_minimum_is_entanglement_entropy() {
        let w = ThermalWeights::new(1.0).unwrap();
        let ang = evolution_angles(1, FRAC_PI_4).unwrap();
        let m = minimize_discord(&w, &ang, &MinimizeOptions::default());
        assert!((m.delta - 1.0).abs() < 1e-12);
        for n in [1u32, 4] {
            for i in 0..30 {
                let ang = evolution_angles(n, 0.21 * f64::from(i)).unwrap();
                let m = minimize_discord(&w, &ang, &MinimizeOptions::default());
                let want = binary_entropy(ang.cn.powi(2).clamp(0.0, 1.0)).unwrap();
                assert!((m.delta - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn printed_formula_offset() {
        let w = ThermalWeights::new(0.55).unwrap();
        let b = MeasurementBasis::new(0.7, 0.1);
        assert!((discord_printed_formula(&w, &evolution_angles(4, 0.0).unwrap(), &b) + 1.0).abs() < 1e-12);
        let ang = evolution_angles(4, 3.1).unwrap();
        assert!((discord(&w, &ang, &b).discord - discord_printed_formula(&w, &ang, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_at_zero_time() {
        let m = minimize_discord(&half(), &evolution_angles(3, 0.0).unwrap(), &MinimizeOptions::default());
        assert!(m.delta.abs() < 1e-12);
        assert!(m.evaluations > 1801);
    }

    proptest! {
        #[test]
        fn discord_invariants(n in 0u32..=10, tau in 0.0f64..60.0, l0 in 0.0f64..=1.0,
                              theta in 0.0f64..(2.0 * PI), phi in 0.0f64..(2.0 * PI)) {
            let w = ThermalWeights::new(l0).unwrap();
            let ang = evolution_angles(n, tau).unwrap();
            let b = MeasurementBasis::new(theta, phi);
            let d = discord(&w, &ang, &b);
            prop_assert!(d.discord >= -1e-10);
            prop_assert!((d.discord - (d.s_atom - d.s_joint + d.s_conditional)).abs() < 1e-12);
            prop_assert!((d.discord - (d.mutual_info_i - d.mutual_info_j)).abs() < 1e-12);
            prop_assert!((d.s_joint - binary_entropy(l0).unwrap()).abs() < 1e-15);
            let d0 = discord(&w, &ang, &MeasurementBasis::theta(theta)).discord;
            prop_assert!((d.discord - d0).abs() < 1e-12);
            let shifted = discord(&w, &ang, &MeasurementBasis::new(theta + FRAC_PI_2, phi)).discord;
            prop_assert!((shifted - d.discord).abs() < 1e-12);
            let (p0, p1) = outcome_probabilities(&w, &ang, &b);
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-14);
            for j in 0..2u8 {
                if let Some(y) = product_parameter(&w, &ang, &b, j) {
                    prop_assert!(y >= 0.0 && 1.0 - 4.0 * y >= -1e-12);
                }
            }
        }

        #[test]
        fn conditional_state_structure(n in 0u32..=10, tau in 0.0f64..60.0, l0 in 0.05f64..0.95,
                                       theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), j in 0u8..2) {
            let w = ThermalWeights::new(l0).unwrap();
            let ang = evolution_angles(n, tau).unwrap();
            if let Ok(out) = conditional_cavity_state(&w, &ang, &MeasurementBasis::new(theta, phi), j) {
                prop_assume!(out.probability > 1e-6);
                let vals = out.state.spectrum().unwrap();
                let want = conditional_spectrum(out.y);
                prop_assert!(vals.values()[0].abs() < 1e-10);
                prop_assert!((vals.values()[1] - want[1]).abs() < 1e-10);
                prop_assert!((vals.values()[2] - want[2]).abs() < 1e-10);
                prop_assert!(out.y <= 0.25 + 1e-12);
            }
        }

        #[test]
        fn minimum_bounds_probes(n in 1u32..=10, tau in 0.0f64..40.0, l0 in 0.0f64..=1.0) {
            let w = ThermalWeights::new(l0).unwrap();
            let ang = evolution_angles(n, tau).unwrap();
            let m = minimize_discord(&w, &ang, &MinimizeOptions { coarse_points: 181, ..Default::default() });
            for theta in [0.0, FRAC_PI_4, FRAC_PI_2, 0.1, 1.3] {
                prop_assert!(m.delta <= discord(&w, &ang, &MeasurementBasis::theta(theta)).discord + 1e-12);
            }
        }
    }
}
