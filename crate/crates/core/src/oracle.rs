//! Brute-force numerical reference for the analytic results.
//!
//! Builds the interaction Hamiltonian on a truncated Fock space, exponentiates
//! it through its eigendecomposition, and computes reduced states,
//! measurement-conditioned states, entropies and discord from generic matrix
//! operations only. Nothing here calls into [`crate::closed_form`] or
//! [`crate::measurement`] except through the [`AnalyticModel`] under test.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rayon::prelude::*;

use crate::closed_form::{EvolutionAngles, ThermalWeights};
use crate::density::{
    c64, hermitian_deviation, hermitian_eigen, hermitian_eigenvalues, CMatrix, DensityMatrix, Spectrum, C64, HERMITIAN_TOL,
};
use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::measurement::MeasurementBasis;

/// Atom ⊗ Fock space truncated at `n_max` photons, atom-major ordering |a,k⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncatedSpace {
    pub n_max: u32,
}

impl TruncatedSpace {
    pub fn new(n_max: u32) -> Self {
        Self { n_max }
    }

    /// Smallest exact truncation for dynamics starting from |n⟩.
    pub fn for_photons(n: u32) -> Self {
        Self { n_max: n + 1 }
    }

    pub fn levels(&self) -> usize {
        self.n_max as usize + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.levels()
    }

    pub fn index(&self, atom: usize, k: usize) -> usize {
        atom * self.levels() + k
    }

    pub fn labels(&self) -> Vec<String> {
        (0..2).flat_map(|a| (0..self.levels()).map(move |k| format!("|{a},{k}⟩"))).collect()
    }

    fn check(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.nrows() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    pub space: TruncatedSpace,
    pub matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(space: TruncatedSpace, matrix: CMatrix) -> Result<Self> {
        space.check(&matrix)?;
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { space, matrix })
    }
}

/// β Σk √(k+1) (|1,k⟩⟨0,k+1| + |0,k+1⟩⟨1,k|)
pub fn build_interaction_hamiltonian(space: TruncatedSpace, beta: f64) -> HermitianOperator {
    let mut h = CMatrix::zeros(space.dim(), space.dim());
    for k in 0..space.levels() - 1 {
        let g = beta * ((k + 1) as f64).sqrt();
        let e = space.index(1, k);
        let a = space.index(0, k + 1);
        h[(e, a)] = c64(g, 0.0);
        h[(a, e)] = c64(g, 0.0);
    }
    HermitianOperator { space, matrix: h }
}

/// a†a + |1⟩⟨1| ⊗ I, conserved by the interaction.
pub fn excitation_number(space: TruncatedSpace) -> HermitianOperator {
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for a in 0..2 {
        for k in 0..space.levels() {
            let i = space.index(a, k);
            m[(i, i)] = c64((k + a) as f64, 0.0);
        }
    }
    HermitianOperator { space, matrix: m }
}

/// σz ⊗ I with σz = |0⟩⟨0| - |1⟩⟨1|.
pub fn inversion_operator(space: TruncatedSpace) -> HermitianOperator {
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for k in 0..space.levels() {
        m[(space.index(0, k), space.index(0, k))] = c64(1.0, 0.0);
        m[(space.index(1, k), space.index(1, k))] = c64(-1.0, 0.0);
    }
    HermitianOperator { space, matrix: m }
}

/// (λ0|0⟩⟨0| + λ1|1⟩⟨1|) ⊗ |n⟩⟨n|
pub fn thermal_fock_state(space: TruncatedSpace, w: &ThermalWeights, n: u32) -> Result<DensityMatrix> {
    if n >= space.n_max {
        return Err(Error::OutOfRange { name: "photon number (needs n_max >= n + 1)", value: f64::from(n) });
    }
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    let k = n as usize;
    m[(space.index(0, k), space.index(0, k))] = c64(w.lambda0, 0.0);
    m[(space.index(1, k), space.index(1, k))] = c64(w.lambda1, 0.0);
    DensityMatrix::new(m, space.labels())
}

/// exp(-iHt) for many t from one eigendecomposition.
#[derive(Clone, Debug)]
pub struct Propagator {
    space: TruncatedSpace,
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        let (energies, vectors) = hermitian_eigen(&h.matrix)?;
        Ok(Self { space: h.space, energies, vectors })
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        let d = self.energies.len();
        let phases = CMatrix::from_fn(d, d, |r, c| if r == c { C64::from_polar(1.0, -self.energies[r] * t) } else { c64(0.0, 0.0) });
        &self.vectors * phases * self.vectors.adjoint()
    }

    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.space.check(rho0.matrix())?;
        let u = self.unitary(t);
        DensityMatrix::new(&u * rho0.matrix() * u.adjoint(), rho0.labels().to_vec())
    }
}

/// U ρ0 U† with U = exp(-iHt).
pub fn evolve_numeric(rho0: &DensityMatrix, h: &HermitianOperator, t: f64) -> Result<DensityMatrix> {
    Propagator::new(h)?.evolve(rho0, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Atom,
    Cavity,
}

fn partial_trace_matrix(rho: &CMatrix, space: TruncatedSpace, keep: Subsystem) -> CMatrix {
    let l = space.levels();
    match keep {
        Subsystem::Atom => CMatrix::from_fn(2, 2, |a, b| (0..l).map(|k| rho[(space.index(a, k), space.index(b, k))]).sum()),
        Subsystem::Cavity => CMatrix::from_fn(l, l, |k, q| (0..2).map(|a| rho[(space.index(a, k), space.index(a, q))]).sum()),
    }
}

pub fn partial_trace(rho: &DensityMatrix, space: TruncatedSpace, keep: Subsystem) -> Result<DensityMatrix> {
    space.check(rho.matrix())?;
    let m = partial_trace_matrix(rho.matrix(), space, keep);
    let labels = match keep {
        Subsystem::Atom => vec!["|0⟩".to_string(), "|1⟩".to_string()],
        Subsystem::Cavity => (0..space.levels()).map(|k| format!("|{k}⟩")).collect(),
    };
    DensityMatrix::new(m, labels)
}

/// Measurement kets |π0⟩ = (cos θ, e^{iφ} sin θ), |π1⟩ = (e^{-iφ} sin θ, -cos θ).
fn measurement_ket(b: &MeasurementBasis, outcome: u8) -> [C64; 2] {
    let (c, s) = (b.theta.cos(), b.theta.sin());
    let z = c64(b.phi.cos(), b.phi.sin());
    if outcome == 0 {
        [c64(c, 0.0), z * s]
    } else {
        [z.conj() * s, c64(-c, 0.0)]
    }
}

/// |π⟩⟨π| ⊗ I on the full space.
fn lifted_projector(space: TruncatedSpace, ket: [C64; 2]) -> CMatrix {
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for a in 0..2 {
        for b in 0..2 {
            let v = ket[a] * ket[b].conj();
            for k in 0..space.levels() {
                m[(space.index(a, k), space.index(b, k))] = v;
            }
        }
    }
    m
}

/// Post-measurement cavity state; `state` is `None` for a vanishing outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioned {
    pub probability: f64,
    pub state: Option<DensityMatrix>,
}

/// ρc|j = Tra[(Πj⊗I) ρ (Πj⊗I)] / Pj with Pj = Tr[(Πj⊗I) ρ].
pub fn condition_on_measurement(rho: &DensityMatrix, space: TruncatedSpace, b: &MeasurementBasis, outcome: u8) -> Result<Conditioned> {
    space.check(rho.matrix())?;
    if outcome > 1 {
        return Err(Error::OutOfRange { name: "outcome", value: f64::from(outcome) });
    }
    let proj = lifted_projector(space, measurement_ket(b, outcome));
    let probability = (&proj * rho.matrix()).trace().re;
    if probability <= 1e-14 {
        return Ok(Conditioned { probability, state: None });
    }
    let sandwiched = &proj * rho.matrix() * &proj;
    let reduced = partial_trace_matrix(&sandwiched, space, Subsystem::Cavity).unscale(probability);
    let labels = (0..space.levels()).map(|k| format!("|{k}⟩")).collect();
    Ok(Conditioned { probability, state: Some(DensityMatrix::new(reduced, labels)?) })
}

fn entropy_of_matrix(m: &CMatrix) -> Result<f64> {
    Ok(von_neumann_entropy(&Spectrum::new(hermitian_eigenvalues(&crate::density::symmetrize(m))?)?))
}

/// Discord of a fixed bipartite state for many measurement bases.
///
/// S(a) and S(ac) are computed once; each basis costs two small eigenvalue
/// problems on the cavity.
pub struct DiscordEvaluator<'a> {
    rho: &'a CMatrix,
    space: TruncatedSpace,
    s_atom: f64,
    s_joint: f64,
}

impl<'a> DiscordEvaluator<'a> {
    pub fn new(rho: &'a DensityMatrix, space: TruncatedSpace) -> Result<Self> {
        space.check(rho.matrix())?;
        let s_atom = entropy_of_matrix(&partial_trace_matrix(rho.matrix(), space, Subsystem::Atom))?;
        let s_joint = rho.entropy()?;
        Ok(Self { rho: rho.matrix(), space, s_atom, s_joint })
    }

    /// ⟨π|ρ|π⟩ taken over the atom: the unnormalized conditional cavity state.
    fn contracted(&self, ket: [C64; 2]) -> CMatrix {
        let l = self.space.levels();
        let sp = self.space;
        CMatrix::from_fn(l, l, |k, q| {
            let mut acc = c64(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    acc += ket[a].conj() * ket[b] * self.rho[(sp.index(a, k), sp.index(b, q))];
                }
            }
            acc
        })
    }

    pub fn conditional_entropy(&self, b: &MeasurementBasis) -> Result<f64> {
        let mut total = 0.0;
        for outcome in 0..2 {
            let m = self.contracted(measurement_ket(b, outcome));
            let p = m.trace().re;
            if p > 1e-14 {
                total += p * entropy_of_matrix(&m.unscale(p))?;
            }
        }
        Ok(total)
    }

    pub fn discord(&self, b: &MeasurementBasis) -> Result<f64> {
        Ok(self.s_atom - self.s_joint + self.conditional_entropy(b)?)
    }
}

/// S(a) - S(ac) + Σj Pj S(ρc|j), every entropy from numerical spectra.
pub fn discord_numeric(rho: &DensityMatrix, space: TruncatedSpace, b: &MeasurementBasis) -> Result<f64> {
    DiscordEvaluator::new(rho, space)?.discord(b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericMinimum {
    pub delta: f64,
    pub theta_star: f64,
    pub phi_star: f64,
    /// Largest spread of the discord across φ at any grid θ.
    pub phi_spread: f64,
}

/// Shrinks [lo, hi] by thirds around the smaller of two interior probes.
fn ternary_search(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let mut best = (lo, f(lo)?);
    let right = f(hi)?;
    if right < best.1 {
        best = (hi, right);
    }
    while hi - lo > tol {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (f1, f2) = (f(m1)?, f(m2)?);
        if f1 < best.1 {
            best = (m1, f1);
        }
        if f2 < best.1 {
            best = (m2, f2);
        }
        if f1 <= f2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best)
}

/// Exhaustive θ × φ grid over [0, π/2] × [0, 2π), then refinement in θ around
/// the lowest local minima of the φ-minimized profile.
pub fn minimize_discord_numeric(
    rho: &DensityMatrix,
    space: TruncatedSpace,
    theta_points: usize,
    phi_points: usize,
) -> Result<NumericMinimum> {
    if theta_points < 3 || phi_points < 3 {
        return Err(Error::InvalidGrid(format!("grids need >= 3 points, got {theta_points} x {phi_points}")));
    }
    let eval = DiscordEvaluator::new(rho, space)?;
    let thetas: Vec<f64> = (0..theta_points).map(|i| FRAC_PI_2 * i as f64 / (theta_points - 1) as f64).collect();
    let phis: Vec<f64> = (0..phi_points).map(|k| 2.0 * PI * k as f64 / phi_points as f64).collect();

    let mut profile = Vec::with_capacity(theta_points);
    let mut phi_spread = 0.0_f64;
    for &theta in &thetas {
        let mut lo = (f64::INFINITY, 0.0);
        let mut hi = f64::NEG_INFINITY;
        for &phi in &phis {
            let d = eval.discord(&MeasurementBasis::new(theta, phi))?;
            if d < lo.0 {
                lo = (d, phi);
            }
            hi = hi.max(d);
        }
        phi_spread = phi_spread.max(hi - lo.0);
        profile.push(lo);
    }

    let mut best = NumericMinimum { delta: f64::INFINITY, theta_star: 0.0, phi_star: 0.0, phi_spread };
    for (i, &(d, phi)) in profile.iter().enumerate() {
        if d < best.delta {
            best.delta = d;
            best.theta_star = thetas[i];
            best.phi_star = phi;
        }
    }

    let last = theta_points - 1;
    let mut minima: Vec<usize> = (0..theta_points)
        .filter(|&i| (i == 0 || profile[i].0 <= profile[i - 1].0) && (i == last || profile[i].0 <= profile[i + 1].0))
        .collect();
    minima.sort_by(|&a, &b| profile[a].0.total_cmp(&profile[b].0));
    for &i in minima.iter().take(4) {
        let phi = profile[i].1;
        let lo = thetas[i.saturating_sub(1)];
        let hi = thetas[(i + 1).min(last)];
        let (theta, d) = ternary_search(|t| eval.discord(&MeasurementBasis::new(t, phi)), lo, hi, 1e-10)?;
        if d < best.delta {
            best.delta = d;
            best.theta_star = theta;
            best.phi_star = phi;
        }
    }
    Ok(best)
}

/// The analytic path under validation. The defaults forward to the crate's
/// closed forms; test fixtures override single methods to inject faults.
pub trait AnalyticModel: Sync {
    fn joint_matrix(&self, w: &ThermalWeights, ang: &EvolutionAngles) -> CMatrix {
        crate::closed_form::joint_matrix(w, ang)
    }
    fn atom_populations(&self, w: &ThermalWeights, ang: &EvolutionAngles) -> [f64; 2] {
        crate::closed_form::atom_populations(w, ang)
    }
    fn joint_spectrum(&self, w: &ThermalWeights) -> [f64; 6] {
        [w.lambda0, w.lambda1, 0.0, 0.0, 0.0, 0.0]
    }
    fn probabilities(&self, w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> (f64, f64) {
        crate::measurement::outcome_probabilities(w, ang, b)
    }
    fn product_parameter(&self, w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis, outcome: u8) -> Option<f64> {
        crate::measurement::product_parameter(w, ang, b, outcome)
    }
    fn conditional_state(&self, w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis, outcome: u8) -> Option<CMatrix> {
        crate::measurement::conditional_cavity_state(w, ang, b, outcome).ok().map(|o| o.state.into_matrix())
    }
    fn conditional_spectrum(&self, y: f64) -> [f64; 3] {
        crate::measurement::conditional_spectrum(y)
    }
    fn discord(&self, w: &ThermalWeights, ang: &EvolutionAngles, b: &MeasurementBasis) -> f64 {
        crate::measurement::discord(w, ang, b).discord
    }
    fn minimum_discord(&self, w: &ThermalWeights, ang: &EvolutionAngles) -> f64 {
        crate::measurement::minimize_discord(w, ang, &Default::default()).delta
    }
    fn inversion(&self, w: &ThermalWeights, ang: &EvolutionAngles) -> f64 {
        crate::closed_form::inversion(w, ang)
    }
}

/// The crate's own analytic formulas.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClosedForm;

impl AnalyticModel for ClosedForm {}

/// Quantities compared between the analytic and numerical paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    JointState,
    Leakage,
    AtomReduced,
    JointSpectrum,
    AtomSpectrum,
    ConditionalSpectrum,
    Probabilities,
    ProductParameter,
    ConditionalState,
    Discord,
    MinimumDiscord,
    Inversion,
}

impl Quantity {
    pub const ALL: [Quantity; 12] = [
        Quantity::JointState,
        Quantity::Leakage,
        Quantity::AtomReduced,
        Quantity::JointSpectrum,
        Quantity::AtomSpectrum,
        Quantity::ConditionalSpectrum,
        Quantity::Probabilities,
        Quantity::ProductParameter,
        Quantity::ConditionalState,
        Quantity::Discord,
        Quantity::MinimumDiscord,
        Quantity::Inversion,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Quantity::JointState => "joint_state",
            Quantity::Leakage => "leakage",
            Quantity::AtomReduced => "atom_reduced",
            Quantity::JointSpectrum => "joint_spectrum",
            Quantity::AtomSpectrum => "atom_spectrum",
            Quantity::ConditionalSpectrum => "conditional_spectrum",
            Quantity::Probabilities => "probabilities",
            Quantity::ProductParameter => "product_parameter",
            Quantity::ConditionalState => "conditional_state",
            Quantity::Discord => "discord",
            Quantity::MinimumDiscord => "minimum_discord",
            Quantity::Inversion => "inversion",
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Quantity::MinimumDiscord => 1e-8,
            _ => 1e-10,
        }
    }
}

/// Max absolute deviation per quantity, merged by max over all samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    deviations: [f64; 12],
    pub samples: usize,
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self { deviations: [0.0; 12], samples: 0 }
    }
}

impl ValidationReport {
    pub fn record(&mut self, q: Quantity, deviation: f64) {
        let slot = &mut self.deviations[q as usize];
        // NaN counts as a failure
        if deviation.is_nan() {
            *slot = f64::INFINITY;
        } else {
            *slot = slot.max(deviation);
        }
    }

    pub fn deviation(&self, q: Quantity) -> f64 {
        self.deviations[q as usize]
    }

    pub fn passed_quantity(&self, q: Quantity) -> bool {
        self.deviation(q) < q.threshold()
    }

    pub fn passed(&self) -> bool {
        Quantity::ALL.iter().all(|q| self.passed_quantity(*q))
    }

    pub fn merge(mut self, other: &ValidationReport) -> Self {
        for q in Quantity::ALL {
            self.record(q, other.deviation(q));
        }
        self.samples += other.samples;
        self
    }

    /// `key=value` lines, one per quantity plus the verdict.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for q in Quantity::ALL {
            out.push_str(&format!("{}.max_deviation={:.6e}\n", q.key(), self.deviation(q)));
            out.push_str(&format!("{}.threshold={:e}\n", q.key(), q.threshold()));
        }
        out.push_str(&format!("samples={}\n", self.samples));
        out.push_str(&format!("status={}\n", if self.passed() { "PASS" } else { "FAIL" }));
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:>14} {:>10}  status", "quantity", "max |dev|", "threshold")?;
        for q in Quantity::ALL {
            let ok = if self.passed_quantity(q) { "ok" } else { "FAIL" };
            writeln!(f, "{:<22} {:>14.3e} {:>10.0e}  {ok}", q.key(), self.deviation(q), q.threshold())?;
        }
        write!(f, "{} samples: {}", self.samples, if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Measurement bases compared per time point.
    pub basis_points: usize,
    pub theta_points: usize,
    pub phi_points: usize,
    /// Extra Fock levels beyond the exact n+1 truncation.
    pub extra_levels: u32,
    /// Conditional states and y are compared only above this outcome probability.
    pub min_probability: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { basis_points: 19, theta_points: 181, phi_points: 37, extra_levels: 0, min_probability: 1e-8 }
    }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Max deviation between two spectra after zero-padding to equal length.
fn spectrum_deviation(numeric: &[f64], analytic: &[f64]) -> f64 {
    let len = numeric.len().max(analytic.len());
    let pad = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(len, 0.0);
        sorted(v)
    };
    max_abs(&pad(numeric), &pad(analytic))
}

/// Cavity index of photon number n + offset, if it exists in `space`.
fn cavity_slot(space: TruncatedSpace, n: u32, offset: isize) -> Option<usize> {
    let k = n as isize + offset;
    (k >= 0 && k < space.levels() as isize).then_some(k as usize)
}

fn validate_point<M: AnalyticModel>(
    model: &M,
    n: u32,
    tau: f64,
    w: &ThermalWeights,
    space: TruncatedSpace,
    prop: &Propagator,
    rho0: &DensityMatrix,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    let mut rep = ValidationReport { samples: 1, ..Default::default() };
    let ang = EvolutionAngles::new(n, tau)?;
    let rho = prop.evolve(rho0, tau)?;
    let m = rho.matrix();

    // joint state on the six labelled kets, and weight outside them
    let analytic = model.joint_matrix(w, &ang);
    let slot = |atom: usize, off: isize| cavity_slot(space, n, off).map(|k| space.index(atom, k));
    let mut covered = vec![false; space.dim()];
    let mut dev = 0.0_f64;
    for (r, (ra, ro)) in (0..2).flat_map(|a| (-1..=1).map(move |o| (a, o))).enumerate() {
        for (c, (ca, co)) in (0..2).flat_map(|a| (-1..=1).map(move |o| (a, o))).enumerate() {
            let numeric = match (slot(ra, ro), slot(ca, co)) {
                (Some(i), Some(j)) => m[(i, j)],
                _ => c64(0.0, 0.0),
            };
            dev = dev.max((numeric - analytic[(r, c)]).norm());
        }
        if let Some(i) = slot(ra, ro) {
            covered[i] = true;
        }
    }
    rep.record(Quantity::JointState, dev);
    let leak: f64 = (0..space.dim()).filter(|&i| !covered[i]).map(|i| m[(i, i)].re.abs()).sum();
    rep.record(Quantity::Leakage, leak);

    let atom = partial_trace(&rho, space, Subsystem::Atom)?;
    let pops = model.atom_populations(w, &ang);
    let mut atom_dev = (atom.entry(0, 1)).norm();
    atom_dev = atom_dev.max((atom.entry(0, 0).re - pops[0]).abs()).max((atom.entry(1, 1).re - pops[1]).abs());
    rep.record(Quantity::AtomReduced, atom_dev);
    rep.record(Quantity::AtomSpectrum, spectrum_deviation(atom.spectrum()?.values(), &pops));

    rep.record(Quantity::JointSpectrum, spectrum_deviation(rho.spectrum()?.values(), &model.joint_spectrum(w)));

    let sz = inversion_operator(space);
    let inv_numeric = (&sz.matrix * m).trace().re;
    rep.record(Quantity::Inversion, (inv_numeric - model.inversion(w, &ang)).abs());

    let eval = DiscordEvaluator::new(&rho, space)?;
    for k in 0..opts.basis_points {
        let theta = PI * k as f64 / (opts.basis_points.max(2) - 1) as f64;
        let phi = 2.0 * PI * k as f64 / opts.basis_points as f64 + 0.1;
        let b = MeasurementBasis::new(theta, phi);

        let (p0, p1) = model.probabilities(w, &ang, &b);
        for (outcome, p_analytic) in [(0u8, p0), (1u8, p1)] {
            let cond = condition_on_measurement(&rho, space, &b, outcome)?;
            rep.record(Quantity::Probabilities, (cond.probability - p_analytic).abs());
            let (Some(state), true) = (cond.state, cond.probability > opts.min_probability) else {
                continue;
            };
            let cm = state.matrix();
            let purity = (cm * cm).trace().re;
            let y_numeric = 0.5 * (1.0 - purity);
            match model.product_parameter(w, &ang, &b, outcome) {
                Some(y) => {
                    rep.record(Quantity::ProductParameter, (y - y_numeric).abs());
                    let spec = model.conditional_spectrum(y);
                    rep.record(Quantity::ConditionalSpectrum, spectrum_deviation(state.spectrum()?.values(), &spec));
                }
                None => rep.record(Quantity::ProductParameter, f64::INFINITY),
            }
            match model.conditional_state(w, &ang, &b, outcome) {
                Some(a) => {
                    let mut d = 0.0_f64;
                    for (r, ro) in (-1..=1).enumerate() {
                        for (c, co) in (-1..=1).enumerate() {
                            let numeric = match (cavity_slot(space, n, ro), cavity_slot(space, n, co)) {
                                (Some(i), Some(j)) => cm[(i, j)],
                                _ => c64(0.0, 0.0),
                            };
                            d = d.max((numeric - a[(r, c)]).norm());
                        }
                    }
                    rep.record(Quantity::ConditionalState, d);
                }
                None => rep.record(Quantity::ConditionalState, f64::INFINITY),
            }
        }
        rep.record(Quantity::Discord, (eval.discord(&b)? - model.discord(w, &ang, &b)).abs());
    }

    let numeric_min = minimize_discord_numeric(&rho, space, opts.theta_points, opts.phi_points)?;
    rep.record(Quantity::MinimumDiscord, (numeric_min.delta - model.minimum_discord(w, &ang)).abs());
    Ok(rep)
}

/// Compares `model` against the numerical path at every τ in `tau_grid`.
pub fn cross_validate_model<M: AnalyticModel>(
    model: &M,
    n: u32,
    tau_grid: &[f64],
    w: &ThermalWeights,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    let space = TruncatedSpace::new(n + 1 + opts.extra_levels);
    let prop = Propagator::new(&build_interaction_hamiltonian(space, 1.0))?;
    let rho0 = thermal_fock_state(space, w, n)?;
    let parts: Vec<ValidationReport> =
        tau_grid.par_iter().map(|&tau| validate_point(model, n, tau, w, space, &prop, &rho0, opts)).collect::<Result<_>>()?;
    Ok(parts.iter().fold(ValidationReport::default(), |acc, r| acc.merge(r)))
}

pub fn cross_validate(n: u32, tau_grid: &[f64], w: &ThermalWeights) -> Result<ValidationReport> {
    cross_validate_model(&ClosedForm, n, tau_grid, w, &ValidationOptions::default())
}
