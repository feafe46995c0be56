//! Analytic Jaynes–Cummings evolution of a thermal atom and an n-photon field.
//!
//! Everything here is an explicit function of the photon number `n`, the
//! dimensionless time `tau = βt` and the thermal populations. Atom level `0`
//! is the state that absorbs a photon (`|0,n⟩ ↔ |1,n-1⟩`), and the inversion
//! operator is `σz = |0⟩⟨0| - |1⟩⟨1|`.

use crate::density::{c64, CMatrix, DensityMatrix, C64};
use crate::error::{Error, Result};

/// Thermal populations of the two atomic levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalWeights {
    pub lambda0: f64,
    pub lambda1: f64,
    /// ω/KT the weights were built from, if any.
    pub temp_ratio: Option<f64>,
}

impl ThermalWeights {
    pub fn new(lambda0: f64) -> Result<Self> {
        if !lambda0.is_finite() {
            return Err(Error::NonFinite("lambda0"));
        }
        if !(0.0..=1.0).contains(&lambda0) {
            return Err(Error::OutOfRange { name: "lambda0", value: lambda0 });
        }
        Ok(Self { lambda0, lambda1: 1.0 - lambda0, temp_ratio: None })
    }

    /// Boltzmann weights for x = ω/KT ≥ 0.
    pub fn from_temperature(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite("temperature ratio"));
        }
        if x < 0.0 {
            return Err(Error::OutOfRange { name: "temperature ratio", value: x });
        }
        let boltz = (-x).exp();
        let lambda0 = 1.0 / (1.0 + boltz);
        Ok(Self { lambda0, lambda1: boltz / (1.0 + boltz), temp_ratio: Some(x) })
    }

    /// λ0 = λ1 = ½
    pub fn infinite_temperature() -> Self {
        Self { lambda0: 0.5, lambda1: 0.5, temp_ratio: Some(0.0) }
    }
}

pub fn weights_from_temperature(x: f64) -> Result<ThermalWeights> {
    ThermalWeights::from_temperature(x)
}

/// Rabi angles ψn = τ√n, ψn+1 = τ√(n+1) and their sines and cosines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionAngles {
    pub n: u32,
    pub tau: f64,
    pub psi_n: f64,
    pub psi_np1: f64,
    pub cn: f64,
    pub sn: f64,
    pub cnp1: f64,
    pub snp1: f64,
}

impl EvolutionAngles {
    pub fn new(n: u32, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::NonFinite("tau"));
        }
        let psi_n = tau * f64::from(n).sqrt();
        let psi_np1 = tau * f64::from(n + 1).sqrt();
        let (sn, cn) = psi_n.sin_cos();
        let (snp1, cnp1) = psi_np1.sin_cos();
        Ok(Self { n, tau, psi_n, psi_np1, cn, sn, cnp1, snp1 })
    }
}

pub fn evolution_angles(n: u32, tau: f64) -> Result<EvolutionAngles> {
    EvolutionAngles::new(n, tau)
}

/// Product basis vector |atom, photons⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ket {
    pub atom: u8,
    pub photons: u32,
}

impl std::fmt::Display for Ket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{},{}⟩", self.atom, self.photons)
    }
}

/// Linear combination of labelled kets.
#[derive(Clone, Debug, PartialEq)]
pub struct Superposition {
    pub terms: Vec<(C64, Ket)>,
}

impl Superposition {
    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(a, _)| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, ket: Ket) -> C64 {
        self.terms.iter().filter(|(_, k)| *k == ket).map(|(a, _)| *a).sum()
    }
}

/// U(τ)|atom, n⟩ in the interaction picture.
pub fn evolve_basis_ket(atom: u8, n: u32, ang: &EvolutionAngles) -> Result<Superposition> {
    if n != ang.n {
        return Err(Error::PhotonNumberMismatch { given: n, angles: ang.n });
    }
    let terms = match atom {
        0 if n == 0 => vec![(c64(1.0, 0.0), Ket { atom: 0, photons: 0 })],
        0 => vec![(c64(ang.cn, 0.0), Ket { atom: 0, photons: n }), (c64(0.0, -ang.sn), Ket { atom: 1, photons: n - 1 })],
        1 => vec![(c64(ang.cnp1, 0.0), Ket { atom: 1, photons: n }), (c64(0.0, -ang.snp1), Ket { atom: 0, photons: n + 1 })],
        _ => return Err(Error::OutOfRange { name: "atom level", value: f64::from(atom) }),
    };
    Ok(Superposition { terms })
}

/// Row/column of |atom, n + offset⟩ in the 6×6 joint basis
/// |0,n-1⟩, |0,n⟩, |0,n+1⟩, |1,n-1⟩, |1,n⟩, |1,n+1⟩.
pub const fn joint_index(atom: usize, offset: isize) -> usize {
    atom * 3 + (offset + 1) as usize
}

/// The evolved 6×6 atom–cavity state.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDensity {
    pub n: u32,
    pub density: DensityMatrix,
}

impl JointDensity {
    pub fn labels(n: u32) -> Vec<String> {
        let n = i64::from(n);
        let mut out = Vec::with_capacity(6);
        for atom in 0..2 {
            for k in [n - 1, n, n + 1] {
                out.push(format!("|{atom},{k}⟩"));
            }
        }
        out
    }

    pub fn matrix(&self) -> &CMatrix {
        self.density.matrix()
    }
}

/// Raw 6×6 joint matrix: the ten nonzero entries of the evolved thermal⊗Fock state.
pub fn joint_matrix(w: &ThermalWeights, ang: &EvolutionAngles) -> CMatrix {
    let (l0, l1) = (w.lambda0, w.lambda1);
    let (cn, sn, cm, sm) = (ang.cn, ang.sn, ang.cnp1, ang.snp1);
    let g_n = joint_index(0, 0);
    let g_np1 = joint_index(0, 1);
    let e_nm1 = joint_index(1, -1);
    let e_n = joint_index(1, 0);

    let mut m = CMatrix::zeros(6, 6);
    m[(g_n, g_n)] = c64(l0 * cn * cn, 0.0);
    m[(g_np1, g_np1)] = c64(l1 * sm * sm, 0.0);
    m[(e_nm1, e_nm1)] = c64(l0 * sn * sn, 0.0);
    m[(e_n, e_n)] = c64(l1 * cm * cm, 0.0);

    let a = l0 * cn * sn;
    m[(g_n, e_nm1)] = c64(0.0, a);
    m[(e_nm1, g_n)] = c64(0.0, -a);

    let b = l1 * cm * sm;
    m[(g_np1, e_n)] = c64(0.0, -b);
    m[(e_n, g_np1)] = c64(0.0, b);
    m
}

pub fn joint_state(w: &ThermalWeights, ang: &EvolutionAngles) -> Result<JointDensity> {
    let density = DensityMatrix::new(joint_matrix(w, ang), JointDensity::labels(ang.n))?;
    Ok(JointDensity { n: ang.n, density })
}

/// Diagonal of the reduced atomic state: (λ0Cn² + λ1S²n+1, λ0Sn² + λ1C²n+1).
pub fn atom_populations(w: &ThermalWeights, ang: &EvolutionAngles) -> [f64; 2] {
    [w.lambda0 * ang.cn * ang.cn + w.lambda1 * ang.snp1 * ang.snp1, w.lambda0 * ang.sn * ang.sn + w.lambda1 * ang.cnp1 * ang.cnp1]
}

/// Diagonal of the reduced cavity state over |n-1⟩, |n⟩, |n+1⟩.
pub fn cavity_populations(w: &ThermalWeights, ang: &EvolutionAngles) -> [f64; 3] {
    [w.lambda0 * ang.sn * ang.sn, w.lambda0 * ang.cn * ang.cn + w.lambda1 * ang.cnp1 * ang.cnp1, w.lambda1 * ang.snp1 * ang.snp1]
}

pub fn atom_reduced(w: &ThermalWeights, ang: &EvolutionAngles) -> Result<DensityMatrix> {
    let [p0, p1] = atom_populations(w, ang);
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = c64(p0, 0.0);
    m[(1, 1)] = c64(p1, 0.0);
    DensityMatrix::new(m, vec!["|0⟩".into(), "|1⟩".into()])
}

/// ⟨σz⟩ = λ0(Cn² - Sn²) - λ1(C²n+1 - S²n+1)
pub fn inversion(w: &ThermalWeights, ang: &EvolutionAngles) -> f64 {
    w.lambda0 * (ang.cn * ang.cn - ang.sn * ang.sn) - w.lambda1 * (ang.cnp1 * ang.cnp1 - ang.snp1 * ang.snp1)
}

/// Tr[ρ (σz ⊗ I)] read off the joint matrix.
pub fn inversion_via_trace(joint: &JointDensity) -> f64 {
    let m = joint.matrix();
    (0..3).map(|k| m[(joint_index(0, k as isize - 1), joint_index(0, k as isize - 1))].re).sum::<f64>()
        - (0..3).map(|k| m[(joint_index(1, k as isize - 1), joint_index(1, k as isize - 1))].re).sum::<f64>()
}

/// sin(τ(√(n+1)+√n))·sin(τ(√(n+1)-√n)): the inversion at λ0 = λ1 = ½.
pub fn inversion_beat_form(n: u32, tau: f64) -> f64 {
    let a = f64::from(n + 1).sqrt();
    let b = f64::from(n).sqrt();
    (tau * (a + b)).sin() * (tau * (a - b)).sin()
}
