//! Shannon / von Neumann entropies in bits.

use crate::density::Spectrum;
use crate::error::{Error, Result};

/// -p log2 p with 0 log 0 = 0.
#[inline]
pub fn neg_p_log2_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// S = -Σ λ log2 λ over a validated spectrum.
pub fn von_neumann_entropy(spectrum: &Spectrum) -> f64 {
    spectrum.values().iter().map(|&v| neg_p_log2_p(v)).sum::<f64>().max(0.0)
}

/// Entropy of raw eigenvalues; validates them as a [`Spectrum`] first.
pub fn entropy_of(values: &[f64]) -> Result<f64> {
    Ok(von_neumann_entropy(&Spectrum::new(values.to_vec())?))
}

/// h(p) = -p log2 p - (1-p) log2 (1-p)
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p });
    }
    Ok(neg_p_log2_p(p) + neg_p_log2_p(1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_values() {
        assert_eq!(entropy_of(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(entropy_of(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy_of(&[0.25; 4]).unwrap(), 2.0);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        // 0.25·2 + 0.75·log2(4/3)
        let want = 0.5 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((binary_entropy(0.25).unwrap() - want).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(entropy_of(&[-0.2, 1.2]).is_err());
    }

    fn normalized(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    proptest! {
        #[test]
        fn permutation_invariant(raw in prop::collection::vec(0.01f64..1.0, 2..7), rot in 0usize..7) {
            let p = normalized(raw);
            let mut q = p.clone();
            let k = rot % q.len();
            q.rotate_left(k);
            q.reverse();
            let a = entropy_of(&p).unwrap();
            let b = entropy_of(&q).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn bounded_by_log_dim(raw in prop::collection::vec(0.0f64..1.0, 1..9)) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-3);
            let p = normalized(raw);
            let s = entropy_of(&p).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert!(s <= (p.len() as f64).log2() + 1e-10);
        }
    }
}
