//! Dense complex linear algebra for small Hilbert spaces: named register
//! layouts, pure and mixed states, operators, tensor products and projective
//! measurement with collapse.
//!
//! Everything is double precision and dense; the largest space used by the
//! protocols is eight qubits (dimension 256).

mod layout;
mod operator;
mod state;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub use layout::{Layout, Register};
pub use operator::{CMatrix, Hermitian, Operator};
pub use state::{expectation, mix, sample_index, Branch, MixedState, PureState, QuantumState};

pub type C64 = num_complex::Complex64;

/// Absolute tolerance for every exactness check.
pub const EPS: f64 = 1e-9;

/// The one generator type threaded through all sampling.
pub type SimRng = rand_chacha::ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
pub fn random_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random element of SU(dim).
pub fn random_special_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let u = random_unitary(dim, rng);
    let det = u.determinant();
    let root = det.powf(1.0 / dim as f64);
    u / root
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_su3_is_special_unitary() {
        let mut rng = seeded_rng(42);
        for _ in 0..20 {
            let u = random_special_unitary(3, &mut rng);
            let op = Operator::new(Layout::single("q", 3).unwrap(), u.clone()).unwrap();
            assert!(op.is_unitary());
            assert!((u.determinant() - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn seeded_rng_is_reproducible() {
        use rand::Rng;
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = seeded_rng(9);
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut r = seeded_rng(9);
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
    }
}
