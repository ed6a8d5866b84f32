//! Seeded random systems for sweeps and property checks.

use rand::Rng;

use crate::equilibria::LvSystem;
use crate::matrix_analysis::RealMatrix;

/// Row negative diagonal quasidominant matrix: random off-diagonal entries
/// in `[-off_scale, off_scale]`, random positive weights, and diagonal
/// entries pushed just past the weighted row sums.
pub fn quasidominant_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, off_scale: f64) -> RealMatrix {
    let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                data[i * n + j] = rng.gen_range(-off_scale..=off_scale);
            }
        }
    }
    for i in 0..n {
        let weighted: f64 = (0..n).filter(|&j| j != i).map(|j| pi[j] * data[i * n + j].abs()).sum();
        let margin = rng.gen_range(0.1..1.0);
        data[i * n + i] = -(weighted / pi[i]) - margin;
    }
    RealMatrix::from_row_slice(n, &data).expect("finite entries")
}

/// Symmetric, diagonally dominant with negative diagonal.
pub fn symmetric_quasidominant_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, off_scale: f64) -> RealMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(-off_scale..=off_scale);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| data[i * n + j].abs()).sum();
        data[i * n + i] = -row - rng.gen_range(0.1..1.0);
    }
    RealMatrix::from_row_slice(n, &data).expect("finite entries")
}

pub fn growth_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn quasidominant_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LvSystem {
    let a = quasidominant_matrix(rng, n, 1.0);
    let b = growth_vector(rng, n);
    LvSystem::new(a, b).expect("well-formed system")
}

pub fn symmetric_quasidominant_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LvSystem {
    let a = symmetric_quasidominant_matrix(rng, n, 1.0);
    let b = growth_vector(rng, n);
    LvSystem::new(a, b).expect("well-formed system")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_analysis::{quasidominance_weights, VlVerdict};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_matrices_are_quasidominant_and_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            for _ in 0..20 {
                let sys = quasidominant_system(&mut rng, n);
                assert!(quasidominance_weights(sys.a()).is_some());
                assert_eq!(sys.certificate().verdict, VlVerdict::CertifiedVL);
                let sym = symmetric_quasidominant_system(&mut rng, n);
                assert!(sym.a().is_symmetric(0.0).is_none());
                assert_eq!(sym.certificate().verdict, VlVerdict::CertifiedVL);
            }
        }
    }
}
