//! Haar-distributed random unitaries for tests, benches and demos.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::decompose::TransferMatrix;

/// QR of a complex Ginibre matrix with the phases of `R`'s diagonal moved
/// into `Q`, which makes `Q` Haar-distributed.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TransferMatrix {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
