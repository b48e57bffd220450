use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("uncertainty factors must lie in [0, 1] (got f_less={f_less}, f_more={f_more})")]
    FactorOutOfRange { f_less: f64, f_more: f64 },
    #[error("uniform draw {0} outside [0, 1]")]
    DrawOutOfRange(f64),
    #[error("an application needs at least one job")]
    NoJobs,
    #[error("job length must be positive (got {0})")]
    NonPositiveLength(f64),
}

/// Maps an estimate `d` to a "real-world" value in `[d(1-f_less), d(1+f_more)]`:
/// `d * (1 - f_less + (f_less + f_more) * rd)`.
pub fn random_real(d: f64, f_less: f64, f_more: f64, rd: f64) -> Result<f64, WorkloadError> {
    let unit = 0.0..=1.0;
    if !unit.contains(&f_less) || !unit.contains(&f_more) {
        return Err(WorkloadError::FactorOutOfRange { f_less, f_more });
    }
    if !unit.contains(&rd) {
        return Err(WorkloadError::DrawOutOfRange(rd));
    }
    Ok(d * (1.0 - f_less + (f_less + f_more) * rd))
}

/// Uncertainty factors for one kind of estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFactors {
    pub f_less: f64,
    pub f_more: f64,
}

impl RandomFactors {
    pub fn apply(&self, d: f64, stream: &mut RandomStream) -> Result<f64, WorkloadError> {
        random_real(d, self.f_less, self.f_more, stream.next_unit())
    }
}

/// Seeded uniform stream.
///
/// ChaCha8 seeded through `seed_from_u64`; each draw takes the top 53 bits of
/// one `next_u64` output and scales by 2^-53, giving values in `[0, 1)`.
/// Both steps are fixed by published algorithms, so sequences are
/// reproducible across implementations.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_uncertainty_is_identity() {
        for rd in [0.0, 0.3, 1.0] {
            assert_eq!(random_real(100.0, 0.0, 0.0, rd).unwrap(), 100.0);
        }
    }

    #[test]
    fn upper_endpoint() {
        assert!((random_real(100.0, 0.0, 0.1, 1.0).unwrap() - 110.0).abs() < 1e-12);
    }

    #[test]
    fn mid_draw() {
        // 100 * (0.8 + 0.3 * 0.5)
        assert!((random_real(100.0, 0.2, 0.1, 0.5).unwrap() - 95.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_factors() {
        assert!(random_real(1.0, 1.5, 0.0, 0.5).is_err());
        assert!(random_real(1.0, 0.0, -0.1, 0.5).is_err());
        assert!(random_real(1.0, 0.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn stream_is_deterministic_and_in_unit_interval() {
        let mut a = RandomStream::new(11);
        let mut b = RandomStream::new(11);
        for _ in 0..1000 {
            let x = a.next_unit();
            assert_eq!(x, b.next_unit());
            assert!((0.0..1.0).contains(&x));
        }
    }

    proptest! {
        #[test]
        fn monotone_in_draw_and_within_bounds(
            d in 0.0f64..1e6, fl in 0.0f64..=1.0, fm in 0.0f64..=1.0,
            r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let a = random_real(d, fl, fm, lo).unwrap();
            let b = random_real(d, fl, fm, hi).unwrap();
            prop_assert!(a <= b + 1e-9 * d.max(1.0));
            prop_assert!(a >= d * (1.0 - fl) - 1e-9 * d.max(1.0));
            prop_assert!(b <= d * (1.0 + fm) + 1e-9 * d.max(1.0));
        }

        #[test]
        fn affine_in_estimate(d in 0.0f64..1e4, k in 0.0f64..100.0,
                              fl in 0.0f64..=1.0, fm in 0.0f64..=1.0, rd in 0.0f64..=1.0) {
            let a = random_real(d * k, fl, fm, rd).unwrap();
            let b = k * random_real(d, fl, fm, rd).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
