//! Gradient checking against central differences.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::ParameterSet;
use super::tape::Tape;
use crate::error::{Error, Result};

/// Minimum number of coordinates compared (all of them if fewer exist).
pub const FD_MIN_COMPONENTS: usize = 50;

/// Floor on the denominator of the relative error.
const REL_FLOOR: f64 = 1e-6;

/// Largest componentwise relative error between backprop and central
/// differences of `f` around `params`.
///
/// `f` records a finalized tape for the given parameters; its output is
/// the scalar being differentiated.
pub fn finite_diff_check<F>(f: F, params: &ParameterSet, h: f64, seed: u64) -> Result<f64>
where
    F: Fn(&ParameterSet) -> Result<Tape>,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Usage(format!("finite-difference step {h} outside [1e-7, 1e-3]")));
    }
    let grad = f(params)?.backprop_params(1.0)?;
    let n = params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = if n <= FD_MIN_COMPONENTS {
        (0..n).collect()
    } else {
        sample(&mut rng, n, FD_MIN_COMPONENTS).into_vec()
    };
    let mut worst = 0.0_f64;
    let mut probe = params.clone();
    for i in idx {
        let x0 = params.flat()[i];
        probe.flat_mut()[i] = x0 + h;
        let up = f(&probe)?.output_value()?;
        probe.flat_mut()[i] = x0 - h;
        let down = f(&probe)?.output_value()?;
        probe.flat_mut()[i] = x0;
        let fd = (up - down) / (2.0 * h);
        let diff = (grad[i] - fd).abs();
        if diff == 0.0 {
            continue;
        }
        let rel = diff / grad[i].abs().max(fd.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::params::ParamKind;

    #[test]
    fn linear_loss_is_exact() {
        let p = ParameterSet::from_flat(&[3, 1], vec![0.3, -1.2, 2.0, 0.7]).unwrap();
        let f = |p: &ParameterSet| {
            let mut tape = Tape::new(p);
            let w = tape.param(0, ParamKind::Weight)?;
            let c = tape.constant(vec![1.5, -2.0, 0.25])?;
            let prod = tape.mul(w, c)?;
            let m = tape.mean(prod)?;
            tape.finalize(m)?;
            Ok(tape)
        };
        let err = finite_diff_check(f, &p, 1e-4, 0).unwrap();
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let p = ParameterSet::from_flat(&[1, 1], vec![0.3, 0.1]).unwrap();
        let f = |p: &ParameterSet| {
            let mut tape = Tape::new(p);
            let c = tape.constant(vec![4.0])?;
            tape.finalize(c)?;
            Ok(tape)
        };
        assert_eq!(f(&p).unwrap().backprop_params(1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(finite_diff_check(f, &p, 1e-5, 0).unwrap(), 0.0);
    }

    #[test]
    fn step_size_is_bounded() {
        let p = ParameterSet::zeros(&[1, 1]);
        let f = |p: &ParameterSet| Ok(Tape::new(p));
        assert!(finite_diff_check(f, &p, 1e-2, 0).is_err());
    }
}
