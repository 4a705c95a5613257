//! Forward passes of `(x, t) → u` networks.

use ndarray::Array2;

use super::dual::Dual2Scalar;
use super::params::{MlpSpec, ParameterSet};
use super::tape::{Channels, NodeId, Tape};
use crate::error::Result;
use crate::linalg::affine_rows;

/// Records a batched forward pass carrying the requested derivative
/// channels. Returns the width-1 output jet node.
pub fn mlp_forward_jet(
    tape: &mut Tape,
    spec: &MlpSpec,
    points: &[(f64, f64)],
    channels: Channels,
) -> Result<NodeId> {
    spec.validate()?;
    spec.check_params(tape.params())?;
    let mut z = tape.input(points, channels)?;
    for layer in 0..spec.num_layers() {
        let a = tape.affine(z, layer, 1.0)?;
        z = tape.activate(a, spec.activation(layer))?;
    }
    Ok(z)
}

/// `u` and `(u_x, u_t, u_xx)` at one point, recorded on `tape`.
pub fn mlp_forward_dual(
    tape: &mut Tape,
    spec: &MlpSpec,
    x: f64,
    t: f64,
) -> Result<(NodeId, Dual2Scalar)> {
    let node = mlp_forward_jet(tape, spec, &[(x, t)], Channels::ALL)?;
    Ok((node, tape.jet(node)?.get(0, 0)))
}

/// Plain forward pass over a batch of points.
pub fn mlp_forward_values(
    params: &ParameterSet,
    spec: &MlpSpec,
    points: &[(f64, f64)],
) -> Result<Vec<f64>> {
    spec.validate()?;
    spec.check_params(params)?;
    let mut z = Array2::from_shape_fn((points.len(), 2), |(i, j)| {
        if j == 0 {
            points[i].0
        } else {
            points[i].1
        }
    });
    for layer in 0..spec.num_layers() {
        let f = spec.activation(layer);
        z = affine_rows(z.view(), params.weight(layer)?, Some((params.bias(layer)?, 1.0)));
        z.mapv_inplace(|v| f.apply(v));
    }
    Ok(z.column(0).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::dual::Activation;
    use crate::autodiff::params::ParamKind;

    fn linear_spec() -> MlpSpec {
        MlpSpec::new(vec![2, 1], Activation::Tanh, 0)
    }

    #[test]
    fn constant_network() {
        let spec = MlpSpec::uniform(2, 4, Activation::Tanh, 0);
        let mut p = ParameterSet::zeros(&spec.layer_sizes);
        let ob = p.block(2, ParamKind::Bias).unwrap();
        p.slice_mut(&ob)[0] = 1.75;
        let mut tape = Tape::new(&p);
        let (_, u) = mlp_forward_dual(&mut tape, &spec, 0.3, 0.9).unwrap();
        assert_eq!(u, Dual2Scalar::new(1.75, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_linear_layer() {
        let spec = linear_spec();
        let p = ParameterSet::from_flat(&spec.layer_sizes, vec![2.0, 3.0, 0.0]).unwrap();
        let mut tape = Tape::new(&p);
        let (_, u) = mlp_forward_dual(&mut tape, &spec, 0.5, -1.0).unwrap();
        assert_eq!(u, Dual2Scalar::new(2.0 * 0.5 + 3.0 * -1.0, 2.0, 3.0, 0.0));
    }

    #[test]
    fn value_channel_matches_plain_forward_exactly() {
        let spec = MlpSpec::uniform(3, 8, Activation::Tanh, 11);
        let p = spec.init_params();
        for &(x, t) in &[(0.1, 0.2), (-0.7, 0.9), (0.0, 0.0)] {
            let mut tape = Tape::new(&p);
            let (_, u) = mlp_forward_dual(&mut tape, &spec, x, t).unwrap();
            assert_eq!(u.v, mlp_forward_values(&p, &spec, &[(x, t)]).unwrap()[0]);
        }
    }

    #[test]
    fn mismatched_params_rejected() {
        let spec = MlpSpec::uniform(2, 4, Activation::Tanh, 0);
        let p = ParameterSet::zeros(&[2, 5, 1]);
        let mut tape = Tape::new(&p);
        assert!(mlp_forward_dual(&mut tape, &spec, 0.0, 0.0).is_err());
    }
}
