//! Central-finite-difference gradient verification.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::DiffError;

/// Compares analytic gradients against central differences for a scalar
/// function of the given point tensors.
///
/// `build` must construct the same computation every time it is called (any
/// internal randomness has to be seeded per call). Returns the maximum over
/// all coordinates of `|analytic - cd| / max(|analytic|, |cd|, 1e-8)`.
pub fn grad_check<F>(build: F, point: &[Tensor], step: f64) -> Result<f64, DiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, DiffError>,
{
    assert!(step > 0.0, "finite-difference step must be positive");

    let eval = |tensors: &[Tensor]| -> Result<f64, DiffError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = tensors.iter().map(|t| tape.leaf(t)).collect();
        let loss = build(&mut tape, &vars)?;
        Ok(tape.value(loss)[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.leaf(t)).collect();
    let loss = build(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| tape.grad(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; tape.value(v).len()]))
        .collect();

    let mut work: Vec<Tensor> = point.to_vec();
    let mut max_rel: f64 = 0.0;
    for ti in 0..point.len() {
        for k in 0..point[ti].numel() {
            let orig = point[ti].data()[k];
            work[ti].data_mut()[k] = orig + step;
            let plus = eval(&work)?;
            work[ti].data_mut()[k] = orig - step;
            let minus = eval(&work)?;
            work[ti].data_mut()[k] = orig;
            let cd = (plus - minus) / (2.0 * step);
            let a = analytic[ti][k];
            let rel = (a - cd).abs() / a.abs().max(cd.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}
