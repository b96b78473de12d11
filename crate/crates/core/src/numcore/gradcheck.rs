use super::{NumError, Tape, Tensor, Var};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Compares the tape gradient of a scalar function against central differences.
///
/// Returns `max |analytic - numeric| / max(1, |analytic|)` over all entries of `theta`.
pub fn grad_check<F>(f: F, theta: &Tensor, eps: f64) -> Result<f64, NumError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, NumError>,
{
    let errs = grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(theta), eps)?;
    Ok(errs[0])
}

/// Same as [`grad_check`] for a function of several tensors; one error per tensor.
pub fn grad_check_many<F>(f: F, thetas: &[Tensor], eps: f64) -> Result<Vec<f64>, NumError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NumError>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(NumError::Contract(format!("grad_check: eps must be > 0, got {eps}")));
    }

    let mut tape = Tape::new();
    let vars: Vec<Var> = thetas
        .iter()
        .map(|t| tape.leaf(t.clone().with_requires_grad(true)))
        .collect();
    let out = f(&mut tape, &vars)?;
    check_scalar(&tape, out)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|v| tape.grad(*v).map(<[f64]>::to_vec).unwrap_or_default())
        .collect();

    let evaluate = |params: &[Tensor]| -> Result<f64, NumError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        check_scalar(&tape, out)?;
        Ok(tape.value(out).data()[0])
    };

    let mut work: Vec<Tensor> = thetas.to_vec();
    let mut errors = Vec::with_capacity(thetas.len());
    for (ti, grad) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for j in 0..thetas[ti].len() {
            let orig = thetas[ti].data()[j];
            work[ti].data_mut()[j] = orig + eps;
            let plus = evaluate(&work)?;
            work[ti].data_mut()[j] = orig - eps;
            let minus = evaluate(&work)?;
            work[ti].data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad[j];
            if !numeric.is_finite() || !a.is_finite() {
                return Err(NumError::NonFinite(format!(
                    "grad_check: tensor {ti} entry {j}: analytic {a}, numeric {numeric}"
                )));
            }
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
        errors.push(worst);
    }
    Ok(errors)
}

fn check_scalar(tape: &Tape, out: Var) -> Result<(), NumError> {
    let t = tape.value(out);
    if t.shape() != (1, 1) {
        return Err(NumError::Contract(format!(
            "grad_check: function must return 1x1, got {}x{}",
            t.rows(),
            t.cols()
        )));
    }
    if !t.data()[0].is_finite() {
        return Err(NumError::NonFinite("grad_check: function value".into()));
    }
    Ok(())
}
