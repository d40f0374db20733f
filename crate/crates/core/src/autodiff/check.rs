use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Outcome of comparing reverse-mode and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation crosses a kink (relu, clamp, zero norm
    /// or a changed gather index) and were therefore not compared.
    pub skipped: Vec<usize>,
}

const REL_FLOOR: f64 = 1e-8;

fn eval<F>(f: &F, x: &Tensor) -> Result<(f64, Vec<u64>)>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::recording();
    let xv = tape.leaf(x.clone());
    let y = f(&mut tape, xv)?;
    let value = scalar(&tape, y)?;
    Ok((value, tape.decisions().to_vec()))
}

fn scalar(tape: &Tape, y: Var) -> Result<f64> {
    let v = tape.value(y);
    if v.shape() != (1, 1) {
        return Err(Error::shape(
            "grad_check",
            format!("output is {}x{}", v.rows(), v.cols()),
        ));
    }
    if !v.item().is_finite() {
        return Err(Error::NonFinite("grad_check forward".into()));
    }
    Ok(v.item())
}

/// Checks `f` at `x` against central differences with step `eps`.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::Parameter(format!(
            "finite-difference step {eps} outside [1e-7, 1e-3]"
        )));
    }
    let mut tape = Tape::recording();
    let xv = tape.leaf(x.clone());
    let y = f(&mut tape, xv)?;
    scalar(&tape, y)?;
    let analytic = tape.backward(y)?.wrt(xv);
    let base = tape.decisions().to_vec();

    let mut report = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: Vec::new(),
    };
    let mut probe = x.clone();
    for k in 0..x.len() {
        let orig = x.data()[k];
        probe.data_mut()[k] = orig + eps;
        let (fp, sp) = eval(&f, &probe)?;
        probe.data_mut()[k] = orig - eps;
        let (fm, sm) = eval(&f, &probe)?;
        probe.data_mut()[k] = orig;
        if sp != base || sm != base {
            report.skipped.push(k);
            continue;
        }
        let numeric = (fp - fm) / (2.0 * eps);
        let a = analytic.data()[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    Ok(report)
}
