use crate::model::{Params, Real};
use crate::{Error, Result};

/// `v <- mu * v + g; theta <- theta - lr * v`.
pub fn sgd_momentum_step<F: Real>(
    params: &mut Params<F>,
    velocity: &mut Params<F>,
    grads: &Params<F>,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if !params.same_layout(velocity) || !params.same_layout(grads) {
        return Err(Error::InvalidState("optimizer buffers do not match parameters".into()));
    }
    let mu = F::lit(momentum);
    let lr = F::lit(lr);
    for ((p, v), &g) in params
        .as_mut_slice()
        .iter_mut()
        .zip(velocity.as_mut_slice())
        .zip(grads.as_slice())
    {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
    Ok(())
}
