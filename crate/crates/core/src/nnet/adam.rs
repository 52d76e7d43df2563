use serde::{Deserialize, Serialize};

use super::{NnetError, ParamStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: ParamStore,
    pub v: ParamStore,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParamStore, lr: f64) -> AdamState {
        AdamState { m: params.zeros_like(), v: params.zeros_like(), step: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut ParamStore, grads: &ParamStore, state: &mut AdamState) -> Result<(), NnetError> {
    for (name, p) in params.iter() {
        let g = grads.require(name)?;
        let m = state.m.require(name)?;
        if g.shape != p.shape || m.shape != p.shape {
            return Err(NnetError::ShapeMismatch(format!("{name}: parameter {:?}, gradient {:?}", p.shape, g.shape)));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (name, p) in params.iter_mut() {
        let g = grads.require(name)?;
        let m = state.m.get_mut(name).expect("checked");
        let v = state.v.get_mut(name).expect("checked");
        for k in 0..p.data.len() {
            let gk = g.data[k];
            m.data[k] = b1 * m.data[k] + (1.0 - b1) * gk;
            v.data[k] = b2 * v.data[k] + (1.0 - b2) * gk * gk;
            let mh = m.data[k] / c1;
            let vh = v.data[k] / c2;
            p.data[k] -= state.lr * mh / (vh.sqrt() + state.eps);
        }
    }
    Ok(())
}
