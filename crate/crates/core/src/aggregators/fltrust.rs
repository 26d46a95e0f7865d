use super::{dot, norm};
use crate::error::{Error, Result};
use crate::params::ParamSet;

/// FLTrust: each client delta `g_i = θ_i - θ_prev` gets trust
/// `max(0, cos(g_i, g_0))` against the server's own update `g_0`, is rescaled
/// to `‖g_0‖`, and the trust-weighted mean delta is applied to `θ_prev`.
///
/// With no positive trust the server update alone is applied; a zero server
/// update leaves the global model unchanged.
pub fn fltrust(locals: &[ParamSet], global_prev: &ParamSet, server_update: &ParamSet) -> Result<ParamSet> {
    if locals.is_empty() {
        return Err(Error::InvalidInput("no client updates".into()));
    }
    global_prev.check_same_structure(server_update)?;
    let g0 = server_update.to_flat_f64();
    let g0_norm = norm(&g0);
    if g0_norm == 0.0 || !g0_norm.is_finite() {
        return Ok(global_prev.clone());
    }
    let prev = global_prev.to_flat_f64();
    let mut acc = vec![0.0f64; prev.len()];
    let mut total_trust = 0.0;
    for local in locals {
        let g = local.delta_f64(global_prev)?;
        let g_norm = norm(&g);
        if g_norm == 0.0 || !g_norm.is_finite() {
            continue;
        }
        let trust = (dot(&g, &g0) / (g_norm * g0_norm)).max(0.0);
        if trust == 0.0 || !trust.is_finite() {
            continue;
        }
        let scale = trust * g0_norm / g_norm;
        for (a, v) in acc.iter_mut().zip(&g) {
            *a += scale * v;
        }
        total_trust += trust;
    }
    let out: Vec<f64> = if total_trust > 0.0 {
        prev.iter().zip(&acc).map(|(p, a)| p + a / total_trust).collect()
    } else {
        prev.iter().zip(&g0).map(|(p, g)| p + g).collect()
    };
    global_prev.with_flat_f64(&out)
}
