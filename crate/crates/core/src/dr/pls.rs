use nalgebra::DVector;

use crate::dr::deflate::{Deflation, DirectionSolver, Solved};
use crate::error::Result;

/// NIPALS power iteration for the leading singular pair of the deflated
/// cross-covariance, stopping once the X weight update is below `tol`.
pub(crate) struct Nipals {
    pub tol: f64,
    pub max_iter: usize,
}

const EXHAUSTED: f64 = 1e-10;

impl DirectionSolver for Nipals {
    fn solve(&mut self, state: &Deflation) -> Result<Option<Solved>> {
        let m = &state.cxy;
        let scale = (state.scale_x * state.scale_y).sqrt().max(f64::MIN_POSITIVE);
        let (mut start, mut best) = (0usize, -1.0f64);
        for (j, col) in m.column_iter().enumerate() {
            let n = col.norm();
            if n > best {
                best = n;
                start = j;
            }
        }
        if best <= EXHAUSTED * scale {
            return Ok(None);
        }

        let mut v = DVector::zeros(m.ncols());
        v[start] = 1.0;
        let mut w = m * &v;
        w /= w.norm();
        let (mut iterations, mut converged) = (0, false);
        while iterations < self.max_iter {
            iterations += 1;
            v = m.tr_mul(&w);
            let vn = v.norm();
            if vn == 0.0 {
                return Ok(None);
            }
            v /= vn;
            let mut next = m * &v;
            let nn = next.norm();
            if nn == 0.0 {
                return Ok(None);
            }
            next /= nn;
            let delta = (&next - &w).norm();
            w = next;
            if delta < self.tol {
                converged = true;
                break;
            }
        }
        let mut v = m.tr_mul(&w);
        let score = v.norm();
        if score <= EXHAUSTED * scale {
            return Ok(None);
        }
        v /= score;
        if !converged {
            log::debug!("NIPALS stopped at max_iter = {} without converging", self.max_iter);
        }
        Ok(Some(Solved { w, v, score, iterations, converged }))
    }
}
