//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct AdamState {
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Moment buffers shaped after `params`.
    pub fn new(params: &[&Matrix], lr: f64) -> Self {
        AdamState {
            first: params
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect(),
            second: params
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Matrix], &[Matrix]) {
        (&self.first, &self.second)
    }

    /// Restores a checkpointed optimizer.
    pub fn restore(first: Vec<Matrix>, second: Vec<Matrix>, step: u64, lr: f64) -> Self {
        AdamState {
            first,
            second,
            step,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Re-orders the moment rows of one parameter, for callers that
    /// permute that parameter's rows (row r moves to `perm[r]`).
    pub fn permute_param_rows(&mut self, param: usize, perm: &[usize]) {
        for moments in [&mut self.first, &mut self.second] {
            let m = &mut moments[param];
            let mut out = Matrix::zeros(m.rows(), m.cols());
            for (r, &dst) in perm.iter().enumerate() {
                out.row_mut(dst).copy_from_slice(m.row(r));
            }
            *m = out;
        }
    }

    /// One update of every parameter in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::shape(format!(
                "adam: {} params, {} grads, state over {}",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for ((p, g), (m, v)) in params
            .iter()
            .zip(grads)
            .zip(self.first.iter().zip(&self.second))
        {
            if p.shape() != g.shape() || p.shape() != m.shape() || p.shape() != v.shape() {
                return Err(Error::shape(format!(
                    "adam: param {}x{} vs grad {}x{}",
                    p.rows(),
                    p.cols(),
                    g.rows(),
                    g.cols()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for ((pi, &gi), (mi, vi)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
