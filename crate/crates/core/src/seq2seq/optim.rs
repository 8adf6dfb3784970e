use super::float::Float;
use super::params::ParamStore;

/// Rescales `grads` in place so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<F: Float>(grads: &mut ParamStore<F>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm.is_finite() {
        grads.scale(F::of(max_norm / norm));
    }
    norm
}

/// Adam with bias correction and a constant learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<F> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: ParamStore<F>,
    pub v: ParamStore<F>,
}

impl<F: Float> Adam<F> {
    pub fn new(params: &ParamStore<F>, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn update(&mut self, params: &mut ParamStore<F>, grads: &ParamStore<F>) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (F::of(self.beta1), F::of(self.beta2));
        let (one_b1, one_b2) = (F::one() - b1, F::one() - b2);
        let c1 = F::of(1.0 - self.beta1.powi(t));
        let c2 = F::of(1.0 - self.beta2.powi(t));
        let lr = F::of(self.lr);
        let eps = F::of(self.eps);
        for i in 0..params.len() {
            let (p, g) = (&mut params.data[i], &grads.data[i]);
            let (m, v) = (&mut self.m.data[i], &mut self.v.data[i]);
            for j in 0..p.len() {
                m[j] = b1 * m[j] + one_b1 * g[j];
                v[j] = b2 * v[j] + one_b2 * g[j] * g[j];
                let mh = m[j] / c1;
                let vh = v[j] / c2;
                p[j] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::params::Init;
    use rand::SeedableRng;

    fn store(values: &[f64]) -> ParamStore<f64> {
        let mut p = ParamStore::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let i = p.add("x".into(), vec![values.len()], Init::Zeros, &mut rng);
        p.data[i].copy_from_slice(values);
        p
    }

    #[test]
    fn norm_ten_is_scaled_by_a_tenth() {
        let mut g = store(&[6.0, 8.0]);
        let n = clip_global_norm(&mut g, 1.0);
        assert_eq!(n, 10.0);
        assert!((g.data[0][0] - 0.6).abs() < 1e-15 && (g.data[0][1] - 0.8).abs() < 1e-15);
        let mut small = store(&[0.3, 0.4]);
        clip_global_norm(&mut small, 1.0);
        assert_eq!(small.data[0], vec![0.3, 0.4]);
    }

    #[test]
    fn first_adam_step_moves_each_weight_by_lr() {
        let mut p = store(&[1.0, -2.0, 0.5]);
        let g = store(&[0.3, -7.0, 1e-3]);
        let mut opt = Adam::new(&p, 1e-3, 0.9, 0.98, 1e-9);
        opt.update(&mut p, &g);
        for (x, want) in p.data[0].iter().zip([1.0 - 1e-3, -2.0 + 1e-3, 0.5 - 1e-3]) {
            assert!((x - want).abs() < 1e-8);
        }
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut p = store(&[3.0, -4.0]);
        let mut opt = Adam::new(&p, 0.05, 0.9, 0.98, 1e-9);
        for _ in 0..2000 {
            let g = store(&[2.0 * p.data[0][0], 2.0 * p.data[0][1]]);
            opt.update(&mut p, &g);
        }
        assert!(p.global_norm() < 1e-2);
    }
}
