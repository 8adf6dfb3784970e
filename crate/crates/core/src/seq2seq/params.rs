use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::float::Float;

/// Named flat tensors. Gradients and optimizer moments use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<F> {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    pub data: Vec<Vec<F>>,
}

impl<F> Default for ParamStore<F> {
    fn default() -> Self {
        ParamStore {
            names: Vec::new(),
            shapes: Vec::new(),
            data: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Init {
    Zeros,
    Ones,
    /// Glorot uniform over a `fan_in × fan_out` matrix.
    Xavier,
    Normal(f64),
}

impl<F: Float> ParamStore<F> {
    pub(crate) fn add(&mut self, name: String, shape: Vec<usize>, init: Init, rng: &mut impl Rng) -> usize {
        let n: usize = shape.iter().product();
        let data = match init {
            Init::Zeros => vec![F::zero(); n],
            Init::Ones => vec![F::one(); n],
            Init::Xavier => {
                let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                let u = Uniform::new_inclusive(-limit, limit);
                (0..n).map(|_| F::of(u.sample(rng))).collect()
            }
            Init::Normal(sd) => {
                let d = Normal::new(0.0, sd).expect("positive sd");
                (0..n).map(|_| F::of(d.sample(rng))).collect()
            }
        };
        self.names.push(name);
        self.shapes.push(shape);
        self.data.push(data);
        self.data.len() - 1
    }

    pub fn zeros_like(&self) -> Self {
        ParamStore {
            names: self.names.clone(),
            shapes: self.shapes.clone(),
            data: self.data.iter().map(|d| vec![F::zero(); d.len()]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn shape(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn n_scalars(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn fill(&mut self, value: F) {
        for d in &mut self.data {
            d.iter_mut().for_each(|x| *x = value);
        }
    }

    /// Euclidean norm over every scalar, accumulated in f64.
    pub fn global_norm(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .map(|x| {
                let v = x.f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: F) {
        for d in &mut self.data {
            d.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().flatten().all(|x| x.is_finite())
    }

    /// Same names and shapes, values converted.
    pub fn cast<G: Float>(&self) -> ParamStore<G> {
        ParamStore {
            names: self.names.clone(),
            shapes: self.shapes.clone(),
            data: self
                .data
                .iter()
                .map(|d| d.iter().map(|x| G::of(x.f64())).collect())
                .collect(),
        }
    }
}
