use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Dense row-major f64 tensor. Shapes are 1-D or 2-D; scalars are `[1, 1]`.
///
/// Trainable tensors carry a same-shape gradient accumulator. Gradients are
/// additive across backward passes; callers zero them between optimizer steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    #[serde(skip)]
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "value count must equal the product of the shape dimensions"
        );
        Tensor {
            shape: shape.to_vec(),
            data,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::from_vec(&[1, 1], vec![v])
    }

    /// Zero-mean normal initialization with the given standard deviation.
    pub fn randn<R: Rng>(shape: &[usize], std_dev: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std_dev).expect("valid std dev");
        let n = shape.iter().product();
        let data = (0..n).map(|_| normal.sample(rng)).collect();
        Tensor::from_vec(shape, data)
    }

    /// Marks the tensor trainable and allocates its gradient slot.
    pub fn trainable(mut self) -> Self {
        self.requires_grad = true;
        self.grad = Some(vec![0.0; self.data.len()]);
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() needs a 2-D tensor");
        self.shape[1]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = 0.0);
        } else if self.requires_grad {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
    }

    /// Adds `g` into the gradient slot (allocating it on first use).
    pub fn accumulate_grad(&mut self, g: &[f64]) {
        assert_eq!(g.len(), self.data.len(), "gradient shape mismatch");
        match &mut self.grad {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, v)| *a += v),
            None => self.grad = Some(g.to_vec()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// In-place SGD-style update hook used by the optimizer; leaves grad alone.
    pub fn apply_update(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.data.len());
        self.data.iter_mut().zip(delta).for_each(|(v, d)| *v += d);
    }
}
