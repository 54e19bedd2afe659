//! Wengert tape: eager forward execution with recorded operations, replayed
//! in reverse for gradients.
//!
//! The primitive set is deliberately small: matmul (with transpose flags),
//! add/sub/mul, scalar scale, row gather, masked softmax, row-wise stabilized
//! cosine, sigmoid, clamped log, sum/mean reductions and inverted dropout.
//! Every forward pass in the model composes from these.

use rand::Rng;

use super::tensor::Tensor;
use super::DiffError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

struct Node {
    data: Vec<f64>,
    shape: Vec<usize>,
    grad: Option<Vec<f64>>,
}

const LOG_CLAMP: f64 = 1e-12;
const COSINE_EPS: f64 = 1e-8;

#[derive(Clone)]
enum Op {
    MatMul {
        a: Var,
        b: Var,
        out: Var,
        trans_a: bool,
        trans_b: bool,
    },
    Add { a: Var, b: Var, out: Var },
    Sub { a: Var, b: Var, out: Var },
    Mul { a: Var, b: Var, out: Var },
    Scale { input: Var, factor: f64, out: Var },
    Gather { table: Var, rows: Vec<usize>, out: Var },
    MaskedSoftmax { input: Var, mask: Vec<bool>, out: Var },
    CosineRows { a: Var, b: Var, out: Var },
    Sigmoid { input: Var, out: Var },
    LogClamped { input: Var, out: Var },
    Sum { input: Var, out: Var },
    Mean { input: Var, out: Var },
    Dropout { input: Var, keep: Vec<bool>, scale: f64, out: Var },
    Reshape { input: Var, out: Var },
}

/// Records primitive operations eagerly; `backward` fills gradient
/// accumulators for every node the loss depends on.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    ops: Vec<Op>,
}

fn gemm(
    a: &[f64],
    b: &[f64],
    a_rows: usize,
    a_cols: usize,
    b_rows: usize,
    b_cols: usize,
    trans_a: bool,
    trans_b: bool,
) -> (Vec<f64>, usize, usize) {
    let (m, k) = if trans_a { (a_cols, a_rows) } else { (a_rows, a_cols) };
    let (kb, n) = if trans_b { (b_cols, b_rows) } else { (b_rows, b_cols) };
    assert_eq!(k, kb, "matmul inner dimensions differ: {k} vs {kb}");
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = if trans_a { a[p * a_cols + i] } else { a[i * a_cols + p] };
            if av == 0.0 {
                continue;
            }
            let out_row = &mut out[i * n..(i + 1) * n];
            if trans_b {
                for (j, o) in out_row.iter_mut().enumerate() {
                    *o += av * b[j * b_cols + p];
                }
            } else {
                let b_row = &b[p * b_cols..p * b_cols + n];
                for (o, bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
    }
    (out, m, n)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Var {
        debug_assert!(data.iter().all(|v| v.is_finite()), "non-finite tape value");
        let id = self.nodes.len();
        self.nodes.push(Node { data, shape, grad: None });
        Var(id)
    }

    /// Leaf holding a copy of the tensor's current values.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec())
    }

    pub fn constant(&mut self, shape: &[usize], data: Vec<f64>) -> Var {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        self.push(shape.to_vec(), data)
    }

    pub fn zeros(&mut self, shape: &[usize]) -> Var {
        let n = shape.iter().product();
        self.push(shape.to_vec(), vec![0.0; n])
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].data
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    fn dims2(&self, v: Var) -> (usize, usize) {
        let s = &self.nodes[v.0].shape;
        match s.len() {
            1 => (s[0], 1),
            2 => (s[0], s[1]),
            _ => panic!("expected 1-D or 2-D tensor, got {s:?}"),
        }
    }

    // ---- primitives -------------------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.matmul_t(a, b, false, false)
    }

    pub fn matmul_t(&mut self, a: Var, b: Var, trans_a: bool, trans_b: bool) -> Var {
        let (ar, ac) = self.dims2(a);
        let (br, bc) = self.dims2(b);
        let (data, m, n) = gemm(
            &self.nodes[a.0].data,
            &self.nodes[b.0].data,
            ar,
            ac,
            br,
            bc,
            trans_a,
            trans_b,
        );
        let out = self.push(vec![m, n], data);
        self.ops.push(Op::MatMul { a, b, out, trans_a, trans_b });
        out
    }

    fn zip_elementwise(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Var {
        assert_eq!(
            self.nodes[a.0].data.len(),
            self.nodes[b.0].data.len(),
            "elementwise operands must have equal sizes"
        );
        let data = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(shape, data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_elementwise(a, b, |x, y| x + y);
        self.ops.push(Op::Add { a, b, out });
        out
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_elementwise(a, b, |x, y| x - y);
        self.ops.push(Op::Sub { a, b, out });
        out
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_elementwise(a, b, |x, y| x * y);
        self.ops.push(Op::Mul { a, b, out });
        out
    }

    pub fn scale(&mut self, input: Var, factor: f64) -> Var {
        let data = self.nodes[input.0].data.iter().map(|v| v * factor).collect();
        let shape = self.nodes[input.0].shape.clone();
        let out = self.push(shape, data);
        self.ops.push(Op::Scale { input, factor, out });
        out
    }

    /// Row gather (embedding lookup). Backward scatter-adds into the table.
    pub fn gather(&mut self, table: Var, rows: &[usize]) -> Var {
        let (tr, tc) = self.dims2(table);
        let mut data = Vec::with_capacity(rows.len() * tc);
        for &r in rows {
            assert!(r < tr, "gather row {r} out of range for table with {tr} rows");
            data.extend_from_slice(&self.nodes[table.0].data[r * tc..(r + 1) * tc]);
        }
        let out = self.push(vec![rows.len(), tc], data);
        self.ops.push(Op::Gather { table, rows: rows.to_vec(), out });
        out
    }

    /// Softmax over the masked support. Masked-out outputs are exactly zero;
    /// valid outputs are positive and sum to one.
    pub fn masked_softmax(&mut self, input: Var, mask: &[bool]) -> Result<Var, DiffError> {
        let x = &self.nodes[input.0].data;
        assert_eq!(x.len(), mask.len(), "softmax mask length mismatch");
        if !mask.iter().any(|&m| m) {
            return Err(DiffError::EmptySoftmaxSupport);
        }
        let max = x
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut data = vec![0.0; x.len()];
        let mut z = 0.0;
        for i in 0..x.len() {
            if mask[i] {
                let e = (x[i] - max).exp();
                data[i] = e;
                z += e;
            }
        }
        for (d, &m) in data.iter_mut().zip(mask) {
            if m {
                *d /= z;
            }
        }
        let shape = self.nodes[input.0].shape.clone();
        let out = self.push(shape, data);
        self.ops.push(Op::MaskedSoftmax { input, mask: mask.to_vec(), out });
        Ok(out)
    }

    /// Stabilized cosine between corresponding rows of two equal-shape
    /// matrices: `cos_i = <a_i, b_i> / max(|a_i||b_i|, 1e-8)`. Output is an
    /// `n x 1` column. A single-vector cosine is the one-row case.
    pub fn cosine_rows(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (ar, ac) = self.dims2(a);
        let (br, bc) = self.dims2(b);
        if ar != br || ac != bc {
            return Err(DiffError::ShapeMismatch {
                left: self.nodes[a.0].shape.clone(),
                right: self.nodes[b.0].shape.clone(),
            });
        }
        let mut data = Vec::with_capacity(ar);
        for i in 0..ar {
            let xa = &self.nodes[a.0].data[i * ac..(i + 1) * ac];
            let xb = &self.nodes[b.0].data[i * ac..(i + 1) * ac];
            data.push(cosine_value(xa, xb));
        }
        let out = self.push(vec![ar, 1], data);
        self.ops.push(Op::CosineRows { a, b, out });
        Ok(out)
    }

    /// Scalar stabilized cosine of two equal-length vectors.
    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        if self.nodes[a.0].data.len() != self.nodes[b.0].data.len() {
            return Err(DiffError::ShapeMismatch {
                left: self.nodes[a.0].shape.clone(),
                right: self.nodes[b.0].shape.clone(),
            });
        }
        let a_row = self.reshape(a, &[1, self.nodes[a.0].data.len()]);
        let b_row = self.reshape(b, &[1, self.nodes[b.0].data.len()]);
        self.cosine_rows(a_row, b_row)
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        let data = self.nodes[input.0]
            .data
            .iter()
            .map(|&v| sigmoid_value(v))
            .collect();
        let shape = self.nodes[input.0].shape.clone();
        let out = self.push(shape, data);
        self.ops.push(Op::Sigmoid { input, out });
        out
    }

    /// Natural log with the argument clamped at 1e-12.
    pub fn log(&mut self, input: Var) -> Var {
        let data = self.nodes[input.0]
            .data
            .iter()
            .map(|&v| v.max(LOG_CLAMP).ln())
            .collect();
        let shape = self.nodes[input.0].shape.clone();
        let out = self.push(shape, data);
        self.ops.push(Op::LogClamped { input, out });
        out
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let s: f64 = self.nodes[input.0].data.iter().sum();
        let out = self.push(vec![1, 1], vec![s]);
        self.ops.push(Op::Sum { input, out });
        out
    }

    pub fn mean(&mut self, input: Var) -> Var {
        let n = self.nodes[input.0].data.len();
        let s: f64 = self.nodes[input.0].data.iter().sum();
        let out = self.push(vec![1, 1], vec![s / n as f64]);
        self.ops.push(Op::Mean { input, out });
        out
    }

    /// Inverted dropout: kept entries are scaled by 1/(1 - rate) so the
    /// expectation is unchanged. `rate = 0` records nothing.
    pub fn dropout<R: Rng>(&mut self, input: Var, rate: f64, rng: &mut R) -> Var {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        if rate == 0.0 {
            return input;
        }
        let scale = 1.0 / (1.0 - rate);
        let keep: Vec<bool> = (0..self.nodes[input.0].data.len())
            .map(|_| rng.gen::<f64>() >= rate)
            .collect();
        let data = self.nodes[input.0]
            .data
            .iter()
            .zip(&keep)
            .map(|(&v, &k)| if k { v * scale } else { 0.0 })
            .collect();
        let shape = self.nodes[input.0].shape.clone();
        let out = self.push(shape, data);
        self.ops.push(Op::Dropout { input, keep, scale, out });
        out
    }

    /// Identity reinterpretation of the same values under a new shape.
    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Var {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.nodes[input.0].data.len(),
            "reshape must preserve the element count"
        );
        let data = self.nodes[input.0].data.clone();
        let out = self.push(shape.to_vec(), data);
        self.ops.push(Op::Reshape { input, out });
        out
    }

    // ---- backward ---------------------------------------------------------

    /// Reverse sweep from a scalar loss. Each recorded op is visited exactly
    /// once; gradients accumulate additively into every reachable node.
    pub fn backward(&mut self, loss: Var) -> Result<(), DiffError> {
        if self.nodes[loss.0].data.len() != 1 {
            return Err(DiffError::NonScalarLoss {
                shape: self.nodes[loss.0].shape.clone(),
            });
        }
        self.seed_grad(loss, 1.0);
        for idx in (0..self.ops.len()).rev() {
            let op = self.ops[idx].clone();
            self.backward_op(&op);
        }
        Ok(())
    }

    fn seed_grad(&mut self, v: Var, seed: f64) {
        let n = self.nodes[v.0].data.len();
        let g = self.nodes[v.0].grad.get_or_insert_with(|| vec![0.0; n]);
        g[0] += seed;
    }

    fn accumulate(&mut self, v: Var, delta: &[f64]) {
        let node = &mut self.nodes[v.0];
        let g = node.grad.get_or_insert_with(|| vec![0.0; node.data.len()]);
        debug_assert_eq!(g.len(), delta.len());
        g.iter_mut().zip(delta).for_each(|(a, d)| *a += d);
    }

    fn out_grad(&self, out: Var) -> Option<Vec<f64>> {
        self.nodes[out.0].grad.clone()
    }

    fn backward_op(&mut self, op: &Op) {
        match op {
            Op::MatMul { a, b, out, trans_a, trans_b } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let (ar, ac) = self.dims2(*a);
                let (br, bc) = self.dims2(*b);
                let (m, n) = {
                    let s = &self.nodes[out.0].shape;
                    (s[0], s[1])
                };
                let k = if *trans_a { ar } else { ac };
                // dA' = dOut @ B'^T (m x k), dB' = A'^T @ dOut (k x n);
                // transposed back when the corresponding flag is set.
                let (da_eff, _, _) =
                    gemm(&d_out, &self.nodes[b.0].data, m, n, br, bc, false, !trans_b);
                let da = if *trans_a { transpose_mat(&da_eff, m, k) } else { da_eff };
                self.accumulate(*a, &da);
                let (db_eff, _, _) =
                    gemm(&self.nodes[a.0].data, &d_out, ar, ac, m, n, !trans_a, false);
                let db = if *trans_b { transpose_mat(&db_eff, k, n) } else { db_eff };
                self.accumulate(*b, &db);
            }
            Op::Add { a, b, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                self.accumulate(*a, &d_out);
                self.accumulate(*b, &d_out);
            }
            Op::Sub { a, b, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                self.accumulate(*a, &d_out);
                let neg: Vec<f64> = d_out.iter().map(|v| -v).collect();
                self.accumulate(*b, &neg);
            }
            Op::Mul { a, b, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let da: Vec<f64> = d_out
                    .iter()
                    .zip(&self.nodes[b.0].data)
                    .map(|(d, v)| d * v)
                    .collect();
                let db: Vec<f64> = d_out
                    .iter()
                    .zip(&self.nodes[a.0].data)
                    .map(|(d, v)| d * v)
                    .collect();
                self.accumulate(*a, &da);
                self.accumulate(*b, &db);
            }
            Op::Scale { input, factor, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let d: Vec<f64> = d_out.iter().map(|v| v * factor).collect();
                self.accumulate(*input, &d);
            }
            Op::Gather { table, rows, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let (tr, tc) = self.dims2(*table);
                let mut dt = vec![0.0; tr * tc];
                for (i, &r) in rows.iter().enumerate() {
                    for c in 0..tc {
                        dt[r * tc + c] += d_out[i * tc + c];
                    }
                }
                self.accumulate(*table, &dt);
            }
            Op::MaskedSoftmax { input, mask, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let y = &self.nodes[out.0].data;
                let dot: f64 = y
                    .iter()
                    .zip(&d_out)
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|((&yi, &di), _)| yi * di)
                    .sum();
                let dx: Vec<f64> = y
                    .iter()
                    .zip(&d_out)
                    .zip(mask)
                    .map(|((&yi, &di), &m)| if m { yi * (di - dot) } else { 0.0 })
                    .collect();
                self.accumulate(*input, &dx);
            }
            Op::CosineRows { a, b, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let (rows, cols) = self.dims2(*a);
                let mut da = vec![0.0; rows * cols];
                let mut db = vec![0.0; rows * cols];
                for i in 0..rows {
                    let xa = &self.nodes[a.0].data[i * cols..(i + 1) * cols];
                    let xb = &self.nodes[b.0].data[i * cols..(i + 1) * cols];
                    let g = d_out[i];
                    if g == 0.0 {
                        continue;
                    }
                    let dot: f64 = xa.iter().zip(xb).map(|(x, y)| x * y).sum();
                    let na2: f64 = xa.iter().map(|x| x * x).sum();
                    let nb2: f64 = xb.iter().map(|x| x * x).sum();
                    let (na, nb) = (na2.sqrt(), nb2.sqrt());
                    let denom = (na * nb).max(COSINE_EPS);
                    let clamped = na * nb < COSINE_EPS;
                    for c in 0..cols {
                        // d cos / d a = b/denom - cos * a / |a|^2 (denominator
                        // treated as constant when the eps clamp is active).
                        let cos = dot / denom;
                        let term_a = xb[c] / denom
                            - if clamped || na2 == 0.0 { 0.0 } else { cos * xa[c] / na2 };
                        let term_b = xa[c] / denom
                            - if clamped || nb2 == 0.0 { 0.0 } else { cos * xb[c] / nb2 };
                        da[i * cols + c] += g * term_a;
                        db[i * cols + c] += g * term_b;
                    }
                }
                self.accumulate(*a, &da);
                self.accumulate(*b, &db);
            }
            Op::Sigmoid { input, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let y = &self.nodes[out.0].data;
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(y)
                    .map(|(d, &yi)| d * yi * (1.0 - yi))
                    .collect();
                self.accumulate(*input, &dx);
            }
            Op::LogClamped { input, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.nodes[input.0].data)
                    .map(|(d, &x)| if x > LOG_CLAMP { d / x } else { 0.0 })
                    .collect();
                self.accumulate(*input, &dx);
            }
            Op::Sum { input, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let dx = vec![d_out[0]; self.nodes[input.0].data.len()];
                self.accumulate(*input, &dx);
            }
            Op::Mean { input, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let n = self.nodes[input.0].data.len();
                let dx = vec![d_out[0] / n as f64; n];
                self.accumulate(*input, &dx);
            }
            Op::Dropout { input, keep, scale, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(keep)
                    .map(|(d, &k)| if k { d * scale } else { 0.0 })
                    .collect();
                self.accumulate(*input, &dx);
            }
            Op::Reshape { input, out } => {
                let Some(d_out) = self.out_grad(*out) else { return };
                self.accumulate(*input, &d_out);
            }
        }
    }

    // ---- replay -----------------------------------------------------------

    /// Re-executes every recorded op from the stored leaf values, overwriting
    /// intermediate buffers. With identical inputs the results are
    /// bit-identical to the original forward pass.
    pub fn replay(&mut self) {
        for idx in 0..self.ops.len() {
            let op = self.ops[idx].clone();
            self.replay_op(&op);
        }
    }

    fn replay_op(&mut self, op: &Op) {
        let (out, data) = match op {
            Op::MatMul { a, b, out, trans_a, trans_b } => {
                let (ar, ac) = self.dims2(*a);
                let (br, bc) = self.dims2(*b);
                let (d, _, _) = gemm(
                    &self.nodes[a.0].data,
                    &self.nodes[b.0].data,
                    ar,
                    ac,
                    br,
                    bc,
                    *trans_a,
                    *trans_b,
                );
                (*out, d)
            }
            Op::Add { a, b, out } => (
                *out,
                self.nodes[a.0]
                    .data
                    .iter()
                    .zip(&self.nodes[b.0].data)
                    .map(|(x, y)| x + y)
                    .collect(),
            ),
            Op::Sub { a, b, out } => (
                *out,
                self.nodes[a.0]
                    .data
                    .iter()
                    .zip(&self.nodes[b.0].data)
                    .map(|(x, y)| x - y)
                    .collect(),
            ),
            Op::Mul { a, b, out } => (
                *out,
                self.nodes[a.0]
                    .data
                    .iter()
                    .zip(&self.nodes[b.0].data)
                    .map(|(x, y)| x * y)
                    .collect(),
            ),
            Op::Scale { input, factor, out } => (
                *out,
                self.nodes[input.0].data.iter().map(|v| v * factor).collect(),
            ),
            Op::Gather { table, rows, out } => {
                let (_, tc) = self.dims2(*table);
                let mut d = Vec::with_capacity(rows.len() * tc);
                for &r in rows {
                    d.extend_from_slice(&self.nodes[table.0].data[r * tc..(r + 1) * tc]);
                }
                (*out, d)
            }
            Op::MaskedSoftmax { input, mask, out } => {
                let x = &self.nodes[input.0].data;
                let max = x
                    .iter()
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|(&v, _)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut d = vec![0.0; x.len()];
                let mut z = 0.0;
                for i in 0..x.len() {
                    if mask[i] {
                        let e = (x[i] - max).exp();
                        d[i] = e;
                        z += e;
                    }
                }
                for (v, &m) in d.iter_mut().zip(mask) {
                    if m {
                        *v /= z;
                    }
                }
                (*out, d)
            }
            Op::CosineRows { a, b, out } => {
                let (rows, cols) = self.dims2(*a);
                let mut d = Vec::with_capacity(rows);
                for i in 0..rows {
                    let xa = &self.nodes[a.0].data[i * cols..(i + 1) * cols];
                    let xb = &self.nodes[b.0].data[i * cols..(i + 1) * cols];
                    d.push(cosine_value(xa, xb));
                }
                (*out, d)
            }
            Op::Sigmoid { input, out } => (
                *out,
                self.nodes[input.0]
                    .data
                    .iter()
                    .map(|&v| sigmoid_value(v))
                    .collect(),
            ),
            Op::LogClamped { input, out } => (
                *out,
                self.nodes[input.0]
                    .data
                    .iter()
                    .map(|&v| v.max(LOG_CLAMP).ln())
                    .collect(),
            ),
            Op::Sum { input, out } => (*out, vec![self.nodes[input.0].data.iter().sum()]),
            Op::Mean { input, out } => {
                let n = self.nodes[input.0].data.len();
                (*out, vec![self.nodes[input.0].data.iter().sum::<f64>() / n as f64])
            }
            Op::Dropout { input, keep, scale, out } => (
                *out,
                self.nodes[input.0]
                    .data
                    .iter()
                    .zip(keep)
                    .map(|(&v, &k)| if k { v * scale } else { 0.0 })
                    .collect(),
            ),
            Op::Reshape { input, out } => (*out, self.nodes[input.0].data.clone()),
        };
        self.nodes[out.0].data = data;
    }
}

pub(crate) fn sigmoid_value(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn cosine_value(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb).max(COSINE_EPS)
}

/// Transposes a `rows x cols` row-major matrix into `cols x rows`.
fn transpose_mat(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = m[i * cols + j];
        }
    }
    out
}
