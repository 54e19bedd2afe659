//! Minimal dense-tensor algebra with reverse-mode differentiation.
//!
//! Everything the model computes runs through [`Tape`]: forward values are
//! computed eagerly as operations are recorded, and a single reverse sweep
//! fills gradient accumulators. Double precision throughout.

mod check;
mod tape;
mod tensor;

pub use check::grad_check;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

pub(crate) use tape::sigmoid_value;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("empty softmax support")]
    EmptySoftmaxSupport,
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    // ---- softmax ----------------------------------------------------------

    #[test]
    fn softmax_symmetric_pair() {
        let mut tape = Tape::new();
        let v = tape.constant(&[1, 2], vec![0.0, 0.0]);
        let s = tape.masked_softmax(v, &[true, true]).unwrap();
        assert_eq!(tape.value(s), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_closed_form() {
        let mut tape = Tape::new();
        let v = tape.constant(&[1, 2], vec![2.0_f64.ln(), 0.0]);
        let s = tape.masked_softmax(v, &[true, true]).unwrap();
        assert_close(tape.value(s)[0], 2.0 / 3.0, 1e-12);
        assert_close(tape.value(s)[1], 1.0 / 3.0, 1e-12);
    }

    #[test]
    fn softmax_masked_positions_are_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let vals: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v = tape.constant(&[1, 5], vals);
        let mask = [true, false, true, true, false];
        let s = tape.masked_softmax(v, &mask).unwrap();
        let out = tape.value(s);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[4], 0.0);
        let total: f64 = out.iter().sum();
        assert_close(total, 1.0, 1e-9);
        assert!(out.iter().zip(mask).all(|(&o, m)| !m || o > 0.0));
    }

    #[test]
    fn softmax_empty_support_errors() {
        let mut tape = Tape::new();
        let v = tape.constant(&[1, 3], vec![1.0, 2.0, 3.0]);
        let err = tape.masked_softmax(v, &[false, false, false]).unwrap_err();
        assert!(matches!(err, DiffError::EmptySoftmaxSupport));
        assert!(err.to_string().contains("empty softmax support"));
    }

    // ---- cosine -----------------------------------------------------------

    #[test]
    fn cosine_self_orthogonal_antipodal() {
        let mut tape = Tape::new();
        let a = tape.constant(&[1, 3], vec![0.3, -1.2, 2.0]);
        let same = tape.cosine(a, a).unwrap();
        assert_close(tape.value(same)[0], 1.0, 1e-12);

        let x = tape.constant(&[1, 2], vec![1.0, 0.0]);
        let y = tape.constant(&[1, 2], vec![0.0, 1.0]);
        let orth = tape.cosine(x, y).unwrap();
        assert_eq!(tape.value(orth)[0], 0.0);

        let neg = tape.scale(a, -1.0);
        let anti = tape.cosine(a, neg).unwrap();
        assert_close(tape.value(anti)[0], -1.0, 1e-12);
    }

    #[test]
    fn cosine_zero_vector_yields_zero() {
        let mut tape = Tape::new();
        let z = tape.zeros(&[1, 4]);
        let a = tape.constant(&[1, 4], vec![1.0, 2.0, 3.0, 4.0]);
        let c = tape.cosine(z, a).unwrap();
        assert_eq!(tape.value(c)[0], 0.0);
    }

    #[test]
    fn cosine_length_mismatch_errors() {
        let mut tape = Tape::new();
        let a = tape.constant(&[1, 3], vec![1.0, 2.0, 3.0]);
        let b = tape.constant(&[1, 2], vec![1.0, 2.0]);
        assert!(matches!(
            tape.cosine(a, b),
            Err(DiffError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cosine_bounded_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::new();
        let data = |rng: &mut ChaCha8Rng| (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = tape.constant(&[10, 4], data(&mut rng));
        let b = tape.constant(&[10, 4], data(&mut rng));
        let c = tape.cosine_rows(a, b).unwrap();
        assert!(tape.value(c).iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    // ---- backward ---------------------------------------------------------

    #[test]
    fn backward_power_rule() {
        // loss = x * x at x = 3 -> grad 6
        let mut tape = Tape::new();
        let x = tape.constant(&[1, 1], vec![3.0]);
        let loss = tape.mul(x, x);
        tape.backward(loss).unwrap();
        assert_close(tape.grad(x).unwrap()[0], 6.0, 1e-12);
    }

    #[test]
    fn backward_sigmoid_cross_entropy_at_zero() {
        // loss = -log(sigmoid(0)) with label 1 -> d loss / d logit = sigmoid(0) - 1 = -0.5
        let mut tape = Tape::new();
        let logit = tape.constant(&[1, 1], vec![0.0]);
        let p = tape.sigmoid(logit);
        let logp = tape.log(p);
        let loss = tape.scale(logp, -1.0);
        tape.backward(loss).unwrap();
        assert_close(tape.grad(logit).unwrap()[0], -0.5, 1e-12);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.constant(&[1, 2], vec![1.0, 2.0]);
        let y = tape.add(x, x);
        assert!(matches!(
            tape.backward(y),
            Err(DiffError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn backward_is_linear_in_the_seed() {
        // Doubling the loss doubles every gradient.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = Tensor::randn(&[3, 3], 1.0, &mut rng);
        let x = Tensor::randn(&[1, 3], 1.0, &mut rng);

        let run = |double: bool| -> Vec<f64> {
            let mut tape = Tape::new();
            let wv = tape.leaf(&w);
            let xv = tape.leaf(&x);
            let h = tape.matmul(xv, wv);
            let s = tape.sigmoid(h);
            let mut loss = tape.sum(s);
            if double {
                loss = tape.scale(loss, 2.0);
            }
            tape.backward(loss).unwrap();
            tape.grad(wv).unwrap().to_vec()
        };

        let g1 = run(false);
        let g2 = run(true);
        for (a, b) in g1.iter().zip(&g2) {
            assert_close(2.0 * a, *b, 1e-12);
        }
    }

    #[test]
    fn composite_matches_finite_differences() {
        // Random composite of matmul / masked softmax / cosine, checked
        // against central differences (step 1e-5, relative error < 1e-4).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Tensor::randn(&[4, 4], 0.5, &mut rng);
        let q = Tensor::randn(&[1, 4], 0.5, &mut rng);
        let keys = Tensor::randn(&[5, 4], 0.5, &mut rng);
        let vals = Tensor::randn(&[5, 4], 0.5, &mut rng);
        let mask = [true, true, false, true, true];

        let err = grad_check(
            |tape, vars| {
                let (w, q, k, v) = (vars[0], vars[1], vars[2], vars[3]);
                let kp = tape.matmul(k, w);
                let scores = tape.matmul_t(q, kp, false, true);
                let attn = tape.masked_softmax(scores, &mask)?;
                let ctx = tape.matmul(attn, v);
                let cos = tape.cosine(ctx, q)?;
                let spread = tape.mul(ctx, ctx);
                let l1 = tape.sum(spread);
                let l = tape.add(l1, cos);
                Ok(tape.sum(l))
            },
            &[w, q, keys, vals],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn grad_check_linear_map_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Tensor::randn(&[3, 2], 1.0, &mut rng);
        let err = grad_check(
            |tape, vars| {
                let x = tape.constant(&[1, 3], vec![0.5, -1.0, 2.0]);
                let y = tape.matmul(x, vars[0]);
                Ok(tape.sum(y))
            },
            &[w],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-10, "linear map should be near-exact, got {err}");
    }

    #[test]
    fn grad_check_softmax_attention_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = Tensor::randn(&[1, 4], 0.8, &mut rng);
        let k = Tensor::randn(&[6, 4], 0.8, &mut rng);
        let v = Tensor::randn(&[6, 4], 0.8, &mut rng);
        let mask = [true; 6];
        let err = grad_check(
            |tape, vars| {
                let scores = tape.matmul_t(vars[0], vars[1], false, true);
                let scaled = tape.scale(scores, 0.5);
                let attn = tape.masked_softmax(scaled, &mask)?;
                let out = tape.matmul(attn, vars[2]);
                let sq = tape.mul(out, out);
                Ok(tape.sum(sq))
            },
            &[q, k, v],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn every_primitive_matches_finite_differences_on_random_points() {
        // 100 random points across the differentiable primitives.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..100 {
            let a = Tensor::randn(&[3, 4], 1.0, &mut rng);
            let b = Tensor::randn(&[3, 4], 1.0, &mut rng);
            let w = Tensor::randn(&[4, 3], 1.0, &mut rng);
            let mask = [true, false, true, true];
            let seed = round as u64;
            let err = grad_check(
                |tape, vars| {
                    let (a, b, w) = (vars[0], vars[1], vars[2]);
                    let mut drop_rng = ChaCha8Rng::seed_from_u64(seed);
                    let sum = tape.add(a, b);
                    let diff = tape.sub(a, b);
                    let prod = tape.mul(sum, diff);
                    let proj = tape.matmul(prod, w); // 3x3
                    let projt = tape.matmul_t(a, b, true, false); // 4x4
                    let row = tape.gather(projt, &[1, 3]);
                    let sig = tape.sigmoid(proj);
                    let lg = tape.log(sig);
                    let cs = tape.cosine_rows(a, b)?;
                    let sm_in = tape.gather(projt, &[0]);
                    let sm = tape.masked_softmax(sm_in, &mask)?;
                    let dropped = tape.dropout(row, 0.3, &mut drop_rng);
                    let m1 = tape.mean(lg);
                    let s1 = tape.sum(cs);
                    let s2 = tape.sum(sm);
                    let s3 = tape.sum(dropped);
                    let t1 = tape.add(m1, s1);
                    let t2 = tape.add(s2, s3);
                    Ok(tape.add(t1, t2))
                },
                &[a, b, w],
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "round {round}: max relative error {err}");
        }
    }

    // ---- replay / determinism ---------------------------------------------

    #[test]
    fn replaying_the_tape_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut tape = Tape::new();
        let a = tape.constant(&[4, 4], (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let b = tape.constant(&[4, 4], (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let p = tape.matmul(a, b);
        let s = tape.sigmoid(p);
        let c = tape.cosine_rows(s, a).unwrap();
        let sm = tape.masked_softmax(c, &[true, true, true, false]).unwrap();
        let mut drop_rng = ChaCha8Rng::seed_from_u64(77);
        let d = tape.dropout(sm, 0.5, &mut drop_rng);
        let out = tape.sum(d);
        let before = tape.value(out).to_vec();
        tape.replay();
        let after = tape.value(out).to_vec();
        assert_eq!(before[0].to_bits(), after[0].to_bits());
    }

    #[test]
    fn dropout_keeps_expectation_and_masks() {
        let mut tape = Tape::new();
        let x = tape.constant(&[1, 1000], vec![1.0; 1000]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = tape.dropout(x, 0.5, &mut rng);
        let vals = tape.value(d);
        let kept = vals.iter().filter(|&&v| v != 0.0).count();
        assert!(vals.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!((400..600).contains(&kept), "kept {kept} of 1000 at rate 0.5");
    }

    #[test]
    fn gather_accumulates_repeated_rows() {
        let mut tape = Tape::new();
        let table = tape.constant(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let g = tape.gather(table, &[1, 1, 2]);
        let s = tape.sum(g);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(table).unwrap(), &[0.0, 0.0, 2.0, 2.0, 1.0, 1.0]);
    }
}
