use hetverify_core::eval::{fuse_selfies, score_protocol, vr_at_far, ScoreSet, SubjectEmbeddings};
use hetverify_core::losses::{
    am_softmax_forward, l2_softmax_forward, mps_forward, mps_hardest_impostors, AmSoftmaxHead, MpsConfig,
};
use hetverify_core::model::{clone_siblings, Activation, EmbeddingModel, ModelConfig};
use hetverify_core::numerics::{cosine_similarity, dot, l2_normalize, norm, EmbeddingVector, Matrix};
use hetverify_core::optim::{sgd_step, OptimizerState};
use proptest::prelude::*;

fn raw_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim).prop_filter("non-degenerate", |v| norm(v) > 1e-3)
}

fn unit_vecs(n: usize, dim: usize) -> impl Strategy<Value = Vec<EmbeddingVector>> {
    prop::collection::vec(raw_vec(dim), n).prop_map(|vs| vs.iter().map(|v| l2_normalize(v).unwrap().0).collect())
}

/// (P, g, h) with 2 ≤ P ≤ 6 in dimension 4.
fn pair_batch() -> impl Strategy<Value = (Vec<EmbeddingVector>, Vec<EmbeddingVector>)> {
    (2usize..=6).prop_flat_map(|p| (unit_vecs(p, 4), unit_vecs(p, 4)))
}

/// Head, embeddings and labels with C ≤ 6 classes.
fn softmax_case() -> impl Strategy<Value = (Matrix, Vec<EmbeddingVector>, Vec<usize>, f64)> {
    (1usize..=6, 1usize..=6, 2usize..=5).prop_flat_map(|(c, n, d)| {
        (
            prop::collection::vec(raw_vec(d), c)
                .prop_map(move |cols| Matrix::from_fn(d, c, |r, k| cols[k][r])),
            unit_vecs(n, d),
            prop::collection::vec(0..c, n),
            0.5f64..30.0,
        )
    })
}

fn model_config() -> impl Strategy<Value = ModelConfig> {
    (
        1usize..=8,
        prop::collection::vec(1usize..=8, 0..=2),
        2usize..=6,
        prop::bool::ANY,
        any::<u64>(),
    )
        .prop_map(|(input_dim, hidden_dims, embedding_dim, relu, init_seed)| ModelConfig {
            input_dim,
            hidden_dims,
            embedding_dim,
            activation: if relu { Activation::Relu } else { Activation::Tanh },
            init_seed,
        })
}

fn brute_force_hardest(g: &[EmbeddingVector], h: &[EmbeddingVector], i: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for j in (0..g.len()).filter(|&j| j != i) {
        best = best.max(dot(&g[j], &h[i])).max(dot(&g[i], &h[j]));
    }
    best
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_bounded(a in raw_vec(5), b in raw_vec(5)) {
        let a = l2_normalize(&a).unwrap().0;
        let b = l2_normalize(&b).unwrap().0;
        let ab = cosine_similarity(&a, &b).unwrap();
        prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn normalization_is_idempotent(v in raw_vec(7)) {
        let (u, _) = l2_normalize(&v).unwrap();
        let (uu, n) = l2_normalize(&u).unwrap();
        prop_assert!((n - 1.0).abs() < 1e-6);
        for (a, b) in u.iter().zip(uu.iter()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn embeddings_are_unit_norm(cfg in model_config(), scale in 0.0f64..50.0) {
        let m = EmbeddingModel::init(cfg.clone()).unwrap();
        let x: Vec<f64> = (0..cfg.input_dim).map(|i| scale * ((i as f64 * 1.7).sin() + 0.1)).collect();
        if let Ok(e) = m.embed(&x) {
            prop_assert!((norm(&e) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stepping_one_sibling_leaves_the_other(cfg in model_config(), steps in 1usize..5) {
        let base = EmbeddingModel::init(cfg).unwrap();
        let mut pair = clone_siblings(&base);
        let mut state = OptimizerState::for_tensors(&pair.id_model.tensors());
        let grads: Vec<Vec<f64>> = pair.id_model.tensors().iter().map(|t| vec![0.1; t.len()]).collect();
        let grad_refs: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
        for _ in 0..steps {
            sgd_step(&mut pair.id_model.tensors_mut(), &grad_refs, &mut state, 0.1, 0.9, 5e-4).unwrap();
        }
        prop_assert_eq!(&pair.selfie_model, &base);
        prop_assert_ne!(pair.id_model.flatten(), base.flatten());
    }

    #[test]
    fn plain_sgd_is_gradient_descent(p in prop::collection::vec(-5.0f64..5.0, 1..10), lr in 0.0f64..1.0) {
        let g: Vec<f64> = p.iter().map(|x| x * 0.3 - 1.0).collect();
        let mut params = p.clone();
        let mut state = OptimizerState::for_tensors(&[&params]);
        sgd_step(&mut [&mut params], &[&g], &mut state, lr, 0.0, 0.0).unwrap();
        for ((new, old), gi) in params.iter().zip(&p).zip(&g) {
            prop_assert_eq!(*new, old - lr * gi);
        }
    }

    #[test]
    fn am_softmax_is_monotone_in_margin((w, e, y, s) in softmax_case(), m1 in 0.0f64..5.0, dm in 0.0f64..5.0) {
        let value = |m: f64| {
            let head = AmSoftmaxHead::new(w.clone(), s, m, true).unwrap();
            am_softmax_forward(&head, &e, &y).unwrap().value
        };
        prop_assert!(value(m1) <= value(m1 + dm) + 1e-12);
    }

    #[test]
    fn am_softmax_ignores_column_norms((w, e, y, s) in softmax_case(), col in 0usize..6, m in 0.0f64..3.0) {
        let col = col % w.cols();
        let mut scaled = w.clone();
        for r in 0..w.rows() {
            scaled.set(r, col, 3.0 * w.get(r, col));
        }
        let a = am_softmax_forward(&AmSoftmaxHead::new(w, s, m, true).unwrap(), &e, &y).unwrap().value;
        let b = am_softmax_forward(&AmSoftmaxHead::new(scaled, s, m, true).unwrap(), &e, &y).unwrap().value;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn l2_softmax_is_zero_margin_am_softmax((w, e, y, _) in softmax_case()) {
        let head = AmSoftmaxHead::new(w, 16.0, 0.0, false).unwrap();
        let l2 = l2_softmax_forward(&head, &e, &y).unwrap();
        let am = am_softmax_forward(&head, &e, &y).unwrap();
        prop_assert_eq!(l2.value, am.value);
        prop_assert_eq!(l2.head_grads.unwrap().scale, 0.0);
    }

    #[test]
    fn hardest_impostor_is_the_brute_force_maximum((g, h) in pair_batch()) {
        let hardest = mps_hardest_impostors(&g, &h).unwrap();
        for (i, hi) in hardest.iter().enumerate() {
            prop_assert_ne!(hi.other, i);
            prop_assert_eq!(hi.score, brute_force_hardest(&g, &h, i));
        }
    }

    #[test]
    fn mps_is_permutation_invariant((g, h) in pair_batch(), seed in any::<u64>(), m in 0.0f64..1.0) {
        let p = g.len();
        let mut perm: Vec<usize> = (0..p).collect();
        perm.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let gp: Vec<_> = perm.iter().map(|&i| g[i].clone()).collect();
        let hp: Vec<_> = perm.iter().map(|&i| h[i].clone()).collect();
        let cfg = MpsConfig::new(m).unwrap();
        let a = mps_forward(&cfg, &g, &h).unwrap().value;
        let b = mps_forward(&cfg, &gp, &hp).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mps_pair_terms_vanish_exactly_beyond_the_margin((g, h) in pair_batch(), m in 0.0f64..1.0) {
        let out = mps_forward(&MpsConfig::new(m).unwrap(), &g, &h).unwrap();
        let p = g.len();
        let terms: Vec<f64> = (0..p)
            .map(|i| (brute_force_hardest(&g, &h, i) - dot(&g[i], &h[i]) + m).max(0.0))
            .collect();
        prop_assert!((out.value - terms.iter().sum::<f64>() / p as f64).abs() < 1e-12);
        let satisfied = |i: usize| dot(&g[i], &h[i]) - brute_force_hardest(&g, &h, i) >= m;
        for (i, t) in terms.iter().enumerate() {
            prop_assert_eq!(*t == 0.0, satisfied(i));
        }
        prop_assert_eq!(out.value == 0.0, (0..p).all(satisfied));
    }

    #[test]
    fn vr_is_monotone_and_respects_the_target(
        genuine in prop::collection::vec(-1.0f64..1.0, 1..60),
        impostor in prop::collection::vec(-1.0f64..1.0, 1..200),
        f1 in 0.0001f64..1.0,
        f2 in 0.0001f64..1.0,
    ) {
        let scores = ScoreSet { genuine, impostor };
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let a = vr_at_far(&scores, lo).unwrap();
        let b = vr_at_far(&scores, hi).unwrap();
        prop_assert!(a.vr <= b.vr);
        prop_assert!(a.achieved_far <= lo && b.achieved_far <= hi);
    }

    #[test]
    fn protocol_counts_and_relabeling(ids in unit_vecs(5, 3), probes in unit_vecs(5, 3), shift in 1usize..5) {
        let subjects = |order: &[usize]| -> Vec<SubjectEmbeddings> {
            order.iter().map(|&i| SubjectEmbeddings {
                subject_id: i as u64,
                id: ids[i].clone(),
                selfies: vec![probes[i].clone()],
            }).collect()
        };
        let sorted = |mut v: Vec<f64>| { v.sort_by(f64::total_cmp); v };
        let a = score_protocol(&subjects(&[0, 1, 2, 3, 4])).unwrap();
        let order: Vec<usize> = (0..5).map(|i| (i + shift) % 5).collect();
        let b = score_protocol(&subjects(&order)).unwrap();
        prop_assert_eq!(a.genuine.len(), 5);
        prop_assert_eq!(a.impostor.len(), 20);
        prop_assert_eq!(sorted(a.genuine), sorted(b.genuine));
        prop_assert_eq!(sorted(a.impostor), sorted(b.impostor));
    }

    #[test]
    fn fusing_copies_is_identity(v in raw_vec(6), n in 1usize..8) {
        let u = l2_normalize(&v).unwrap().0;
        let fused = fuse_selfies(&vec![u.clone(); n]).unwrap();
        for (a, b) in fused.iter().zip(u.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
