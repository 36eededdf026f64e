//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hetverify_core::bench::{Benchmark, Strategy, BENCH_FAR};
use hetverify_core::eval::{kfold_split, roc_curve, vr_at_far, ScoreSet};
use hetverify_core::losses::{
    am_softmax_forward, l2_softmax_forward, mps_forward, mps_gradient_check, AmSoftmaxHead, MpsConfig,
    L2_SOFTMAX_SCALE,
};
use hetverify_core::model::{Activation, EmbeddingModel, ModelConfig};
use hetverify_core::numerics::{
    l2_normalize, l2_normalize_backward, max_relative_error, numerical_gradient, EmbeddingVector, Matrix,
};
use hetverify_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_TOL: f64 = 1e-4;
const GRAD_CASES: usize = 100;
const ORACLE_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

fn unit(v: &[f64]) -> EmbeddingVector {
    l2_normalize(v).unwrap().0
}

// ---------------------------------------------------------------- criterion 1

fn grad_normalize(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=8);
    let x = normal_vec(&mut rng, d);
    let u = normal_vec(&mut rng, d);
    let analytic = l2_normalize_backward(&x, &u).unwrap();
    let f = |p: &[f64]| dot(&u, l2_normalize(p).unwrap().0.as_slice());
    Some(max_relative_error(&analytic, &numerical_gradient(f, &x, 1e-6).unwrap()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `None` for a draw whose raw output is too close to zero to normalize.
fn grad_model(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.random_range(0..=2);
    let config = ModelConfig {
        input_dim: rng.random_range(1..=6),
        hidden_dims: (0..depth).map(|_| rng.random_range(1..=6)).collect(),
        embedding_dim: rng.random_range(2..=5),
        activation: if seed.is_multiple_of(2) { Activation::Tanh } else { Activation::Relu },
        init_seed: seed,
    };
    let model = EmbeddingModel::init(config.clone()).unwrap();
    let x = normal_vec(&mut rng, config.input_dim);
    let u = normal_vec(&mut rng, config.embedding_dim);
    let (_, cache) = model.forward(&x).ok()?;
    if dot(cache.raw_output(), cache.raw_output()) < 1e-2 {
        return None;
    }
    let analytic = model.backward(&cache, &u).unwrap().flatten();
    let f = |p: &[f64]| {
        let mut m = model.clone();
        m.set_flat(p).unwrap();
        dot(&u, m.embed(&x).unwrap().as_slice())
    };
    Some(max_relative_error(&analytic, &numerical_gradient(f, &model.flatten(), 1e-6).unwrap()))
}

/// Softmax gradient on raw embeddings (through normalization), head weights
/// and, for AM-Softmax, the scale.
fn grad_softmax(seed: u64, l2: bool) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=5);
    let c = rng.random_range(2..=6);
    let b = rng.random_range(1..=5);
    let (scale, margin) = if l2 {
        (L2_SOFTMAX_SCALE, 0.0)
    } else {
        (rng.random_range(1.0..20.0), rng.random_range(0.0..5.0))
    };
    let w = normal_vec(&mut rng, d * c);
    let raw: Vec<Vec<f64>> = (0..b).map(|_| normal_vec(&mut rng, d)).collect();
    let labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..c)).collect();

    let eval = |w: &[f64], raw: &[f64], s: f64| {
        let head = AmSoftmaxHead::new(Matrix::new(d, c, w.to_vec()).unwrap(), s, margin, !l2).unwrap();
        let emb: Vec<EmbeddingVector> = raw.chunks(d).map(unit).collect();
        if l2 {
            l2_softmax_forward(&head, &emb, &labels).unwrap()
        } else {
            am_softmax_forward(&head, &emb, &labels).unwrap()
        }
    };
    let flat: Vec<f64> = raw.concat();
    let out = eval(&w, &flat, scale);
    let hg = out.head_grads.clone().unwrap();

    let mut analytic_x = vec![];
    for (k, r) in raw.iter().enumerate() {
        analytic_x.extend(l2_normalize_backward(r, &out.grads_on_embeddings[k]).unwrap());
    }
    let num_x = numerical_gradient(|p| eval(&w, p, scale).value, &flat, 1e-6).unwrap();
    let num_w = numerical_gradient(|p| eval(p, &flat, scale).value, &w, 1e-6).unwrap();
    let num_s = numerical_gradient(|p| eval(&w, &flat, p[0]).value, &[scale], 1e-6).unwrap();
    let mut err = max_relative_error(&analytic_x, &num_x).max(max_relative_error(hg.weights.as_slice(), &num_w));
    if l2 {
        err = err.max(hg.scale.abs());
    } else {
        err = err.max(max_relative_error(&[hg.scale], &num_s));
    }
    Some(err)
}

/// `None` for a draw within the kink guard of a hinge or an argmax tie.
fn grad_mps(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(2..=6);
    let d = rng.random_range(2..=5);
    let margin = rng.random_range(0.0..1.5);
    let g: Vec<Vec<f64>> = (0..p).map(|_| normal_vec(&mut rng, d)).collect();
    let h: Vec<Vec<f64>> = (0..p).map(|_| normal_vec(&mut rng, d)).collect();
    match mps_gradient_check(&MpsConfig::new(margin).unwrap(), &g, &h, 1e-6) {
        Ok(e) => Some(e),
        Err(Error::TieAtKink) => None,
        Err(e) => panic!("mps seed {seed}: {e}"),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut report = vec![];
    type Check<'a> = &'a dyn Fn(u64) -> Option<f64>;
    let suites: [(&str, Check); 5] = [
        ("normalize", &grad_normalize),
        ("model", &grad_model),
        ("am-softmax", &|s| grad_softmax(s, false)),
        ("l2-softmax", &|s| grad_softmax(s, true)),
        ("mps", &grad_mps),
    ];
    for (name, check) in suites {
        let (mut checked, mut skipped, mut worst, mut seed) = (0, 0, 0.0f64, 0u64);
        while checked < GRAD_CASES {
            match check(seed) {
                Some(e) => {
                    worst = worst.max(e);
                    checked += 1;
                }
                None => skipped += 1,
            }
            seed += 1;
        }
        ensure(worst < GRAD_TOL, || format!("{name}: max relative error {worst:.2e}"))?;
        report.push(format!("{name} {worst:.1e} ({skipped} skipped)"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{} cases each; {}; {:.1}s", GRAD_CASES, report.join(", "), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- criterion 2

/// Direct arithmetic: `−ln(e^{s cos_y − m} / (e^{s cos_y − m} + Σ_{j≠y} e^{s cos_j}))`.
fn am_oracle(w: &[f64], d: usize, c: usize, s: f64, m: f64, emb: &[Vec<f64>], labels: &[usize]) -> f64 {
    let col = |j: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|k| w[k * c + j]).collect();
        let n = dot(&v, &v).sqrt();
        v.iter().map(|x| x / n).collect()
    };
    let mut total = 0.0;
    for (f, &y) in emb.iter().zip(labels) {
        let n = dot(f, f).sqrt();
        let f: Vec<f64> = f.iter().map(|x| x / n).collect();
        let target = (s * dot(&col(y), &f) - m).exp();
        let others: f64 = (0..c).filter(|&j| j != y).map(|j| (s * dot(&col(j), &f)).exp()).sum();
        total += -(target / (target + others)).ln();
    }
    total / emb.len() as f64
}

/// Exhaustive enumeration over every impostor of every pair.
fn mps_oracle(g: &[Vec<f64>], h: &[Vec<f64>], m: f64) -> f64 {
    let p = g.len();
    let mut total = 0.0;
    for i in 0..p {
        let mut hardest = f64::NEG_INFINITY;
        for j in 0..p {
            if j != i {
                hardest = hardest.max(dot(&g[j], &h[i])).max(dot(&g[i], &h[j]));
            }
        }
        total += (hardest - dot(&g[i], &h[i]) + m).max(0.0);
    }
    total / p as f64
}

fn criterion_2() -> Outcome {
    let cases = [
        (1.0, 0.0, 1.0 / (1.0 + (-1.0f64).exp()), "0.31326"),
        (1.0, 1.0, 0.5, "ln 2"),
    ];
    for (s, m, p_true, name) in cases {
        let head = AmSoftmaxHead::new(Matrix::identity(2), s, m, true).unwrap();
        let v = am_softmax_forward(&head, &[unit(&[1.0, 0.0])], &[0]).unwrap().value;
        let want = -f64::ln(p_true);
        ensure((v - want).abs() < ORACLE_TOL, || format!("{name} case gave {v}"))?;
    }
    let head = AmSoftmaxHead::new(Matrix::identity(2), 1.0, 0.0, true).unwrap();
    let v = am_softmax_forward(&head, &[unit(&[1.0, 0.0])], &[0]).unwrap().value;
    ensure((v - 0.31326).abs() < 1e-5, || format!("0.31326 case gave {v}"))?;
    let e = [unit(&[1.0, 0.0]), unit(&[0.0, 1.0])];
    let v = mps_forward(&MpsConfig::new(1.5).unwrap(), &e, &e).unwrap().value;
    ensure((v - 0.5).abs() < ORACLE_TOL, || format!("0.5 MPS case gave {v}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut batches = 0;
    let mut worst = 0.0f64;
    for c in 1..=6 {
        for b in 1..=6 {
            for _ in 0..20 {
                let d = rng.random_range(1..=5);
                let s = rng.random_range(0.5..30.0);
                let m = rng.random_range(0.0..6.0);
                let w = normal_vec(&mut rng, d * c);
                let raw: Vec<Vec<f64>> = (0..b).map(|_| normal_vec(&mut rng, d)).collect();
                let labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..c)).collect();
                let emb: Vec<EmbeddingVector> = raw.iter().map(|r| unit(r)).collect();
                let mat = Matrix::new(d, c, w.clone()).unwrap();
                let am = am_softmax_forward(&AmSoftmaxHead::new(mat.clone(), s, m, true).unwrap(), &emb, &labels)
                    .unwrap()
                    .value;
                let l2 = l2_softmax_forward(&AmSoftmaxHead::new(mat, L2_SOFTMAX_SCALE, 0.0, false).unwrap(), &emb, &labels)
                    .unwrap()
                    .value;
                worst = worst
                    .max((am - am_oracle(&w, d, c, s, m, &raw, &labels)).abs())
                    .max((l2 - am_oracle(&w, d, c, L2_SOFTMAX_SCALE, 0.0, &raw, &labels)).abs());
                batches += 1;
            }
        }
    }
    for p in 2..=6 {
        for _ in 0..100 {
            let d = rng.random_range(1..=5);
            let m = rng.random_range(0.0..2.0);
            let mut draw = || -> Vec<Vec<f64>> {
                (0..p).map(|_| unit(&normal_vec(&mut rng, d)).into_inner()).collect()
            };
            let (g, h) = (draw(), draw());
            let eg: Vec<EmbeddingVector> = g.iter().map(|v| unit(v)).collect();
            let eh: Vec<EmbeddingVector> = h.iter().map(|v| unit(v)).collect();
            let got = mps_forward(&MpsConfig::new(m).unwrap(), &eg, &eh).unwrap().value;
            worst = worst.max((got - mps_oracle(&g, &h, m)).abs());
            batches += 1;
        }
    }
    ensure(worst < ORACLE_TOL, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("worked examples exact; {batches} random batches, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 3

fn random_scores(rng: &mut ChaCha8Rng) -> ScoreSet {
    let total = rng.random_range(2..=1000);
    let n_gen = rng.random_range(1..total);
    // coarse grids force ties between and within the two populations
    let levels = [10.0, 100.0, 1e6][rng.random_range(0..3)];
    let mut draw = |shift: f64| ((normal(rng) + shift) * levels).round() / levels;
    ScoreSet {
        genuine: (0..n_gen).map(|_| draw(1.0)).collect(),
        impostor: (n_gen..total).map(|_| draw(0.0)).collect(),
    }
}

fn count_ge(v: &[f64], t: f64) -> usize {
    v.iter().filter(|&&x| x >= t).count()
}

fn vr_oracle(s: &ScoreSet, far: f64) -> (f64, f64) {
    let mut cands: Vec<f64> = s.genuine.iter().chain(&s.impostor).copied().collect();
    cands.push(f64::INFINITY);
    let ok = cands
        .iter()
        .copied()
        .filter(|&t| count_ge(&s.impostor, t) as f64 / s.impostor.len() as f64 <= far);
    let t = ok.fold(f64::INFINITY, f64::min);
    (t, count_ge(&s.genuine, t) as f64 / s.genuine.len() as f64)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    for set in 0..200 {
        let s = random_scores(&mut rng);
        let mut fars: Vec<f64> = (0..5).map(|_| rng.random_range(1e-4..=1.0)).collect();
        fars.extend([1.0 / s.impostor.len() as f64, 1e-4, 1e-3, 0.01, 0.1, 1.0]);
        for &far in &fars {
            let got = vr_at_far(&s, far).unwrap();
            let (t, vr) = vr_oracle(&s, far);
            ensure(got.threshold == t && got.vr == vr, || {
                format!("set {set} far {far}: got ({}, {}), oracle ({t}, {vr})", got.threshold, got.vr)
            })?;
            checks += 1;
        }
        let mut thresholds: Vec<f64> = s.genuine.iter().chain(&s.impostor).copied().collect();
        thresholds.push(f64::INFINITY);
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let full = roc_curve(&s, thresholds.len()).unwrap();
        ensure(full.len() == thresholds.len(), || format!("set {set}: roc has {} points", full.len()))?;
        for (p, &t) in full.iter().zip(&thresholds) {
            let far = count_ge(&s.impostor, t) as f64 / s.impostor.len() as f64;
            let tar = count_ge(&s.genuine, t) as f64 / s.genuine.len() as f64;
            ensure(p.threshold == t && p.far == far && p.tar == tar, || format!("set {set}: roc point at {t}"))?;
        }
        let small = roc_curve(&s, 20).unwrap();
        ensure(small.len() <= 20 && small[0] == full[0] && small.last() == full.last(), || {
            format!("set {set}: downsampled roc lost its endpoints")
        })?;
        ensure(small.iter().all(|p| full.contains(p)), || format!("set {set}: downsampled point off the curve"))?;
        checks += 1;
    }
    let grid: Vec<f64> = (0..=40).map(|k| 10f64.powf(-4.0 + k as f64 * 0.1)).collect();
    for set in 0..100 {
        let s = random_scores(&mut rng);
        let vrs: Vec<f64> = grid.iter().map(|&f| vr_at_far(&s, f).unwrap().vr).collect();
        ensure(vrs.windows(2).all(|w| w[0] <= w[1]), || format!("monotonicity set {set}: {vrs:?}"))?;
    }
    Ok(format!("{checks} oracle comparisons exact; monotone over 100 sets x {} FARs", grid.len()))
}

// ------------------------------------------------------------ criteria 4 to 6

struct Bench {
    bench: Benchmark,
    base: EmbeddingModel,
    pretrain_time: Duration,
}

fn bench() -> Bench {
    let start = Instant::now();
    let bench = Benchmark::standard(1).unwrap();
    let base = bench.pretrain_base().unwrap();
    Bench {
        bench,
        base,
        pretrain_time: start.elapsed(),
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

fn criterion_4(b: &Bench) -> Outcome {
    let start = Instant::now();
    let rows = b.bench.run_ablation(&b.base).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed() + b.pretrain_time;
    let vr: Vec<f64> = rows.iter().map(|(_, r)| r.vr(BENCH_FAR).unwrap()).collect();
    for ((s, _), v) in rows.iter().zip(&vr) {
        println!("    {:<24} {}", s.label(), pct(*v));
    }
    let at = |s: Strategy| vr[Strategy::ALL.iter().position(|&x| x == s).unwrap()];
    let (fs, bm, l2, am, shared, sib) = (
        at(Strategy::FromScratch),
        at(Strategy::BaseModel),
        at(Strategy::TransferL2Softmax),
        at(Strategy::TransferAmSoftmax),
        at(Strategy::TransferMpsShared),
        at(Strategy::TransferMpsSibling),
    );
    ensure(fs < bm && bm < l2 && l2 <= am && am < shared && shared <= sib, || {
        format!("ordering violated: {}", vr.iter().map(|v| pct(*v)).collect::<Vec<_>>().join(" "))
    })?;
    ensure(bm - fs >= 0.05, || format!("FS to BM gap {}", pct(bm - fs)))?;
    ensure(shared.min(sib) - bm >= 0.05, || format!("BM to MPS gap {}", pct(shared.min(sib) - bm)))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "FS {} < BM {} < L2 {} <= AM {} < MPS-shared {} <= MPS-sibling {}; {:.0}s",
        pct(fs),
        pct(bm),
        pct(l2),
        pct(am),
        pct(shared),
        pct(sib),
        elapsed.as_secs_f64()
    ))
}

fn criterion_5(b: &Bench) -> Outcome {
    let sizes = [25, 50, 100, 160];
    let rows = b.bench.run_size_sweep(&b.base, &sizes).map_err(|e| e.to_string())?;
    let vr: Vec<f64> = rows.iter().map(|(_, r)| r.vr(BENCH_FAR).unwrap()).collect();
    let drops: Vec<f64> = vr.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect();
    let summary = sizes
        .iter()
        .zip(&vr)
        .map(|(n, v)| format!("{n}: {}", pct(*v)))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(drops.len() <= 1 && drops.iter().all(|&d| d <= 0.01), || format!("{summary}; drops {drops:?}"))?;
    Ok(summary)
}

fn criterion_6(b: &Bench) -> Outcome {
    let (base, tuned) = b.bench.run_cross_dataset(&b.base).map_err(|e| e.to_string())?;
    let (vb, vt) = (base.vr(BENCH_FAR).unwrap(), tuned.vr(BENCH_FAR).unwrap());
    let summary = format!("base {} vs fine-tuned {} ({} fused probes)", pct(vb), pct(vt), tuned.fused_probes);
    ensure(vt >= vb, || summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- criterion 7

const PIPELINE_CONFIG: &str = r#"
seed = 5
[data]
num_subjects = 50
num_classes = 12
samples_per_class = 6
shifted_selfie_shift = 0.3
[pretrain]
total_steps = 80
log_every = 10
[finetune]
total_steps = 30
log_every = 5
"#;

fn run_pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    std::fs::write(dir.join("exp.toml"), PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    std::fs::create_dir(dir.join("out")).map_err(|e| e.to_string())?;
    let common = ["--config", "exp.toml", "--out", "out"];
    let steps: [(&str, &[&str]); 6] = [
        ("gen-data", &[]),
        ("pretrain", &["--data", "out/source.hvd"]),
        ("finetune", &["--base", "out/base.ckpt", "--data", "out/pairs.hvd"]),
        ("crossval", &["--base", "out/base.ckpt", "--data", "out/pairs.hvd"]),
        ("eval", &["--id", "out/id.ckpt", "--selfie", "out/selfie.ckpt", "--data", "out/shifted.hvd"]),
        ("finetune", &["--base", "out/base.ckpt", "--loss", "am_softmax", "--train-size", "30"]),
    ];
    let mut stdout = vec![];
    for (cmd, extra) in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_hetverify"))
            .current_dir(dir)
            .arg(cmd)
            .args(common)
            .args(extra)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        stdout.extend(out.stdout);
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("out"))
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files.push(("stdout".into(), stdout));
    Ok(files)
}

fn criterion_7() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_pipeline(a.path())?;
    let second = run_pipeline(b.path())?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    ensure(names.len() >= 13, || format!("pipeline wrote only {names:?}"))?;
    for ((n1, b1), (n2, b2)) in first.iter().zip(&second) {
        ensure(n1 == n2 && b1 == b2, || format!("{n1} differs between runs"))?;
    }
    ensure(first.len() == second.len(), || "file sets differ".into())?;
    Ok(format!("{} artifacts byte-identical across two runs", first.len()))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    for seed in [0, 1, 42] {
        let split = kfold_split(9915, 5, seed).map_err(|e| e.to_string())?;
        for fold in 0..5 {
            let test = split.test_indices(fold);
            let train = split.train_indices(fold);
            ensure(test.len() == 1983 && train.len() == 7932, || {
                format!("seed {seed} fold {fold}: {}/{}", train.len(), test.len())
            })?;
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            ensure(all.iter().copied().eq(0..9915), || format!("seed {seed} fold {fold}: not a partition"))?;
        }
    }
    Ok("7932 train / 1983 test in every fold".into())
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |n: usize, outcome: Outcome| match outcome {
        Ok(msg) => println!("criterion {n}: PASS  {msg}"),
        Err(msg) => {
            failed += 1;
            println!("criterion {n}: FAIL  {msg}");
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    let b = bench();
    report(4, criterion_4(&b));
    report(5, criterion_5(&b));
    report(6, criterion_6(&b));
    report(7, criterion_7());
    report(8, criterion_8());
    println!("acceptance: {} of 8 criteria passed in {:.0}s", 8 - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
