//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bmgcn::blockmodel::{block_matrix, hard_block_matrix, refine_topology, similarity_matrix};
use bmgcn::gnn::{
    forward_full, learned_block_matrix, pretrain_mlp, run_splits, GcnParams, GraphData,
    MlpParams, ModelKind, TrainConfig,
};
use bmgcn::gradcheck::{finite_diff_grads, max_rel_error, DEFAULT_STEP};
use bmgcn::graph::{one_hot, stratified_split, Graph, LabelAssignment};
use bmgcn::sparse::{DiagMode, SparsePattern};
use bmgcn::synth::{sample_features, sample_sbm, SbmSpec};
use bmgcn::tape::{Tape, VarId};
use bmgcn::tensor::Tensor;

const GRAD_TOL: f64 = 1e-4;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "pass" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn rand_tensor(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect())
}

fn row_stochastic(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let mut t = rand_tensor(rows, cols, 0.05, 1.0, rng);
    for i in 0..rows {
        let s: f64 = t.row(i).iter().sum();
        for v in t.row_mut(i) {
            *v /= s;
        }
    }
    t
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(&edges, n).unwrap()
}

/// Scalar probe: weight every entry distinctly so structural mistakes
/// (transposed indices, dropped entries) cannot cancel in the reduction.
fn probe_sum(tape: &mut Tape, v: VarId) -> VarId {
    let (r, c) = tape.value(v).shape();
    let probe = Tensor::from_vec(r, c, (0..r * c).map(|k| 0.3 + 0.17 * k as f64).collect());
    let p = tape.constant(probe);
    let h = tape.hadamard(v, p);
    tape.sum(h)
}

/// Gradient-check one op: `build` records the graph from input vars and
/// returns a scalar loss var.
fn check_op<F>(name: &str, params: &[Tensor], build: F) -> f64
where
    F: Fn(&mut Tape, &[VarId]) -> VarId,
{
    let run = |p: &[Tensor]| -> (Tape, VarId, Vec<VarId>) {
        let mut tape = Tape::with_seed(99);
        let vars: Vec<VarId> = p.iter().map(|t| tape.input(t.clone(), true)).collect();
        let loss = build(&mut tape, &vars);
        (tape, loss, vars)
    };
    let (tape, loss, vars) = run(params);
    let grads = tape.backward(loss).unwrap();
    let analytic: Vec<&Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();
    let numeric = finite_diff_grads(params, |p| {
        let (tape, loss, _) = run(p);
        tape.value(loss).scalar()
    }, DEFAULT_STEP);
    let err = max_rel_error(&analytic, &numeric);
    assert!(err < GRAD_TOL, "{name}: max rel error {err}");
    err
}

#[test]
fn criterion_1_gradient_correctness() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;

    // primitive ops, each probed through a scalar reduction
    let a = rand_tensor(4, 3, -1.0, 1.0, &mut rng);
    let b = rand_tensor(3, 5, -1.0, 1.0, &mut rng);
    worst = worst.max(check_op("matmul", &[a.clone(), b], |t, v| {
        let m = t.matmul(v[0], v[1]);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("transpose", &[a.clone()], |t, v| {
        let m = t.transpose(v[0]);
        probe_sum(t, m)
    }));
    let b2 = rand_tensor(4, 3, -1.0, 1.0, &mut rng);
    worst = worst.max(check_op("add", &[a.clone(), b2.clone()], |t, v| {
        let m = t.add(v[0], v[1]);
        probe_sum(t, m)
    }));
    let bias = rand_tensor(1, 3, -1.0, 1.0, &mut rng);
    worst = worst.max(check_op("add_row_bias", &[a.clone(), bias], |t, v| {
        let m = t.add_row_bias(v[0], v[1]);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("scale", &[a.clone()], |t, v| {
        let m = t.scale(v[0], -1.7);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("hadamard", &[a.clone(), b2.clone()], |t, v| {
        let m = t.hadamard(v[0], v[1]);
        probe_sum(t, m)
    }));
    let den = rand_tensor(4, 3, 0.4, 2.0, &mut rng);
    worst = worst.max(check_op("hadamard_div_guarded", &[a.clone(), den], |t, v| {
        let m = t.hadamard_div_guarded(v[0], v[1]).unwrap();
        probe_sum(t, m)
    }));
    // keep activations away from the relu kink
    let mut relu_in = rand_tensor(4, 3, -1.0, 1.0, &mut rng);
    for v in relu_in.data_mut() {
        if v.abs() < 0.05 {
            *v = 0.1_f64.copysign(*v);
        }
    }
    worst = worst.max(check_op("relu", &[relu_in], |t, v| {
        let m = t.relu(v[0]);
        probe_sum(t, m)
    }));
    // dropout mask is a function of the tape seed, identical across evals
    worst = worst.max(check_op("dropout", &[a.clone()], |t, v| {
        let m = t.dropout(v[0], 0.4, true);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("row_softmax", &[a.clone()], |t, v| {
        let m = t.row_softmax(v[0]);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("scale_diag", &[rand_tensor(3, 3, -1.0, 1.0, &mut rng)], |t, v| {
        let m = t.scale_diag(v[0], 2.5);
        probe_sum(t, m)
    }));
    worst = worst.max(check_op("sum", &[a.clone()], |t, v| t.sum(v[0])));

    let g = random_graph(7, 0.4, &mut rng);
    let pattern = Rc::new(SparsePattern::from_graph(&g, DiagMode::All));
    let nnz = pattern.nnz();
    let vals = rand_tensor(nnz, 1, -1.0, 1.0, &mut rng);
    let dense = rand_tensor(7, 3, -1.0, 1.0, &mut rng);
    let pat = Rc::clone(&pattern);
    worst = worst.max(check_op("spmm", &[vals.clone(), dense], move |t, v| {
        let m = t.spmm(&pat, v[0], v[1]);
        probe_sum(t, m)
    }));
    let pat = Rc::clone(&pattern);
    worst = worst.max(check_op("masked_row_softmax", &[vals], move |t, v| {
        let m = t.masked_row_softmax(&pat, v[0]).unwrap();
        probe_sum(t, m)
    }));
    let bsoft = row_stochastic(7, 3, &mut rng);
    let q = rand_tensor(3, 3, 0.1, 1.0, &mut rng);
    let pat = Rc::clone(&pattern);
    worst = worst.max(check_op("edgewise_bilinear", &[bsoft.clone(), q], move |t, v| {
        let m = t.edgewise_bilinear(v[0], v[1], &pat);
        probe_sum(t, m)
    }));
    let mask = vec![true, false, true, false, true, false, true];
    let hard = {
        let y = LabelAssignment::from_full(vec![0, 1, 2, 0, 1, 2, 0], 3).unwrap();
        one_hot(&y, &[0.0, 0.0, 0.0])
    };
    let mask2 = mask.clone();
    let hard2 = hard.clone();
    worst = worst.max(check_op("assemble_rows", &[bsoft.clone()], move |t, v| {
        let m = t.assemble_rows(v[0], hard2.clone(), &mask2);
        probe_sum(t, m)
    }));
    let logits = rand_tensor(7, 3, -1.0, 1.0, &mut rng);
    worst = worst.max(check_op("softmax_cross_entropy_masked", &[logits], move |t, v| {
        t.softmax_cross_entropy_masked(v[0], hard.clone(), &mask)
    }));

    // full pipeline on a random 12-node, 3-class graph, eval mode
    let n = 12;
    let g = loop {
        let g = random_graph(n, 0.35, &mut rng);
        if (0..n).all(|i| g.degree(i) > 0) {
            break g;
        }
    };
    let y = LabelAssignment::from_full((0..n).map(|i| i % 3).collect(), 3).unwrap();
    let features = rand_tensor(n, 6, -1.0, 1.0, &mut rng);
    let data = GraphData { graph: g, labels: y, features };
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    for i in 0..n {
        match i % 3 {
            0 | 1 => train[i] = true,
            _ => {
                if i % 2 == 0 {
                    val[i] = true
                } else {
                    test[i] = true
                }
            }
        }
    }
    let split = bmgcn::graph::SplitMask::new(train, val, test).unwrap();
    let mut init_rng = ChaCha8Rng::seed_from_u64(5);
    let mlp = MlpParams::init(6, 5, 3, &mut init_rng);
    let gcn = GcnParams::init(6, 5, 3, 2, &mut init_rng);
    let cfg = TrainConfig { layers: 2, hidden: 5, dropout: 0.0, ..TrainConfig::default() };

    let flat: Vec<Tensor> = mlp
        .tensors()
        .into_iter()
        .chain(gcn.tensors())
        .cloned()
        .collect();
    let rebuild = |p: &[Tensor]| {
        let mlp = MlpParams { w1: p[0].clone(), b1: p[1].clone(), w2: p[2].clone(), b2: p[3].clone() };
        let gcn = GcnParams {
            layers: vec![(p[4].clone(), p[5].clone()), (p[6].clone(), p[7].clone())],
        };
        (mlp, gcn)
    };
    let mut tape = Tape::new();
    let ff = forward_full(&mut tape, &data, &split, &mlp, &gcn, &cfg, false).unwrap();
    let grads = tape.backward(ff.l_final).unwrap();
    let ids = ff.param_ids();
    let analytic: Vec<&Tensor> = ids.iter().map(|&id| grads.wrt(id)).collect();
    let numeric = finite_diff_grads(&flat, |p| {
        let (mlp, gcn) = rebuild(p);
        let mut tape = Tape::new();
        let ff = forward_full(&mut tape, &data, &split, &mlp, &gcn, &cfg, false).unwrap();
        tape.value(ff.l_final).scalar()
    }, DEFAULT_STEP);
    let err = max_rel_error(&analytic, &numeric);
    worst = worst.max(err);

    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (gradient correctness)",
        worst < GRAD_TOL && elapsed < 60.0,
        &format!("max rel error {worst:.2e}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_2_sparse_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n = rng.gen_range(5..=50);
        let c = rng.gen_range(2..=5);
        let p = rng.gen_range(0.05..0.3);
        let g = random_graph(n, p, &mut rng);
        let beta = [0.0, 0.7, 1.0, 1.5][case % 4];
        let b = row_stochastic(n, c, &mut rng);
        let q = rand_tensor(c, c, 0.0, 1.5, &mut rng);

        // sparse pipeline under test
        let mut tape = Tape::new();
        let bv = tape.constant(b.clone());
        let qv = tape.constant(q.clone());
        let refined = refine_topology(&mut tape, bv, qv, &g, beta).unwrap();
        let weights = tape.value(refined.weights);

        // dense oracle: Omega = B Q B^T, A' = Omega .* (A + beta I),
        // isolated nodes get a self-loop of max(beta, 1), then a row softmax
        // restricted to the nonzero support of the multiplier.
        let omega = b.matmul(&q.matmul(&b.transpose()));
        let mut support = vec![vec![0.0; n]; n];
        for i in 0..n {
            for &j in g.neighbors(i) {
                support[i][j] = 1.0;
            }
            support[i][i] = if g.degree(i) == 0 { beta.max(1.0) } else { beta };
        }
        let mut dense_rows = vec![vec![f64::NEG_INFINITY; n]; n];
        for i in 0..n {
            for j in 0..n {
                // beta = 0 removes diagonal support except forced self-loops
                if support[i][j] != 0.0 || (i != j && g.neighbors(i).contains(&j)) {
                    dense_rows[i][j] = omega.get(i, j) * support[i][j];
                }
            }
        }
        for i in 0..n {
            let max = dense_rows[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            let mut exps = vec![0.0; n];
            for j in 0..n {
                if dense_rows[i][j] > f64::NEG_INFINITY {
                    exps[j] = (dense_rows[i][j] - max).exp();
                    sum += exps[j];
                }
            }
            for j in 0..n {
                dense_rows[i][j] = if exps[j] > 0.0 { exps[j] / sum } else { 0.0 };
            }
        }
        // same support size, so neither side has extra entries
        let dense_nnz = dense_rows
            .iter()
            .flatten()
            .filter(|&&v| v > 0.0)
            .count();
        assert_eq!(dense_nnz, refined.pattern.nnz(), "support mismatch");
        for (i, j, k) in refined.pattern.entries() {
            worst = worst.max((weights.get(k, 0) - dense_rows[i][j]).abs());
        }
        // entries outside the sparse support must be zero in the oracle too
        let mut mass: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                mass += dense_rows[i][j];
            }
        }
        worst = worst.max((mass - n as f64).abs() / n as f64);
    }
    report(
        "2 (sparse/dense oracle equivalence)",
        worst < 1e-10,
        &format!("max entry diff {worst:.2e} over 20 graphs"),
    );
}

#[test]
fn criterion_3_block_matrix_hand_cases() {
    // path graph 0-1-2-3 with labels [0,0,1,1]
    let g = Graph::from_edges(&[(0, 1), (1, 2), (2, 3)], 4).unwrap();
    let y = LabelAssignment::from_full(vec![0, 0, 1, 1], 2).unwrap();
    let mut tape = Tape::new();
    let ys = tape.constant(one_hot(&y, &[0.0, 0.0]));
    let h = block_matrix(&mut tape, ys, &g).unwrap();
    let h_expect = Tensor::from_rows(&[&[2.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 2.0 / 3.0]]);
    let h_err = tape.value(h).max_abs_diff(&h_expect);
    let q = similarity_matrix(&mut tape, h, 1.0);
    let q_expect = Tensor::from_rows(&[&[5.0 / 9.0, 4.0 / 9.0], &[4.0 / 9.0, 5.0 / 9.0]]);
    let q_err = tape.value(q).max_abs_diff(&q_expect);

    // pure homophily: two disjoint triangles
    let g2 = Graph::from_edges(&[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], 6).unwrap();
    let y2 = LabelAssignment::from_full(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
    let homo_err = hard_block_matrix(&g2, &y2).unwrap().max_abs_diff(&Tensor::identity(2));

    // pure bipartite heterophily
    let g3 = Graph::from_edges(&[(0, 2), (0, 3), (1, 2), (1, 3)], 4).unwrap();
    let y3 = LabelAssignment::from_full(vec![0, 0, 1, 1], 2).unwrap();
    let anti = Tensor::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let het_err = hard_block_matrix(&g3, &y3).unwrap().max_abs_diff(&anti);

    report(
        "3 (block-matrix hand cases)",
        h_err == 0.0 && q_err < 1e-12 && homo_err == 0.0 && het_err == 0.0,
        &format!("path H err {h_err:.1e}, Q err {q_err:.1e}, homophily err {homo_err:.1e}, heterophily err {het_err:.1e}"),
    );
}

/// Heterophilic SBM: a 4-class ring where almost all edges cross to the two
/// adjacent classes. Planted homophily ~0.024.
fn heterophilic_data() -> GraphData {
    let mut spec = SbmSpec::uniform(1000, 4, 0.002, 0.0, 16, 0.3, 42);
    for r in 0..4 {
        spec.p[r][(r + 1) % 4] = 0.04;
        spec.p[(r + 1) % 4][r] = 0.04;
    }
    assert!(bmgcn::synth::planted_homophily(&spec).unwrap() <= 0.15);
    let (graph, labels) = sample_sbm(&spec).unwrap();
    let features = sample_features(&labels, 16, 0.3, 43).unwrap();
    GraphData { graph, labels, features }
}

/// Homophilic SBM with planted homophily ~0.87.
fn homophilic_data() -> GraphData {
    let spec = SbmSpec::uniform(1000, 4, 0.04, 0.002, 16, 0.3, 42);
    assert!(bmgcn::synth::planted_homophily(&spec).unwrap() >= 0.8);
    let (graph, labels) = sample_sbm(&spec).unwrap();
    let features = sample_features(&labels, 16, 0.3, 43).unwrap();
    GraphData { graph, labels, features }
}

fn bench_cfg() -> TrainConfig {
    TrainConfig {
        pretrain_epochs: 200,
        joint_epochs: 400,
        patience: 50,
        ..TrainConfig::default()
    }
}

#[test]
fn criterion_4_heterophily_advantage() {
    let start = std::time::Instant::now();
    let data = heterophilic_data();
    let cfg = bench_cfg();
    let (bm, _) = run_splits(&data, &cfg, ModelKind::BmGcn, 5, 7).unwrap();
    let (gcn, _) = run_splits(&data, &cfg, ModelKind::BaselineGcn, 5, 7).unwrap();
    let (mlp, _) = run_splits(&data, &cfg, ModelKind::BaselineMlp, 5, 7).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "4 (heterophily advantage)",
        bm.mean >= gcn.mean + 0.10 && bm.mean >= mlp.mean && elapsed < 600.0,
        &format!(
            "bm-gcn {:.4}, gcn {:.4}, mlp {:.4}, {elapsed:.0}s",
            bm.mean, gcn.mean, mlp.mean
        ),
    );
}

#[test]
fn criterion_5_homophily_non_regression() {
    let data = homophilic_data();
    let cfg = bench_cfg();
    let (bm, _) = run_splits(&data, &cfg, ModelKind::BmGcn, 5, 7).unwrap();
    let (gcn, _) = run_splits(&data, &cfg, ModelKind::BaselineGcn, 5, 7).unwrap();
    report(
        "5 (homophily non-regression)",
        bm.mean >= gcn.mean - 0.02,
        &format!("bm-gcn {:.4}, gcn {:.4}", bm.mean, gcn.mean),
    );
}

#[test]
fn criterion_6_block_matrix_recovery() {
    let data = heterophilic_data();
    let cfg = bench_cfg();
    let split = stratified_split(&data.labels, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mlp = MlpParams::init(data.feature_dim(), cfg.hidden, data.num_classes(), &mut rng);
    pretrain_mlp(&mut mlp, &data, &split, &cfg).unwrap();
    let learned = learned_block_matrix(&data, &split, &mlp, &cfg).unwrap();
    let truth = hard_block_matrix(&data.graph, &data.labels).unwrap();
    let diff = learned.max_abs_diff(&truth);
    report(
        "6 (block-matrix recovery)",
        diff < 0.15,
        &format!("max |H_learned - H_truth| = {diff:.4}"),
    );
}

#[test]
fn criterion_7_hyperparameter_sweeps() {
    let het = heterophilic_data();
    let homo = homophilic_data();
    let cfg = bench_cfg();

    let k_sweep = |data: &GraphData| -> Vec<f64> {
        (1..=6)
            .map(|k| {
                let mut c = cfg.clone();
                c.layers = k;
                run_splits(data, &c, ModelKind::BmGcn, 3, 7).unwrap().0.mean
            })
            .collect()
    };
    let het_k = k_sweep(&het);
    let homo_k = k_sweep(&homo);
    let k_ok = het_k[5] < het_k[2] && homo_k[5] < homo_k[2];

    let mut c0 = cfg.clone();
    c0.lambda = 0.0;
    let lam0 = run_splits(&het, &c0, ModelKind::BmGcn, 3, 7).unwrap().0.mean;
    let lam_half = het_k[2]; // K=3, lambda=0.5 from the sweep above
    let lambda_ok = lam0 < lam_half;

    let alpha_accs: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&a| {
            let mut c = cfg.clone();
            c.alpha = a;
            run_splits(&homo, &c, ModelKind::BmGcn, 3, 7).unwrap().0.mean
        })
        .collect();
    let spread = alpha_accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - alpha_accs.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha_ok = spread < 0.05;

    report(
        "7 (hyperparameter sweep sanity)",
        k_ok && lambda_ok && alpha_ok,
        &format!(
            "K het {het_k:.3?} homo {homo_k:.3?}; lambda0 {lam0:.3} vs {lam_half:.3}; alpha spread {spread:.4}"
        ),
    );
}

#[test]
fn criterion_8_cora_benchmark() {
    // Exact published accuracies are not reproducible without the original
    // split files and unreported architecture details; this check runs only
    // when a Cora copy in the canonical dataset layout is supplied.
    let dir = std::env::var("BMGCN_CORA_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|_| {
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/cora")
        });
    if !dir.join("edges.tsv").exists() {
        println!(
            "criterion 8 (published-benchmark fidelity): skipped (no Cora dataset at {}; set BMGCN_CORA_DIR to run)",
            dir.display()
        );
        return;
    }
    let start = std::time::Instant::now();
    let data = bmgcn::data::load_dataset(&dir).unwrap();
    let cfg = TrainConfig::default();
    let (bm, _) = run_splits(&data, &cfg, ModelKind::BmGcn, 10, 0).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "8 (published-benchmark fidelity)",
        bm.mean >= 0.84 && elapsed < 900.0,
        &format!("bm-gcn {:.4} over 10 splits, {elapsed:.0}s", bm.mean),
    );
}

#[test]
fn criterion_9_determinism() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    let bin = env!("CARGO_BIN_EXE_bmgcn");
    let gen = Command::new(bin)
        .args(["generate", "--out"])
        .arg(&ds)
        .args(["--n", "150", "--classes", "3", "--p-in", "0.1", "--p-out", "0.02"])
        .args(["--feature-dim", "9", "--flip-prob", "0.2", "--seed", "5"])
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let run = |out: &std::path::Path| {
        let st = Command::new(bin)
            .args(["train", "--dataset"])
            .arg(&ds)
            .arg("--out")
            .arg(out)
            .args(["--n-splits", "2", "--hidden", "8", "--pretrain-epochs", "20"])
            .args(["--joint-epochs", "25", "--patience", "25", "--seed", "3"])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        (
            std::fs::read(out.join("summary.jsonl")).unwrap(),
            std::fs::read(out.join("metrics.jsonl")).unwrap(),
        )
    };
    let (s1, m1) = run(&dir.path().join("a"));
    let (s2, m2) = run(&dir.path().join("b"));
    report(
        "9 (determinism)",
        s1 == s2 && m1 == m2,
        &format!(
            "summaries {} bytes, metrics {} bytes, bit-identical across reruns",
            s1.len(),
            m1.len()
        ),
    );
}
