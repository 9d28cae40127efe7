//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use lamper::config::validate_config;
use lamper::features::{extract_features, Feature};
use lamper::prompt::{build_ddp, build_fp, build_sdp, compute_chunk_len, render_chunked, PromptKind, RenderConfig};
use lamper::run::{run_benchmark, ABLATION_FILE, DIAGRAM_FILE, PER_DATASET_FILE, SUMMARY_FILE};
use lamper::stats::{average_ranks, friedman_statistic, nemenyi_cd, rank_column, AccuracyMatrix};
use lamper::svm::{evaluate, kkt_residual, resolve_gamma, solve_smo, train_multiclass, SvmConfig};
use lamper::embedding::mock_token_count;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn random_series(rng: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1e3..=1e3)).collect()
}

fn feature_corpus() -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(0xfea7);
    (0..1000)
        .map(|_| {
            let len = rng.random_range(1..=2048);
            random_series(&mut rng, len)
        })
        .collect()
}

fn feature_oracle() -> Outcome {
    let corpus = feature_corpus();
    let start = Instant::now();
    let extracted: Vec<Vec<f64>> = corpus.iter().map(|s| extract_features(s).unwrap().values()).collect();
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for (s, got) in corpus.iter().zip(&extracted) {
        let want = common::two_pass_features(s);
        for (g, w) in got.iter().zip(want) {
            worst = worst.max(rel_err(*g, w));
        }
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:e} > 1e-9"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 series, max rel err {worst:.2e}, {elapsed:.2?}"))
}

fn feature_identities() -> Outcome {
    let mut worst = 0.0f64;
    for s in feature_corpus() {
        let f = extract_features(&s).unwrap();
        let g = |k| f.get(k).unwrap();
        let (var, std, rms, mean) = (g(Feature::Variance), g(Feature::StandardDeviation), g(Feature::RootMeanSquare), g(Feature::Mean));
        worst = worst.max(rel_err(std * std, var)).max(rel_err(rms * rms, var + mean * mean));
        let absmax = g(Feature::Maximum).abs().max(g(Feature::Minimum).abs());
        ensure(g(Feature::AbsoluteMaximum) == absmax, || "absmax != max(|min|, |max|)".into())?;
    }
    ensure(worst <= 1e-12, || format!("identity error {worst:e} > 1e-12"))?;
    Ok(format!("max identity error {worst:.2e}"))
}

fn slicing_safety() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x511ce);
    let counter = mock_token_count;
    let mut multi_chunk = 0;
    for _ in 0..500 {
        let len = rng.random_range(1..=200);
        let precision: u8 = rng.random_range(0..=6);
        let budget = rng.random_range(3..=260);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-50.0..50.0)).collect();
        let cfg = RenderConfig::with_precision(precision);
        for kind in [PromptKind::Sdp, PromptKind::Ddp] {
            let oracle = common::linear_scan_chunk_len(&values, kind, &cfg, budget, &counter);
            let got = compute_chunk_len(&values, kind, &cfg, budget, &counter).ok();
            ensure(got == oracle, || format!("{kind} len {len} budget {budget}: chunk len {got:?}, oracle {oracle:?}"))?;
            let built = match kind {
                PromptKind::Sdp => build_sdp(&values, &cfg, budget, &counter),
                _ => build_ddp(&values, &cfg, budget, &counter),
            };
            let Ok(prompts) = built else { continue };
            for p in &prompts {
                let t = counter(&p.text);
                ensure(t <= budget, || format!("{kind} prompt of {t} tokens over budget {budget}"))?;
            }
            if kind == PromptKind::Sdp {
                multi_chunk += usize::from(prompts.len() > 1);
                let back: Vec<f64> = prompts
                    .iter()
                    .flat_map(|p| p.text.split(", ").map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
                    .collect();
                ensure(back.len() == values.len(), || "SDP lost values".into())?;
                let tol = 0.5 * 10f64.powi(-(precision as i32)) + 1e-9;
                for (b, v) in back.iter().zip(&values) {
                    ensure((b - v).abs() <= tol, || format!("{v} rendered as {b} at precision {precision}"))?;
                }
            }
        }
    }
    // 3 tokens per value plus 20 for the template.
    let charge = |text: &str| 20 + 3 * text.split(", ").count();
    let values = vec![0.5; 1000];
    let cfg = RenderConfig::default();
    let len = compute_chunk_len(&values, PromptKind::Sdp, &cfg, 512, &charge).map_err(|e| e.to_string())?;
    let oracle = common::linear_scan_chunk_len(&values, PromptKind::Sdp, &cfg, 512, &charge);
    ensure(len == 164 && oracle == Some(164), || format!("chunk len {len}, oracle {oracle:?}, expected 164"))?;
    Ok(format!("500 triples ({multi_chunk} multi-chunk SDP), 3-per-value case = 164"))
}

fn template_fidelity() -> Outcome {
    let cfg = RenderConfig::with_precision(1);
    let prompts = render_chunked(&[1.0, 2.0, 3.0, 4.0], PromptKind::Ddp, &cfg, 2).map_err(|e| e.to_string())?;
    let want = "The length of time series is 4. The original time series is splited into 2 sub-series, whose length is 2. The specific value of the 1st sub-series are 1.0, 2.0 in order.";
    ensure(prompts[0].text == want, || format!("DDP text {:?}", prompts[0].text))?;
    let fv = extract_features(&[1.0, 2.0, 3.0]).unwrap();
    let fp = build_fp(&fv, &RenderConfig::default(), 1_000_000, &mock_token_count).map_err(|e| e.to_string())?;
    let head = "10 features of the time series are extracted via tsfresh";
    ensure(fp.len() == 1 && fp[0].text.starts_with(head), || format!("FP text {:?}", fp[0].text))?;
    Ok("DDP byte-exact, FP head exact".into())
}

fn svm_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5e1f);
    let cfg = SvmConfig::default();
    let mut smo_time = Duration::ZERO;
    let (mut agree, mut probes, mut excluded) = (0usize, 0usize, 0usize);
    let mut worst_kkt = 0.0f64;
    for set in 0..50 {
        let n = rng.random_range(4..=12);
        let d = rng.random_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let gamma = resolve_gamma(&rows, &cfg).unwrap();
        let start = Instant::now();
        let sol = solve_smo(&rows, &y, gamma, &cfg).map_err(|e| e.to_string())?;
        smo_time += start.elapsed();
        let kkt = kkt_residual(&rows, &y, &sol, cfg.c);
        worst_kkt = worst_kkt.max(kkt);
        ensure(kkt <= 10.0 * cfg.tolerance, || format!("set {set}: KKT residual {kkt}"))?;
        let balance: f64 = sol.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        ensure(balance.abs() <= 1e-8, || format!("set {set}: sum alpha*y = {balance:e}"))?;
        ensure(sol.alphas.iter().all(|&a| (-1e-8..=cfg.c + 1e-8).contains(&a)), || format!("set {set}: alpha out of box"))?;
        let (oa, ob) = common::dense_qp_oracle(&rows, &y, gamma, cfg.c);
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
            let want = common::oracle_decision(&rows, &y, &oa, ob, gamma, &x);
            if want.abs() < 1e-2 {
                excluded += 1;
                continue;
            }
            let got = common::oracle_decision(&rows, &y, &sol.alphas, sol.bias, gamma, &x);
            probes += 1;
            agree += usize::from(got.signum() == want.signum());
        }
    }
    let rate = agree as f64 / probes as f64;
    ensure(rate >= 0.99, || format!("sign agreement {rate:.4}"))?;
    ensure(smo_time < Duration::from_secs(60), || format!("SMO took {smo_time:?}"))?;
    Ok(format!("agreement {rate:.4} on {probes} probes ({excluded} near-boundary excluded), max KKT {worst_kkt:.1e}, SMO {smo_time:.2?}"))
}

fn separable_sanity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xb10b);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        let (cx, label) = if i < 10 { (-3.0, 1) } else { (3.0, 2) };
        rows.push(vec![cx + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        labels.push(label);
    }
    let cfg = SvmConfig::default();
    let first = train_multiclass(&rows, &labels, &cfg).map_err(|e| e.to_string())?;
    let acc = evaluate(&first, &rows, &labels).unwrap();
    ensure(acc == 1.0, || format!("train accuracy {acc}"))?;
    for _ in 0..3 {
        let again = train_multiclass(&rows, &labels, &cfg).unwrap();
        ensure(again == first, || "retrained model differs".into())?;
    }
    Ok("train accuracy 1.0, 3 identical reruns".into())
}

fn statistics() -> Outcome {
    let cd = nemenyi_cd(5, 128, 0.05).map_err(|e| e.to_string())?;
    let want = 2.728 * (30.0f64 / 768.0).sqrt();
    ensure((cd - 0.5392).abs() <= 1e-3 && (cd - want).abs() < 1e-9, || format!("CD(5,128) = {cd}"))?;

    let tie = AccuracyMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        (0..4).map(|d| format!("d{d}")).collect(),
        vec![vec![Some(0.7); 4]; 3],
    )
    .unwrap();
    let f0 = friedman_statistic(&average_ranks(&tie).unwrap(), 4);
    ensure(f0 == 0.0, || format!("full-tie Friedman {f0}"))?;

    let hand = AccuracyMatrix::new(
        vec!["a".into(), "b".into()],
        (0..10).map(|d| format!("d{d}")).collect(),
        vec![vec![Some(0.9); 10], vec![Some(0.8); 10]],
    )
    .unwrap();
    let ranks = average_ranks(&hand).unwrap();
    let f10 = friedman_statistic(&ranks, 10);
    ensure(ranks == [1.0, 2.0] && (f10 - 10.0).abs() < 1e-12, || format!("hand case ranks {ranks:?}, Friedman {f10}"))?;

    let mut rng = StdRng::seed_from_u64(0x57a7);
    for _ in 0..200 {
        let k = rng.random_range(2..=8);
        let n = rng.random_range(1..=12);
        // Coarse values so ties occur.
        let cells: Vec<Vec<Option<f64>>> =
            (0..k).map(|_| (0..n).map(|_| Some(rng.random_range(0..=10) as f64 / 10.0)).collect()).collect();
        for d in 0..n {
            let col: Vec<f64> = cells.iter().map(|c| c[d].unwrap()).collect();
            let sum: f64 = rank_column(&col).iter().sum();
            let want = (k * (k + 1)) as f64 / 2.0;
            ensure((sum - want).abs() < 1e-9, || format!("rank sum {sum} != {want}"))?;
        }
        let methods: Vec<String> = (0..k).map(|m| format!("m{m}")).collect();
        let datasets: Vec<String> = (0..n).map(|d| format!("d{d}")).collect();
        let base = AccuracyMatrix::new(methods.clone(), datasets.clone(), cells.clone()).unwrap();
        // A different strictly increasing map per column.
        let shifts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.1..3.0), rng.random_range(-1.0..1.0))).collect();
        let warped: Vec<Vec<Option<f64>>> = cells
            .iter()
            .map(|row| row.iter().zip(&shifts).map(|(v, (a, b))| v.map(|v| (a * v + b).exp() / 100.0)).collect())
            .collect();
        let warped = AccuracyMatrix::new(methods, datasets, warped).unwrap();
        ensure(average_ranks(&base).unwrap() == average_ranks(&warped).unwrap(), || "ranks changed under a monotone transform".into())?;
    }
    Ok(format!("CD(5,128) = {cd:.4}, Friedman tie 0 / hand 10, 200 random matrices"))
}

fn e2e_config(dir: &Path) -> String {
    format!(
        "[data]\nroot = {root}\n[backend]\nbackend = mock\nmock.dimension = 32\nmock.seed = 7\n[prompts]\nkinds = sdp, ddp, fp\nfusion = sdp+ddp+fp\nraw_ts_benchmark = true\n[run]\noutput_dir = {out}\ncache_dir = {cache}\nconcurrency = 4\n",
        root = common::synthetic_root().display(),
        out = dir.join("out").display(),
        cache = dir.join("cache").display(),
    )
}

fn end_to_end(summary_ranks: &mut Option<(Vec<String>, Vec<f64>)>) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = validate_config(&e2e_config(tmp.path())).map_err(|e| e.to_string())?;
    let files = [SUMMARY_FILE, PER_DATASET_FILE, ABLATION_FILE, DIAGRAM_FILE];
    let start = Instant::now();
    let first = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let names: Vec<&str> = first.methods.iter().map(|m| m.name.as_str()).collect();
    ensure(names == ["SDP", "DDP", "FP", "Fusion", "TS"], || format!("methods {names:?}"))?;
    ensure(first.matrix.datasets().len() == 3, || "expected 3 datasets".into())?;
    let read = |f: &str| fs::read(cfg.output_dir.join(f)).map_err(|e| format!("{f}: {e}"));
    let before: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect::<Result<_, _>>()?;
    let second = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let after: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect::<Result<_, _>>()?;
    for ((f, a), b) in files.iter().zip(&before).zip(&after) {
        ensure(a == b, || format!("{f} differs on rerun"))?;
    }
    let hit = second.cache.hit_rate();
    ensure(hit == 1.0 && second.cache.misses == 0, || format!("rerun cache hit rate {hit}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("first run took {elapsed:?}"))?;
    *summary_ranks = Some((first.report.methods.clone(), first.report.average_rank.clone()));
    Ok(format!("4 files, byte-identical rerun, cache hit rate {hit:.2}, first run {elapsed:.2?}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>| {
        let outcome = outcome.unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    };
    report("feature oracle", catch_unwind(feature_oracle));
    report("feature identities", catch_unwind(feature_identities));
    report("slicing safety", catch_unwind(slicing_safety));
    report("template fidelity", catch_unwind(template_fidelity));
    report("svm oracle", catch_unwind(svm_oracle));
    report("separable sanity", catch_unwind(separable_sanity));
    report("statistics", catch_unwind(statistics));
    let mut ranks = None;
    report("end-to-end determinism", catch_unwind(AssertUnwindSafe(|| end_to_end(&mut ranks))));

    match ranks {
        Some((methods, avg)) => {
            let ts = methods.iter().position(|m| m == "TS").map(|i| avg[i]);
            let best_prompt = methods.iter().zip(&avg).filter(|(m, _)| *m != "TS").map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
            let holds = ts.is_some_and(|t| t < best_prompt);
            println!(
                "INFO  directional check (logged, not asserted): TS rank {:?} vs best prompt rank {best_prompt:.3}: {}",
                ts,
                if holds { "TS ahead" } else { "TS not ahead" }
            );
        }
        None => println!("INFO  directional check (logged, not asserted): skipped, end-to-end run failed"),
    }

    println!("acceptance: {} failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
