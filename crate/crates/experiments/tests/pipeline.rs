use std::path::Path;
use std::process::Command;

use penopt::optim::{IterationRecord, Status};
use penopt::Complex64;
use penopt_experiments::arrays::ArrayFile;
use penopt_experiments::noise::{add_noise, relative_difference};
use penopt_experiments::pipeline::{self, read_data};
use penopt_experiments::records::{parse_records, records_to_csv};
use penopt_experiments::resample::{prolong_model, resample, restrict_model, ModelGrid};
use penopt_experiments::ExperimentConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SMALL: &str = r#"
[model]
kind = "parabolic"
omega = 31.41592653589793
data_grid = [81]
inversion_grid = [41]
[truth]
kind = "gaussian"
[geometry]
sources = [[0.0], [1.0]]
receivers = [[0.0], [1.0]]
[noise]
percent = 10.0
seed = 5
[inversion]
formulation = "penalty"
alpha = 1e-5
initial = { kind = "constant", value = 1.0 }
[optimizer]
max_iter = 15
schedule = [{ lambda = 1.0, max_iter = 5 }, { lambda = 10.0, max_iter = 10 }]
[landscape]
a1 = { min = -0.5, max = 0.5, n = 3 }
a2 = { min = -0.5, max = 0.5, n = 3 }
lambdas = [1.0]
[spectra]
n = 11
receivers = [1, 2]
lambdas = [1.0]
"#;

fn config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL, &[format!("output.dir={:?}", dir.display().to_string())]).unwrap()
}

fn grid2(n: usize) -> ModelGrid {
    let h = 1.0 / (n - 1) as f64;
    ModelGrid::new(vec![n, n], vec![0.0, 0.0], vec![h, h]).unwrap()
}

/// Bilinear interpolation written out directly for nested node grids.
fn bilinear_oracle(v: &[f64], n: usize, x: f64, y: f64) -> f64 {
    let h = 1.0 / (n - 1) as f64;
    let (i, j) = (((x / h).floor() as usize).min(n - 2), ((y / h).floor() as usize).min(n - 2));
    let (s, t) = (x / h - i as f64, y / h - j as f64);
    let at = |a: usize, b: usize| v[a + n * b];
    at(i, j) * (1.0 - s) * (1.0 - t) + at(i + 1, j) * s * (1.0 - t) + at(i, j + 1) * (1.0 - s) * t + at(i + 1, j + 1) * s * t
}

#[test]
fn random_field_transfer_matches_bilinear_oracle() {
    let (fine, coarse) = (grid2(101), grid2(51));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f: Vec<f64> = (0..fine.len()).map(|_| rng.random_range(0.5..2.0)).collect();
    // nested grids: restriction is injection at every other node
    let r = restrict_model(&f, &fine, &coarse).unwrap();
    for (k, v) in r.iter().enumerate() {
        let (i, j) = (k % 51, k / 51);
        assert!((v - f[2 * i + 101 * 2 * j]).abs() <= 1e-14);
    }
    let back = prolong_model(&r, &coarse, &fine).unwrap();
    for (k, v) in back.iter().enumerate() {
        let (x, y) = ((k % 101) as f64 / 100.0, (k / 101) as f64 / 100.0);
        assert!((v - bilinear_oracle(&r, 51, x, y)).abs() <= 1e-13);
    }
}

#[test]
fn noise_level_and_seed() {
    let d: Vec<Vec<Complex64>> = (0..3).map(|k| (0..7).map(|i| Complex64::new(k as f64 + 1.0, i as f64 - 2.0)).collect()).collect();
    let a = add_noise(&d, 10.0, 42);
    assert!((relative_difference(&a, &d) - 0.1).abs() <= 1e-12);
    assert_eq!(a, add_noise(&d, 10.0, 42));
    assert_ne!(a, add_noise(&d, 10.0, 43));
}

#[test]
fn library_pipeline_writes_consistent_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let g = pipeline::cmd_generate(&cfg).unwrap();
    let d = read_data(&tmp.path().join("data.bin")).unwrap();
    assert_eq!(d, g.data);
    assert!((relative_difference(&g.data, &g.data_clean) - 0.1).abs() < 1e-12);
    let inv = pipeline::cmd_invert(&cfg).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("records.csv")).unwrap();
    let recs = parse_records(&text).unwrap();
    assert_eq!(recs, inv.run.records);
    assert!(penopt::optim::reconcile_solves(&recs));
    let m = ArrayFile::read(&tmp.path().join("model.bin")).unwrap().into_real().unwrap();
    assert_eq!(m, inv.run.m);
    let summary = std::fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("status"));
    assert_eq!(pipeline::cmd_landscape(&cfg).unwrap().len(), 2);
    assert_eq!(pipeline::cmd_spectra(&cfg).unwrap().len(), 4);
    let r = pipeline::cmd_report(&cfg).unwrap();
    assert!(r.bound.is_finite() && r.kappa >= 1.0);
}

#[test]
fn cli_rejects_noise_without_seed_and_runs_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("c.toml");
    std::fs::write(&cfg_path, SMALL.replace("seed = 5\n", "")).unwrap();
    let exe = env!("CARGO_BIN_EXE_penopt");
    let out = tmp.path().join("o");
    let fail = Command::new(exe).args(["generate", "-c"]).arg(&cfg_path).arg("-o").arg(&out).output().unwrap();
    assert!(!fail.status.success());
    let ok = Command::new(exe).args(["generate", "-c"]).arg(&cfg_path).args(["--seed", "9", "-o"]).arg(&out).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("data.bin").exists() && out.join("truth.bin").exists());
    let bad_key = Command::new(exe).args(["spectra", "-c"]).arg(&cfg_path).args(["--set", "spectra.bogus=1", "-o"]).arg(&out).output().unwrap();
    assert!(!bad_key.status.success());
}

fn record(k: usize, vals: &[f64], lambda: Option<f64>, solves: (usize, usize, usize)) -> IterationRecord {
    IterationRecord {
        k,
        lambda,
        value: vals[0],
        norm_lm: vals[1],
        norm_lu: vals[2],
        norm_lv: vals[3],
        data_misfit: vals[4],
        pde_misfit: vals[5],
        model_error: if k.is_multiple_of(2) { Some(vals[6]) } else { None },
        step: vals[7],
        pde_solves: solves.0 + solves.1 * solves.2,
        status: [Status::Running, Status::Converged, Status::MaxIterations, Status::LineSearchFailed][k % 4],
        eval_solves: solves.0,
        cg_iterations: solves.1,
        hvp_solves: solves.2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_round_trip(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 8), k in 0usize..1000, lambda in prop::option::of(1e-10f64..1e10), s in (0usize..50, 0usize..200, 0usize..8)) {
        let r = record(k, &vals, lambda, s);
        let back = parse_records(&records_to_csv(std::slice::from_ref(&r))).unwrap();
        prop_assert_eq!(back, vec![r]);
    }

    #[test]
    fn real_arrays_round_trip(n1 in 2usize..6, n2 in 2usize..6, data in prop::collection::vec(-1e6f64..1e6, 36)) {
        let a = ArrayFile::real(vec![n1, n2], vec![0.1, 0.2], vec![-1.0, 3.0], data[..n1 * n2].to_vec());
        prop_assert_eq!(ArrayFile::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    #[test]
    fn complex_arrays_round_trip(re in prop::collection::vec(-1.0f64..1.0, 1..20), im in -5.0f64..5.0) {
        let data: Vec<Complex64> = re.iter().map(|r| Complex64::new(*r, im * r)).collect();
        let a = ArrayFile::complex(vec![data.len()], data);
        prop_assert_eq!(ArrayFile::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    #[test]
    fn resampling_preserves_affine_fields(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, nf in 5usize..30, nc in 3usize..15) {
        let (fine, coarse) = (grid2(nf), grid2(nc));
        let f: Vec<f64> = fine.points().iter().map(|x| a + b * x[0] + c * x[1]).collect();
        let r = resample(&f, &fine, &coarse).unwrap();
        for (x, v) in coarse.points().iter().zip(&r) {
            prop_assert!((v - (a + b * x[0] + c * x[1])).abs() <= 1e-12);
        }
    }

    #[test]
    fn resampling_stays_within_range(vals in prop::collection::vec(0.1f64..3.0, 49), nc in 2usize..20) {
        let from = grid2(7);
        let r = resample(&vals, &from, &grid2(nc)).unwrap();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        prop_assert!(r.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }
}
