use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regp::{Dataset, FitConfig, GridKind, RelaxationSet, ScoreRange};
use regp_bench::functions::goldstein_price;
use regp_bench::report::{
    fit_report, load_model, parse_score_range, read_data_csv, save_model, score_report, RelaxationChoice,
};

fn gp_sample(n: usize, seed: u64) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
    let values = pts.iter().map(|p| goldstein_price(p)).collect();
    Dataset::new(pts, values).unwrap()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

fn spearman(pairs: &[(f64, f64)]) -> f64 {
    let a = ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let b = ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = a.len() as f64;
    let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn data_csv_parsing() {
    let d = read_data_csv("a,b,y\n0,1,2\n0.5,0.25,-1\n".as_bytes()).unwrap();
    assert_eq!((d.len(), d.dim()), (2, 2));
    assert_eq!(d.values(), &[2.0, -1.0]);
    let err = read_data_csv("a,y\n0,1\n1,x\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains("row 3"), "{err}");
    let err = read_data_csv("a,y\n0,1\n1,2,3\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains("3"), "{err}");
}

#[test]
fn empty_relaxation_keeps_values() {
    let data = gp_sample(12, 1);
    let rep = fit_report(&data, &RelaxationChoice::None, &FitConfig::default()).unwrap();
    assert!(rep.values.iter().all(|(z, zr)| z == zr));
}

#[test]
fn large_goldstein_price_values_are_compressed_in_order() {
    let data = gp_sample(30, 2);
    let choice = RelaxationChoice::Fixed(RelaxationSet::above(1e3));
    let rep = fit_report(&data, &choice, &FitConfig::default()).unwrap();
    let big: Vec<(f64, f64)> = rep.values.iter().copied().filter(|(z, _)| *z >= 1e3).collect();
    assert!(big.len() >= 3, "sample has too few large values");
    for &(z, zr) in &big {
        assert!(zr <= z && zr >= 1e3);
    }
    assert!(big.iter().any(|(z, zr)| zr < z));
    let rho = spearman(&big);
    assert!(rho >= 0.6, "rank correlation {rho}");
    for (z, zr) in rep.values.iter().filter(|(z, _)| *z < 1e3) {
        assert_eq!(z, zr);
    }
}

#[test]
fn model_file_round_trip_and_scores() {
    let data = gp_sample(15, 3);
    let mut sorted = data.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t0 = sorted[3];
    let choice = RelaxationChoice::Select { kind: GridKind::OneSidedMin, t0, grid_size: 4 };
    let rep = fit_report(&data, &choice, &FitConfig::default()).unwrap();
    assert_eq!(rep.candidates.len(), 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.toml");
    save_model(&rep.model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back.params(), rep.model.params());
    assert_eq!(back.relaxed_values(), rep.model.relaxed_values());
    assert_eq!(back.relaxation(), rep.model.relaxation());

    let test = gp_sample(5, 4);
    let q = ScoreRange::below(t0);
    let s = score_report(&back, &test, &q).unwrap();
    assert_eq!(s.points.len(), 5);
    assert!(s.points.iter().all(|p| p.tcrps >= 0.0 && p.sd >= 0.0));
    let chosen = rep.chosen.unwrap();
    assert!((s.loo_tcrps - rep.candidates[chosen].loo_tcrps).abs() <= 1e-9 * s.loo_tcrps.max(1.0));
}

#[test]
fn score_ranges() {
    assert_eq!(parse_score_range("all").unwrap(), ScoreRange::real_line());
    assert_eq!(parse_score_range("below:2").unwrap(), ScoreRange::below(2.0));
    assert_eq!(parse_score_range("above:-1").unwrap(), ScoreRange::above(-1.0));
    assert_eq!(parse_score_range("abs-below:0.5").unwrap(), ScoreRange::interval(-0.5, 0.5).unwrap());
    assert_eq!(parse_score_range("1,3").unwrap(), ScoreRange::interval(1.0, 3.0).unwrap());
    assert!(parse_score_range("3,1").is_err());
    assert!(parse_score_range("middle").is_err());
}
