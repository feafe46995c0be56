use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::{Command, Output};

use jc_discord::analysis::{beat_report, SampledSignal};
use jc_discord::cli::{run_with_model, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
use jc_discord::closed_form::{inversion_beat_form, EvolutionAngles, ThermalWeights};
use jc_discord::oracle::AnalyticModel;

fn jc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jc-discord")).args(args).output().unwrap()
}

fn jc_to(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jc-discord")).args(args).arg("--out").arg(out).output().unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

fn col(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn surface_grid_shape_and_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.csv");
    let o = jc_to(&["surface", "--n", "1", "--lambda0", "0.5", "--tau-max", "30", "--tau-steps", "600", "--theta-steps", "181"], &path);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, "tau,theta,discord");
    assert_eq!(rows.len(), 108_600);
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
    for r in rows.iter().take_while(|r| r[0] == 0.0) {
        assert!(r[2].abs() < 1e-10);
    }
    // θ grid step is π/180: θ + π/2 sits 90 rows further within each τ block
    for block in rows.chunks(181) {
        assert!((block[180][1] - PI).abs() < 1e-15);
        for j in 0..=90 {
            assert!((block[j + 90][2] - block[j][2]).abs() < 1e-12);
        }
    }
}

#[test]
fn dynamics_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dyn.csv");
    let o = jc_to(&["dynamics", "--n", "15", "--tau-max", "30", "--tau-steps", "1500"], &path);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, "tau,delta,theta_star,inversion");
    assert_eq!(rows.len(), 1500);
    for r in &rows {
        assert!(r[1] >= 0.0);
        assert!((r[3] - inversion_beat_form(15, r[0])).abs() < 1e-12);
        assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&r[2]));
    }
}

#[test]
fn slices_at_quarter_and_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let half = dir.path().join("half.csv");
    let quarter = dir.path().join("quarter.csv");
    let zero = dir.path().join("zero.csv");
    for (theta, p) in [(FRAC_PI_2, &half), (FRAC_PI_4, &quarter), (0.0, &zero)] {
        let o = jc_to(&["slice", "--n", "8", "--theta", &theta.to_string()], p);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (header, h) = read_csv(&half);
    assert_eq!(header, "tau,discord");
    let (_, q) = read_csv(&quarter);
    let (_, z) = read_csv(&zero);
    assert_eq!(z[0], vec![0.0, 0.0]);

    let beat = jc_discord::analysis::predicted_beats(8).unwrap().beat_period;
    let diff = h.iter().zip(&q).filter(|(a, _)| a[0] <= beat).map(|(a, b)| (a[1] - b[1]).abs()).fold(0.0, f64::max);
    assert!(diff > 0.01, "{diff}");

    let tau = col(&h, 0);
    let slice = beat_report(&SampledSignal::new(tau.clone(), col(&h, 1)).unwrap()).unwrap();
    let w = ThermalWeights::infinite_temperature();
    let inv: Vec<f64> = tau.iter().map(|&t| jc_discord::closed_form::inversion(&w, &EvolutionAngles::new(8, t).unwrap())).collect();
    let inv = beat_report(&SampledSignal::new(tau, inv).unwrap()).unwrap();
    let ratio = slice.mean_period / inv.mean_period;
    assert!((0.4..=0.6).contains(&ratio), "{ratio}");
}

fn beats_csv(n: &str) -> Vec<(String, Vec<f64>)> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("beats.csv");
    let o = jc_to(&["beats", "--n", n], &path);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("period_ratio.mean") && stdout.contains("period_ratio.beat"));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "signal,mean_period,beat_period,oscillations_per_beat,extrema_count");
    lines
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().to_string(), f.map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

#[test]
fn beats_reports() {
    let rows = beats_csv("15");
    assert_eq!(rows[0].0, "inversion");
    assert!(((rows[0].1[2] - 30.99) / 30.99).abs() <= 0.05);

    let rows = beats_csv("8");
    let want = PI * (3.0 + 8f64.sqrt());
    assert!(((rows[0].1[1] - want) / want).abs() <= 0.05);

    let rows = beats_csv("1");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].0, "delta");
    assert!(rows.iter().all(|r| r.1.iter().all(|v| v.is_finite())));
}

#[test]
fn beats_needs_two_beats() {
    let o = jc(&["beats", "--n", "8", "--tau-max", "20"]);
    assert_eq!(o.status.code(), Some(EXIT_INVALID));
    assert!(!o.stderr.is_empty());
    assert_eq!(jc(&["beats", "--n", "0"]).status.code(), Some(EXIT_INVALID));
}

#[test]
fn predict_output() {
    let value =
        |text: &str, key: &str| -> f64 { text.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap().parse().unwrap() };
    let o = jc(&["predict", "--n", "15"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!((value(&s, "exact.oscillations_per_beat") - 30.99).abs() < 0.005);
    assert_eq!(value(&s, "large_n.oscillations_per_beat"), 30.0);

    let s = String::from_utf8(jc(&["predict", "--n", "100"]).stdout).unwrap();
    let exact = 100.5 + (100.0f64 * 101.0).sqrt();
    assert!((value(&s, "exact.oscillations_per_beat") - exact).abs() < 1e-12);
    assert!((value(&s, "exact_minus_large_n") - 0.998_756_211_208_902_7).abs() < 1e-9);

    let s = String::from_utf8(jc(&["predict", "--n", "1"]).stdout).unwrap();
    assert!((value(&s, "exact.oscillations_per_beat") - 2.9142).abs() < 1e-4);
    assert_eq!(jc(&["predict", "--n", "0"]).status.code(), Some(EXIT_INVALID));
}

#[test]
fn validate_degenerate_photon_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let o = jc_to(&["validate", "--n", "0"], &path);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let kv = std::fs::read_to_string(&path).unwrap();
    assert!(kv.contains("status=PASS"));
    assert!(kv.contains("minimum_discord.max_deviation="));
}

struct CorruptedDiscord;

impl AnalyticModel for CorruptedDiscord {
    fn discord(&self, w: &ThermalWeights, ang: &EvolutionAngles, b: &jc_discord::measurement::MeasurementBasis) -> f64 {
        jc_discord::measurement::discord_printed_formula(w, ang, b)
    }
}

#[test]
fn validate_rejects_corrupted_closed_form() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with_model(&CorruptedDiscord, ["jc-discord", "validate", "--n", "2", "--tau-steps", "8"], &mut out, &mut err);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(String::from_utf8(out).unwrap().contains("FAIL"));
}

#[test]
fn io_and_parameter_errors() {
    let o = jc(&["dynamics", "--n", "1", "--tau-steps", "10", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    assert_eq!(jc(&["dynamics", "--n", "1", "--lambda0", "0.5", "--temp-ratio", "2"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(jc(&["dynamics", "--n", "1", "--lambda0", "2"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(jc(&["dynamics", "--n", "1", "--tau-steps", "1"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(jc(&["dynamics"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(jc(&["surface", "--n", "1", "--tau-max", "0"]).status.code(), Some(EXIT_INVALID));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# dynamics run\nn = 2\nlambda0 = 0.8\ntau-max = 5\ntau_steps = 11\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = jc_to(&["dynamics", "--config", cfg.to_str().unwrap()], &a);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(read_csv(&a).1.len(), 11);
    let o = jc_to(&["dynamics", "--config", cfg.to_str().unwrap(), "--tau-steps", "7", "--temp-ratio", "0"], &b);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let (_, rows) = read_csv(&b);
    assert_eq!(rows.len(), 7);
    // temp-ratio 0 replaces the file's lambda0 with ½, where inversion factorizes
    assert!((rows[3][3] - inversion_beat_form(2, rows[3][0])).abs() < 1e-12);
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let args = ["slice", "--n", "3", "--theta", "0.3", "--tau-steps", "50"];
    jc_to(&args, &path);
    let o = jc(&args);
    assert_eq!(o.stdout, std::fs::read(&path).unwrap());
}

#[test]
fn plots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        &["surface", "--n", "2", "--tau-steps", "40"][..],
        &["dynamics", "--n", "2"],
        &["slice", "--n", "2", "--theta", "1"],
        &["beats", "--n", "2"],
    ] {
        let plot = dir.path().join(format!("{}.svg", cmd[0]));
        let out = dir.path().join(format!("{}.csv", cmd[0]));
        let o = Command::new(env!("CARGO_BIN_EXE_jc-discord")).args(cmd).arg("--out").arg(&out).arg("--plot").arg(&plot).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert!(std::fs::read_to_string(&plot).unwrap().starts_with("<svg"));
    }
    assert_eq!(jc(&["predict", "--n", "3", "--plot", "x.svg"]).status.code(), Some(EXIT_INVALID));
}
