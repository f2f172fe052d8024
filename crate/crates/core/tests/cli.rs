use std::path::Path;
use std::process::{Command, Output};

const FIG2: &str = r#"{"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1}"#;

fn forest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forest-sde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn classify_prints_report_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fig2.json", FIG2);
    let out_dir = tmp.path().join("out");
    let out = forest(&["classify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "Sustainable");
    for key in ["sustainability", "decline", "hypothesis1", "hypothesis2", "large_noise"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["sustainability"]["holds"], true);
    assert!(report["sustainability"]["kappa"].is_f64());
    assert!(!out_dir.exists());
}

#[test]
fn figure_seven_writes_path_and_script() {
    let tmp = tempfile::tempdir().unwrap();
    let out = forest(&["figure", "--which", "7", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("fig7_path.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,u,v"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows[0], vec![0.0, 4.0, 3.0]);
    assert_eq!(rows.last().unwrap()[0], 2.0);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let gp = std::fs::read_to_string(tmp.path().join("fig7.gp")).unwrap();
    assert!(gp.contains("fig7_path.csv"));
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let out = forest(&["reforest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (FIG2.replace("\"rho\":5", "\"rho\":-5"), "rho"),
        (FIG2.replace('}', ",\"colour\":1}"), "colour"),
        (FIG2.replace('}', ",\"dt\":-1}"), "dt"),
        (FIG2.replace(",\"v0\":1", ""), "v0"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), text);
        let out = forest(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(key), "{text}");
    }
    let out = forest(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rejected_path_exits_3_with_step() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FIG2
        .replace("\"sigma\":0.5", "\"sigma\":60")
        .replace('}', ",\"clamp\":\"reject-path\",\"dt\":0.1}");
    let cfg = write_config(tmp.path(), "wild.json", &text);
    let out = forest(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn simulate_and_sweep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FIG2.replace(
        '}',
        r#","t_end":1,"sweep":{"axis1":{"param":"h","min":0.5,"max":4,"steps":8},"axis2":{"param":"sigma","min":0.5,"max":0.5,"steps":1}}}"#,
    );
    let cfg = write_config(tmp.path(), "run.json", &text);
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(forest(&["simulate", "--config", &cfg, "--out", dir]).status.code(), Some(0));
    let traj = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1002);

    assert_eq!(forest(&["sweep", "--config", &cfg, "--out", dir]).status.code(), Some(0));
    let sweep = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let verdicts: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(verdicts.len(), 8);
    assert_eq!(verdicts[0], "Sustainable");
    let first_non = verdicts.iter().position(|v| *v != "Sustainable").unwrap();
    assert!(verdicts[first_non..].iter().all(|v| *v != "Sustainable"));
}
