//! Output formats: the trajectory CSV and the JSON run summary.
//!
//! CSV schema: header `t,x1..xn,V,W,event`, floating point printed with 17
//! significant digits, comma separators, LF line endings. The same
//! configuration and seed reproduce the bytes exactly.

use std::io::Write;

use inclusion_lab::sim::Trajectory;
use serde_json::{json, Value};

/// 17 significant digits: round-trippable f64 text, stable across runs.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(out: &mut W, traj: &Trajectory) -> std::io::Result<()> {
    let dim = traj.states.first().map(|x| x.len()).unwrap_or(0);
    let mut header = String::from("t");
    for i in 1..=dim {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",V,W,event");
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;

    for (k, t) in traj.times.iter().enumerate() {
        let mut line = fmt_float(*t);
        for c in &traj.states[k] {
            line.push(',');
            line.push_str(&fmt_float(*c));
        }
        let v = traj.v_values.get(k).copied().unwrap_or(0.0);
        let w = traj.w_values.get(k).copied().unwrap_or(0.0);
        line.push(',');
        line.push_str(&fmt_float(v));
        line.push(',');
        line.push_str(&fmt_float(w));
        line.push(',');
        // Events are attached to the first sample at or after their time.
        let lo = if k == 0 {
            f64::NEG_INFINITY
        } else {
            traj.times[k - 1]
        };
        let labels: Vec<String> = traj
            .events
            .iter()
            .filter(|(te, _)| *te > lo && *te <= *t)
            .map(|(_, kind)| kind.to_string())
            .collect();
        line.push_str(&labels.join(";"));
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// One verdict line of a run summary.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

pub fn summary_json(
    scenario: &str,
    params: &[(String, f64)],
    verdicts: &[Verdict],
    worst_margin: Option<f64>,
    runtime_s: f64,
) -> Value {
    let params_obj: serde_json::Map<String, Value> =
        params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "scenario": scenario,
        "params": params_obj,
        "verdicts": verdicts
            .iter()
            .map(|v| json!({"name": v.name, "pass": v.pass, "detail": v.detail}))
            .collect::<Vec<Value>>(),
        "worst_margin": worst_margin,
        "runtime_s": runtime_s,
    })
}

pub fn write_summary(path: Option<&std::path::Path>, value: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    match path {
        Some(p) => std::fs::write(p, text + "\n"),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use inclusion_lab::sim::EventKind;

    #[test]
    fn csv_bytes_are_stable() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![1.0, -2.0], vec![0.5, 0.25]],
            velocities: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            v_values: vec![2.5, 0.15625],
            w_values: vec![1.0, 0.25],
            events: vec![(0.25, EventKind::Switch)],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,V,W,event");
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
        assert!(
            lines[1].ends_with(','),
            "no event on the first row: {}",
            lines[1]
        );
        assert!(
            lines[2].ends_with(",switch"),
            "event attached to covering row: {}",
            lines[2]
        );
        assert!(!text.contains('\r'));
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn summary_shape() {
        let v = summary_json(
            "demo",
            &[("k".into(), 1.0)],
            &[Verdict::new("check", true, "ok")],
            Some(-0.25),
            0.01,
        );
        assert_eq!(v["scenario"], "demo");
        assert_eq!(v["params"]["k"], 1.0);
        assert_eq!(v["verdicts"][0]["pass"], true);
        assert_eq!(v["worst_margin"], -0.25);
    }
}
