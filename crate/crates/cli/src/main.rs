//! Command-line front end for the inclusion toolbox.
//!
//! Subcommands: `simulate` (integrate a scenario and emit the trajectory
//! CSV), `certify` (grid certification of the decay condition), `contain`
//! (subsystem containment of the switched regularization), `probe`
//! (switching-signal local-finiteness probe), and `repro` (built-in runs
//! with their expected findings asserted).
//!
//! Exit codes: 0 success, 1 analysis-level failure, 2 usage or tool error.

// `!(x > 0.0)` guards must also reject NaN input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use config::RunConfig;

const USAGE: &str = "\
usage: inclusion-lab <subcommand> [flags]

subcommands:
  simulate   integrate a scenario; writes the trajectory CSV
  certify    check the decay condition on a grid (per subsystem and union)
  contain    check switched-regularization containment in the subsystem union
  probe      probe the switching signal for local index finiteness
  repro      run a built-in scenario and assert its expected findings
             (targets: sec4, sec7, sec8ex1, sec8ex2, all)

flags:
  --scenario NAME   sec4_example | sec7_counterexample | sec8_example1 | sec8_example2
  --config FILE     key = value file; explicit flags override it
  --out FILE        CSV (simulate) or JSON summary (other subcommands)
  --dt X            integration step
  --tfinal X        integration horizon
  --grid SPEC       per-axis min:max:count, comma-separated
  --delta X         sampling radius
  --samples N       sample count per estimate
  --tol X           decision tolerance
  --mode M          certify: upper|lower|reduced; contain: krasovskii|filippov
  --seed N          sampling seed (default 0)

environment:
  INCLUSION_LAB_THREADS   worker threads for grid sweeps (0 = auto)

exit codes: 0 success; 1 analysis-level failure; 2 usage or tool error
";

fn run(args: &[String]) -> i32 {
    let Some(subcommand) = args.first() else {
        eprint!("{USAGE}");
        return 2;
    };

    // `repro` takes a positional target before the flags.
    let (repro_target, flag_start) = if subcommand == "repro" {
        match args.get(1) {
            Some(t) if !t.starts_with("--") => (Some(t.clone()), 2),
            _ => {
                eprintln!("repro needs a target: sec4, sec7, sec8ex1, sec8ex2, or all");
                return 2;
            }
        }
    } else {
        (None, 1)
    };

    let cfg = match RunConfig::from_flags(&args[flag_start..]) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            eprint!("{USAGE}");
            return 2;
        }
    };

    let result = match subcommand.as_str() {
        "simulate" => commands::simulate(&cfg),
        "certify" => commands::run_certify(&cfg),
        "contain" => commands::run_contain(&cfg),
        "probe" => commands::run_probe(&cfg),
        "repro" => commands::run_repro(repro_target.as_deref().unwrap_or("all"), &cfg),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            return 0;
        }
        other => {
            eprintln!("unknown subcommand {other:?}");
            eprint!("{USAGE}");
            return 2;
        }
    };

    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run(&args));
}
