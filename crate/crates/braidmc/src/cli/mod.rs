//! Command-line front end: argument parsing and dispatch. The binary stays
//! thin; everything it does is reachable through this module and the library
//! APIs underneath.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod presets;

pub use commands::CliError;
use config::RunConfig;

const USAGE: &str = "\
braidmc - worldline Monte Carlo with permutation-cycle spectra

USAGE:
  braidmc run (--preset NAME | CONFIG.toml) [--out DIR]
  braidmc analyze SAMPLES.bin [--out DIR] [--threshold P]
  braidmc oracle-compare (--preset NAME | CONFIG.toml) [--out DIR]
  braidmc strtree L (cb | str) [--out DIR]
  braidmc presets list

Environment:
  BRAIDMC_THREADS   cap on replica worker threads
";

fn take_flag(args: &mut Vec<String>, flag: &str) -> Option<String> {
    if let Some(i) = args.iter().position(|a| a == flag) {
        if i + 1 < args.len() {
            let v = args.remove(i + 1);
            args.remove(i);
            return Some(v);
        }
        args.remove(i);
    }
    None
}

fn resolve_config(args: &mut Vec<String>) -> Result<RunConfig, CliError> {
    let preset = take_flag(args, "--preset");
    let out_override = take_flag(args, "--out");
    let mut cfg = match (preset, args.first()) {
        (Some(name), _) => {
            let p = presets::find(&name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset {name:?}; see `braidmc presets list`"
                ))
            })?;
            config::parse_config(p.text)?
        }
        (None, Some(path)) => {
            let path = path.clone();
            args.remove(0);
            config::load_config(&path)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "expected --preset NAME or a config path".into(),
            ))
        }
    };
    if let Some(dir) = out_override {
        cfg.out_dir = dir;
    }
    Ok(cfg)
}

fn dispatch(mut args: Vec<String>) -> Result<(), CliError> {
    let sub = if args.is_empty() {
        return Err(CliError::Usage(USAGE.into()));
    } else {
        args.remove(0)
    };
    match sub.as_str() {
        "run" => {
            let cfg = resolve_config(&mut args)?;
            commands::cmd_run(&cfg)?;
            Ok(())
        }
        "analyze" => {
            let out = take_flag(&mut args, "--out");
            let threshold = take_flag(&mut args, "--threshold")
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("bad threshold {s:?}")))
                })
                .transpose()?
                .unwrap_or(0.01);
            let path = args
                .first()
                .ok_or_else(|| CliError::Usage("analyze needs a samples.bin path".into()))?;
            commands::cmd_analyze(path, out.as_deref(), threshold)
        }
        "oracle-compare" => {
            let cfg = resolve_config(&mut args)?;
            let pass = commands::cmd_oracle_compare(&cfg, Some(cfg.out_dir.as_str()))?;
            if pass {
                Ok(())
            } else {
                Err(CliError::ComparisonFailed(
                    "one or more z-scores exceeded 4".into(),
                ))
            }
        }
        "strtree" => {
            let out = take_flag(&mut args, "--out").unwrap_or_else(|| ".".into());
            if args.len() < 2 {
                return Err(CliError::Usage("strtree needs L and a phase".into()));
            }
            let l: usize = args[0]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad L {:?}", args[0])))?;
            commands::cmd_strtree(l, &args[1], &out)
        }
        "presets" => {
            if args.first().map(String::as_str) == Some("list") {
                print!("{}", commands::presets_listing());
                Ok(())
            } else {
                Err(CliError::Usage("try: braidmc presets list".into()))
            }
        }
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown subcommand {other:?}\n{USAGE}"
        ))),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run_cli<I: IntoIterator<Item = String>>(args: I) -> i32 {
    match dispatch(args.into_iter().collect()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
