use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plenoptic::harness::{gain_sweep, render_frame, run, RunConfig};
use plenoptic::trajectory::validate_assumptions;

#[derive(Parser)]
#[command(name = "plenoptic", version, about = "Plenoptic camera simulation and depth observer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of frames (overrides `observer.frames`).
    #[arg(long)]
    frames: Option<usize>,
    /// Observer gain (overrides `observer.gain`).
    #[arg(long)]
    gain: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the render/observe loop and write metrics and clouds.
    Run(Common),
    /// Run once per gain in `observer.gains` (or the single `--gain`).
    Sweep(Common),
    /// Check the scenario assumptions and print the report.
    Validate(Common),
    /// Render one light-field frame of the trajectory to PNG.
    RenderFrame {
        #[command(flatten)]
        common: Common,
        /// Frame index along the trajectory.
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn load(c: &Common) -> plenoptic::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = c.frames {
        cfg.observer.frames = f;
    }
    if let Some(g) = c.gain {
        cfg.observer.gain = g;
        cfg.observer.gains = vec![g];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command) -> plenoptic::Result<()> {
    match cmd {
        Command::Run(c) => {
            let cfg = load(&c)?;
            let o = run(&cfg, Some(&cfg.output.dir))?;
            let m = &o.metrics;
            println!("gain {}", o.gain);
            println!("initial total squared error {:.6e} m^2", m.initial_sq_error);
            println!("final total squared error   {:.6e} m^2", m.final_sq_error());
            if m.initial_sq_error > 0.0 {
                println!("ratio {:.4}", m.final_sq_error() / m.initial_sq_error);
            }
            println!("median updates per point {}", o.median_updates());
            println!(
                "cone containment: {} tracked, {} violations in {} samples",
                o.containment.tracked, o.containment.violations, o.containment.samples
            );
            println!(
                "surface crossings: {} points, max overshoot {:.3e} m, max step {:.3e} m{}",
                o.containment.crossed_surface,
                o.containment.max_overshoot_m,
                o.containment.max_step_m,
                if o.containment.overshoot_flag() { " (gain too large?)" } else { "" }
            );
            println!("outputs in {}", cfg.output.dir.display());
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let entries = gain_sweep(&cfg, &cfg.observer.gains, Some(&cfg.output.dir))?;
            println!("gain,final_ratio,diverged,median_updates");
            for e in &entries {
                println!("{},{:.6},{},{}", e.gain, e.final_sq_error / e.initial_sq_error, e.diverged, e.median_updates);
            }
            println!("outputs in {}", cfg.output.dir.display());
        }
        Command::Validate(c) => {
            let cfg = load(&c)?;
            let sc = cfg.build()?;
            let rep = validate_assumptions(&sc.path, &sc.camera, &sc.scene, &sc.initial, cfg.observer.frames)?;
            rep.write_text(std::io::stdout().lock())?;
            if !rep.geometric_ok() {
                return Err(plenoptic::Error::Config("scenario assumptions not met".into()));
            }
        }
        Command::RenderFrame { common, frame } => {
            let cfg = load(&common)?;
            let path = render_frame(&cfg, frame, &cfg.output.dir)?;
            println!("{}", path.display());
        }
        Command::DefaultConfig => {
            print!("{}", RunConfig::default().to_toml_string()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
