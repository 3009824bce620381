use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use surfgauge::io::{config_to_toml, parse_config_with, run_experiment, verify_suite, write_verify_report};
use surfgauge::suite::Selector;
use surfgauge::{build_geometry, ParameterGrid, SurfacePatch};

#[derive(Parser)]
#[command(name = "surfgauge", version, about = "Gauge-consistent gradient flows of surface energies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the flat-torus flow and write CSV/JSON outputs.
    Run(RunArgs),
    /// Run finite-difference oracle suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print curvature tables for the flat, sphere and graph patches.
    DemoGeometry {
        #[arg(long, default_value_t = 32)]
        n: usize,
    },
    /// Print the effective configuration as TOML.
    ShowConfig(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Geometry,
    Deformation,
    Energy,
    Appendix,
    All,
}

impl From<Suite> for Selector {
    fn from(s: Suite) -> Self {
        match s {
            Suite::Geometry => Selector::Geometry,
            Suite::Deformation => Selector::Deformation,
            Suite::Energy => Selector::Energy,
            Suite::Appendix => Selector::Appendix,
            Suite::All => Selector::All,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    gauge: Option<String>,
    #[arg(long)]
    timederiv: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    allow_inconsistent: bool,
    /// Any config key, e.g. `initial_condition.amplitude=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> surfgauge::Result<surfgauge::flow::FlowConfig> {
        let text = match &self.config {
            Some(p) => fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut o = Vec::new();
        if let Some(g) = &self.gauge {
            o.push(format!("gauge=\"{g}\""));
        }
        if let Some(g) = &self.timederiv {
            o.push(format!("timederiv=\"{g}\""));
        }
        let nums = [
            ("h", self.h),
            ("K", self.k),
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("t_end", self.t_end),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                o.push(format!("{k}={v:?}"));
            }
        }
        if let Some(n) = self.n {
            o.push(format!("n={n}"));
        }
        if self.allow_inconsistent {
            o.push("allow_inconsistent=true".into());
        }
        o.extend(self.set.iter().cloned());
        parse_config_with(&text, &o)
    }
}

fn run_cmd(args: &RunArgs) -> surfgauge::Result<bool> {
    let cfg = args.config()?;
    let out = run_experiment(&cfg, &args.out)?;
    let last = out.trajectory.records.last().expect("initial record");
    println!(
        "{} / {}: {} steps to t = {}, U = {:.6e} (U0 = {:.6e})",
        cfg.gauge.name(),
        cfg.timederiv.name(),
        out.trajectory.accepted_steps(),
        last.t,
        last.u_total,
        out.trajectory.records[0].u_total
    );
    let d = &out.dissipation;
    println!(
        "max energy increment {:.3e}, max rate residual {:.3e}, cross-term max {:.3e}",
        d.max_increase, d.max_residual, d.max_abs_cross
    );
    println!("outputs in {}", out.dir.display());
    if d.consistent && !d.dissipative() {
        eprintln!("energy increased in {} steps", d.increasing_steps.len());
        return Ok(false);
    }
    Ok(true)
}

fn verify_cmd(suite: Suite, out: Option<PathBuf>) -> surfgauge::Result<bool> {
    let report = verify_suite(suite.into())?;
    for r in &report.reports {
        println!("{r}");
    }
    let failed = report.reports.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", report.reports.len(), failed);
    if let Some(p) = out {
        write_verify_report(&p, &report)?;
    }
    Ok(report.passed)
}

fn demo_geometry(n: usize) -> surfgauge::Result<()> {
    let grid = ParameterGrid::periodic(n, n, 1.0, 1.0)?;
    let patches = [
        ("flat", SurfacePatch::flat(&grid)),
        ("sphere", SurfacePatch::sphere(&SurfacePatch::sphere_grid(n, n, 0.3)?)),
        ("graph", SurfacePatch::graph(&grid, 0.3)),
    ];
    println!(
        "{:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "patch", "min H", "max H", "min K", "max K", "min det g", "area"
    );
    for (name, patch) in patches {
        let geo = build_geometry(&patch)?;
        let range = |v: &[f64]| {
            v.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
        };
        let (h0, h1) = range(&geo.mean_curvature);
        let (k0, k1) = range(&geo.gauss_curvature);
        let det: Vec<f64> = geo.g.iter().map(|g| g.determinant()).collect();
        println!(
            "{name:<8} {h0:>12.6} {h1:>12.6} {k0:>12.6} {k1:>12.6} {:>12.6} {:>12.6}",
            range(&det).0,
            geo.area()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => run_cmd(&args),
        Cmd::Verify { suite, out } => verify_cmd(suite, out),
        Cmd::DemoGeometry { n } => demo_geometry(n).map(|_| true),
        Cmd::ShowConfig(args) => args.config().and_then(|c| config_to_toml(&c)).map(|t| {
            print!("{t}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
