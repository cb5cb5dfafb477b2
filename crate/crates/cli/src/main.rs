use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use blockreach::hybrid::{reach, Clustering, ReachConfig, ReachResult, Verdict};
use blockreach::lti::BloatingModel;
use blockreach::models::{build_model, generate_filtered_oscillator, parse_model, Model};
use blockreach::{BlockStructure, Template};

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
enum TemplateArg {
    #[default]
    Box,
    Octagon,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
enum ClusterArg {
    #[default]
    Hull,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
enum BloatingArg {
    Norm,
    #[default]
    Correction,
}

/// Reachability analysis of linear hybrid systems with block-decomposed sets.
#[derive(Debug, Parser)]
#[command(name = "blockreach", version)]
struct Args {
    /// Model file (TOML)
    #[arg(long, conflicts_with = "gen")]
    model: Option<PathBuf>,

    /// Built-in model generator, e.g. `filtered-osc:4`
    #[arg(long)]
    gen: Option<String>,

    /// Time step
    #[arg(long, default_value_t = 0.01)]
    delta: f64,

    /// Time horizon of each flowpipe
    #[arg(long, default_value_t = 2.0)]
    horizon: f64,

    /// Maximum number of discrete jumps
    #[arg(long, default_value_t = 999)]
    jumps: usize,

    /// Block width of the decomposition (1 or 2)
    #[arg(long, default_value_t = 1)]
    blocks: usize,

    /// Template used per block
    #[arg(long, value_enum, default_value_t)]
    template: TemplateArg,

    /// Clustering of discrete successors
    #[arg(long, value_enum, default_value_t)]
    cluster: ClusterArg,

    /// Conservative time-discretization model
    #[arg(long, value_enum, default_value_t)]
    bloating: BloatingArg,

    /// Write the flowpipe bounds of the plotted dimensions as delimited text
    #[arg(long)]
    out: Option<PathBuf>,

    /// Two state dimensions to project onto, e.g. `0,1`
    #[arg(long, value_parser = parse_dims, default_value = "0,1")]
    plot: (usize, usize),

    /// Write an SVG plot of the projected flowpipes
    #[arg(long)]
    plot_out: Option<PathBuf>,

    /// Print run statistics to stderr
    #[arg(long)]
    emit_stats: bool,

    /// Size of the worker thread pool
    #[arg(long)]
    parallel: Option<usize>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated dimensions".into());
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn load_model(args: &Args) -> Result<Model, String> {
    if let Some(path) = &args.model {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        return parse_model(&text).map_err(|e| e.to_string());
    }
    if let Some(gen) = &args.gen {
        let (kind, param) = gen.split_once(':').unwrap_or((gen.as_str(), ""));
        return match kind {
            "filtered-osc" => {
                let k: usize = if param.is_empty() {
                    4
                } else {
                    param.parse().map_err(|e| format!("--gen parameter: {e}"))?
                };
                build_model(&generate_filtered_oscillator(k)).map_err(|e| e.to_string())
            }
            other => Err(format!("unknown generator '{other}'")),
        };
    }
    Err("one of --model or --gen is required".into())
}

fn run(args: &Args) -> Result<(ReachResult, Model), String> {
    // The engine is deterministic end to end, so the seed currently has no
    // observable effect; it is still validated so scripts can rely on it.
    if let Ok(seed) = std::env::var("BLOCKREACH_SEED") {
        seed.parse::<u64>()
            .map_err(|e| format!("BLOCKREACH_SEED: {e}"))?;
    }
    if let Some(n) = args.parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let model = load_model(args)?;
    if !(args.blocks == 1 || args.blocks == 2) {
        return Err("--blocks must be 1 or 2".into());
    }
    if args.delta <= 0.0 || args.horizon <= 0.0 {
        return Err("--delta and --horizon must be positive".into());
    }
    let n = model.automaton.dim;
    let structure = BlockStructure::uniform(n, args.blocks);
    let (d1, d2) = (args.plot.0, args.plot.1);
    if d1 >= n || d2 >= n {
        return Err(format!("--plot dimensions must be below {n}"));
    }
    let config = ReachConfig {
        structure: structure.clone(),
        delta: args.delta,
        horizon: args.horizon,
        max_jumps: args.jumps,
        template: match args.template {
            TemplateArg::Box => Template::Box,
            TemplateArg::Octagon => Template::Octagon,
        },
        clustering: match args.cluster {
            ClusterArg::Hull => Clustering::Hull,
            ClusterArg::None => Clustering::None,
        },
        bloating: match args.bloating {
            BloatingArg::Norm => BloatingModel::NormBased,
            BloatingArg::Correction => BloatingModel::CorrectionHull,
        },
        safe_set: model.safe_set.clone(),
        extra_blocks: vec![structure.block_of_dim(d1), structure.block_of_dim(d2)],
        stop_when_included: false,
    };
    let result = reach(&model.automaton, &model.initial, &config).map_err(|e| e.to_string())?;
    Ok((result, model))
}

/// Per-step bounding boxes of the two plotted dimensions.
struct StepBox {
    pipe: usize,
    location: usize,
    step: usize,
    t_lo: f64,
    t_hi: f64,
    x: (f64, f64),
    y: (f64, f64),
}

fn collect_boxes(result: &ReachResult, d1: usize, d2: usize) -> Vec<StepBox> {
    let mut out = Vec::new();
    for (pipe, (location, fp)) in result.flowpipes.iter().enumerate() {
        let structure = &fp.structure;
        for (step, set) in fp.steps.iter().enumerate() {
            let bounds = |d: usize| -> Option<(f64, f64)> {
                let j = structure.block_of_dim(d);
                let (s, _) = structure.range(j);
                let b = set.blocks[j].box_approximation(structure.width(j)).ok()?;
                Some((b.lo(d - s), b.hi(d - s)))
            };
            let (Some(x), Some(y)) = (bounds(d1), bounds(d2)) else {
                continue;
            };
            let (t_lo, t_hi) = fp.time_interval(step);
            out.push(StepBox {
                pipe,
                location: *location,
                step,
                t_lo,
                t_hi,
                x,
                y,
            });
        }
    }
    out
}

fn write_table(path: &PathBuf, boxes: &[StepBox], d1: usize, d2: usize) -> Result<(), String> {
    let mut text = format!("pipe\tlocation\tstep\tt_lo\tt_hi\tx{d1}_lo\tx{d1}_hi\tx{d2}_lo\tx{d2}_hi\n");
    for b in boxes {
        text.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.9}\t{:.9}\t{:.9}\t{:.9}\n",
            b.pipe, b.location, b.step, b.t_lo, b.t_hi, b.x.0, b.x.1, b.y.0, b.y.1
        ));
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

const PALETTE: [&str; 6] = ["#4878cf", "#6acc65", "#d65f5f", "#b47cc7", "#c4ad66", "#77bedb"];

fn write_svg(
    path: &PathBuf,
    boxes: &[StepBox],
    model: &Model,
    d1: usize,
    d2: usize,
) -> Result<(), String> {
    let (w, h) = (720.0, 540.0);
    let margin = 50.0;
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for b in boxes {
        x_lo = x_lo.min(b.x.0);
        x_hi = x_hi.max(b.x.1);
        y_lo = y_lo.min(b.y.0);
        y_hi = y_hi.max(b.y.1);
    }
    if !x_lo.is_finite() {
        return Err("nothing to plot".into());
    }
    let pad_x = 0.05 * (x_hi - x_lo).max(1e-6);
    let pad_y = 0.05 * (y_hi - y_lo).max(1e-6);
    x_lo -= pad_x;
    x_hi += pad_x;
    y_lo -= pad_y;
    y_hi += pad_y;
    let sx = (w - 2.0 * margin) / (x_hi - x_lo);
    let sy = (h - 2.0 * margin) / (y_hi - y_lo);
    let px = |x: f64| margin + (x - x_lo) * sx;
    let py = |y: f64| h - margin - (y - y_lo) * sy;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    for b in boxes {
        let color = PALETTE[b.location % PALETTE.len()];
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"{color}\" stroke-width=\"0.4\"/>\n",
            px(b.x.0),
            py(b.y.1),
            (b.x.1 - b.x.0) * sx,
            (b.y.1 - b.y.0) * sy,
        ));
    }
    // safety boundary lines where they only involve the plotted dimensions
    if let Some(safe) = &model.safe_set {
        for c in &safe.constraints {
            let involved: Vec<usize> =
                (0..c.normal.len()).filter(|&i| c.normal[i] != 0.0).collect();
            if involved == vec![d2] {
                let y = c.offset / c.normal[d2];
                svg.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"red\" stroke-dasharray=\"6 3\"/>\n",
                    px(x_lo), py(y), px(x_hi), py(y)
                ));
            } else if involved == vec![d1] {
                let x = c.offset / c.normal[d1];
                svg.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"red\" stroke-dasharray=\"6 3\"/>\n",
                    px(x), py(y_lo), px(x), py(y_hi)
                ));
            }
        }
    }
    // axes
    svg.push_str(&format!(
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * margin,
        h - 2.0 * margin
    ));
    for (label, x, y, anchor) in [
        (format!("{x_lo:.2}"), margin, h - margin + 16.0, "middle"),
        (format!("{x_hi:.2}"), w - margin, h - margin + 16.0, "middle"),
        (format!("{y_lo:.2}"), margin - 6.0, h - margin, "end"),
        (format!("{y_hi:.2}"), margin - 6.0, margin + 4.0, "end"),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"{anchor}\">{label}</text>\n"
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">x{d1}</text>\n",
        w / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">x{d2}</text>\n",
        h / 2.0,
        h / 2.0
    ));
    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (result, model) = match run(&args) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let (d1, d2) = args.plot;
    let boxes = collect_boxes(&result, d1, d2);
    if let Some(path) = &args.out {
        if let Err(msg) = write_table(path, &boxes, d1, d2) {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }
    if let Some(path) = &args.plot_out {
        if let Err(msg) = write_svg(path, &boxes, &model, d1, d2) {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }
    if args.emit_stats {
        let s = &result.stats;
        eprintln!(
            "flowpipes={} sets_total={} sets_completed_highdim={} jumps_taken={} fixpoints_hit={}",
            s.flowpipes, s.sets_total, s.sets_completed_highdim, s.jumps_taken, s.fixpoints_hit
        );
        let max_y = boxes.iter().map(|b| b.y.1).fold(f64::NEG_INFINITY, f64::max);
        eprintln!("max_x{d2}={max_y:.6}");
    }
    match result.verdict {
        Verdict::Safe => {
            println!("SAFE ({})", model.name);
            ExitCode::SUCCESS
        }
        Verdict::Unsafe { location, step } => {
            println!(
                "UNSAFE ({}) at location {} step {}",
                model.name,
                model.automaton.locations[location].name,
                step
            );
            ExitCode::from(1)
        }
        Verdict::BoundExhausted => {
            println!("UNKNOWN ({}): jump bound exhausted", model.name);
            ExitCode::from(3)
        }
    }
}
