//! Command-line front end for the indoor optical wireless simulator.
//!
//! Four subcommands mirror the simulation stages: `channel` dumps the traced
//! multipath channel at one receiver position, `associate` runs the tone
//! protocol's power matrix and gating, `montecarlo` fits the tone-current
//! distributions over seeded receiver positions, and `sweep` evaluates link
//! reports over lines of the communication floor.
//!
//! All outputs are CSV with numeric cells in scientific notation at nine
//! significant digits; identical configurations and seeds reproduce files
//! byte for byte. `OWC_SIM_THREADS` caps the worker count.

mod output;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use output::{num, OutputSet};
use owc_sim::link::{delay_spread, evaluate_positions, mean_delay};
use owc_sim::raytracer::Tracer;
use owc_sim::receiver::ImagingReceiver;
use owc_sim::scene::{build_room_a, build_room_b, schema, Scene};
use owc_sim::scm::{
    bandwidth_3db, build_h, cnr_over_i, decision_probabilities, fit_tone_distributions,
    noise_sigma, optimal_threshold, seeded_floor_positions, Bandwidth, GaussianFit,
    DEFAULT_CNR_I_THRESHOLD_DB, TONE_BPF_BANDWIDTH_HZ,
};
use owc_sim::{associate, Point3};
use std::path::PathBuf;

/// Element sizes for quick desk-scale runs, metres.
const DESK_ELEM: (f64, f64) = (0.25, 0.5);
/// Element sizes for full-resolution reference runs, metres.
const PAPER_ELEM: (f64, f64) = (0.05, 0.20);

#[derive(Parser)]
#[command(
    name = "owc-sim",
    about = "Indoor optical wireless channel, tone-association and link-rate simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scene preset (`room-a`, `room-b`) or a path to a scene file.
    #[arg(long, default_value = "room-a")]
    scene: String,
    /// Surface element size for first-order bounces, metres.
    #[arg(long)]
    elem1: Option<f64>,
    /// Surface element size for second-order bounces, metres.
    #[arg(long)]
    elem2: Option<f64>,
    /// Use the full reference element resolution (0.05 m / 0.20 m); slow.
    #[arg(long)]
    paper_resolution: bool,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the multipath channel at one position: arrival dump, delay
    /// spreads and 3 dB bandwidths per unit.
    Channel {
        #[command(flatten)]
        common: CommonArgs,
        /// Receiver position `x,y` on the communication floor, metres.
        #[arg(long)]
        pos: String,
    },
    /// Received-power matrix, CNR/I and unit-pixel association at one
    /// position.
    Associate {
        #[command(flatten)]
        common: CommonArgs,
        /// Receiver position `x,y` on the communication floor, metres.
        #[arg(long)]
        pos: String,
        /// Gating threshold, dB.
        #[arg(long, default_value_t = DEFAULT_CNR_I_THRESHOLD_DB)]
        threshold_db: f64,
    },
    /// Monte-Carlo tone-current study over seeded receiver positions:
    /// histograms, Gaussian fits, optimal threshold, decision
    /// probabilities and the threshold-vs-spread sweep.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed for the position sampler.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of receiver positions.
        #[arg(long, default_value_t = 1000)]
        positions: usize,
        /// Desired (measured) unit id.
        #[arg(long, default_value_t = 1)]
        desired: usize,
        /// Interfering unit id.
        #[arg(long, default_value_t = 2)]
        interferer: usize,
    },
    /// Link reports over floor lines: per-unit rates and aggregate-rate
    /// heatmap.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep lines `x1,x2,...[:ystep]`; y runs 1 m from each end wall,
        /// stepped by `ystep` (default 0.5 m).
        #[arg(long, conflicts_with = "pos")]
        grid: Option<String>,
        /// Single receiver position `x,y` instead of a grid.
        #[arg(long)]
        pos: Option<String>,
        /// Gating threshold, dB.
        #[arg(long, default_value_t = DEFAULT_CNR_I_THRESHOLD_DB)]
        threshold_db: f64,
    },
}

fn main() {
    if let Ok(threads) = std::env::var("OWC_SIM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Channel { common, pos } => cmd_channel(&common, &pos),
        Command::Associate {
            common,
            pos,
            threshold_db,
        } => cmd_associate(&common, &pos, threshold_db),
        Command::Montecarlo {
            common,
            seed,
            positions,
            desired,
            interferer,
        } => cmd_montecarlo(&common, seed, positions, desired, interferer),
        Command::Sweep {
            common,
            grid,
            pos,
            threshold_db,
        } => cmd_sweep(&common, grid.as_deref(), pos.as_deref(), threshold_db),
    }
}

/// Scene plus the receiver template from any `[receiver]` overrides.
fn load_scene(common: &CommonArgs) -> Result<(Scene, ImagingReceiver)> {
    let (scene, overrides) = match common.scene.as_str() {
        "room-a" => (build_room_a(), schema::ReceiverOverrides::default()),
        "room-b" => (build_room_b(), schema::ReceiverOverrides::default()),
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scene file {path}"))?;
            let doc = schema::parse_document(&text)?;
            (doc.scene, doc.receiver)
        }
    };
    let mut receiver = ImagingReceiver::at(Point3::new(0.0, 0.0, scene.comm_floor_z));
    if let Some(p) = overrides.pos {
        receiver.position = p;
    }
    if let Some((rows, cols)) = overrides.grid {
        receiver.grid.rows = rows;
        receiver.grid.cols = cols;
    }
    if let Some(v) = overrides.eps_r {
        receiver.electrical.eps_r = v;
    }
    if let Some(v) = overrides.load_ohm {
        receiver.electrical.load_ohm = v;
    }
    if let Some(v) = overrides.responsivity {
        receiver.electrical.responsivity = v;
    }
    if let Some(v) = overrides.fov_deg {
        receiver.concentrator.acceptance_half_angle_rad = v.to_radians();
    }
    Ok((scene, receiver))
}

fn element_sizes(common: &CommonArgs) -> (f64, f64) {
    let base = if common.paper_resolution {
        PAPER_ELEM
    } else {
        DESK_ELEM
    };
    (
        common.elem1.unwrap_or(base.0),
        common.elem2.unwrap_or(base.1),
    )
}

fn parse_pos(scene: &Scene, pos: &str) -> Result<Point3> {
    let parts: Vec<&str> = pos.split(',').collect();
    if parts.len() != 2 {
        bail!("--pos expects `x,y`, got `{pos}`");
    }
    let x: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad x in --pos `{pos}`"))?;
    let y: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad y in --pos `{pos}`"))?;
    if !(0.0..=scene.width_m).contains(&x) || !(0.0..=scene.length_m).contains(&y) {
        bail!(
            "position ({x}, {y}) outside the {} m x {} m room",
            scene.width_m,
            scene.length_m
        );
    }
    Ok(Point3::new(x, y, scene.comm_floor_z))
}

fn cmd_channel(common: &CommonArgs, pos: &str) -> Result<()> {
    let (scene, template) = load_scene(common)?;
    let position = parse_pos(&scene, pos)?;
    let (e1, e2) = element_sizes(common);
    let tracer = Tracer::new(&scene, e1, e2);
    let receiver = ImagingReceiver {
        position,
        ..template
    };
    let channel = tracer.channel(&receiver);

    let mut arrivals = String::from("unit,pixel,delay_s,power_w,bounce_order\n");
    let mut spreads = String::from("unit,mean_delay_s,delay_spread_s\n");
    let mut bandwidths = String::from("unit,bandwidth_3db_hz\n");
    for unit in 1..=channel.n_units {
        let list = channel.aperture_arrivals(unit);
        for a in list {
            let px = a.pixel.map(|p| p as i64).unwrap_or(-1);
            arrivals.push_str(&format!(
                "{unit},{px},{},{},{}\n",
                num(a.delay_s),
                num(a.power_w),
                a.bounce
            ));
        }
        let mu = mean_delay(list).map(num).unwrap_or_else(|_| "nan".into());
        let d = delay_spread(list).map(num).unwrap_or_else(|_| "nan".into());
        spreads.push_str(&format!("{unit},{mu},{d}\n"));
        let bw = match bandwidth_3db(list) {
            Ok(Bandwidth::Limited(f)) => num(f),
            Ok(Bandwidth::Flat) => "flat".into(),
            Err(_) => "nan".into(),
        };
        bandwidths.push_str(&format!("{unit},{bw}\n"));
    }

    let mut out = OutputSet::default();
    out.add("arrivals.csv", arrivals);
    out.add("delay_spread.csv", spreads);
    out.add("bandwidth.csv", bandwidths);
    out.write(&common.out)?;
    Ok(())
}

fn cmd_associate(common: &CommonArgs, pos: &str, threshold_db: f64) -> Result<()> {
    let (scene, template) = load_scene(common)?;
    let position = parse_pos(&scene, pos)?;
    let (e1, e2) = element_sizes(common);
    let tracer = Tracer::new(&scene, e1, e2);
    let receiver = ImagingReceiver {
        position,
        ..template
    };
    let channel = tracer.channel(&receiver);
    let h = build_h(&channel);
    let cnr = cnr_over_i(&h, &receiver, &scene.units);
    let assoc = associate(&cnr, h.n_units, threshold_db);

    let header: String = (1..=h.n_units).map(|u| format!(",unit_{u}")).collect();
    let mut h_csv = format!("pixel{header}\n");
    let mut cnr_csv = format!("pixel{header}\n");
    for (px, cnr_row) in cnr.iter().enumerate() {
        h_csv.push_str(&px.to_string());
        cnr_csv.push_str(&px.to_string());
        for u in 1..=h.n_units {
            h_csv.push_str(&format!(",{}", num(h.get(px, u))));
            cnr_csv.push_str(&format!(",{}", num(cnr_row[u - 1])));
        }
        h_csv.push('\n');
        cnr_csv.push('\n');
    }

    let mut assoc_csv = String::from("unit,active,n_serving_pixels,best_pixel,best_cnr_i_db\n");
    for u in 1..=h.n_units {
        let best_px = h.best_pixel(u);
        let best_db = cnr
            .iter()
            .map(|row| row[u - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        assoc_csv.push_str(&format!(
            "{u},{},{},{best_px},{}\n",
            assoc.active[u - 1] as u8,
            assoc.serving[u - 1].len(),
            num(best_db)
        ));
    }

    let mut out = OutputSet::default();
    out.add("h_matrix.csv", h_csv);
    out.add("cnr_i.csv", cnr_csv);
    out.add("association.csv", assoc_csv);
    out.write(&common.out)?;
    Ok(())
}

fn cmd_montecarlo(
    common: &CommonArgs,
    seed: u64,
    positions: usize,
    desired: usize,
    interferer: usize,
) -> Result<()> {
    let (scene, template) = load_scene(common)?;
    if positions == 0 {
        bail!("--positions must be at least 1");
    }
    let n_units = scene.units.len();
    if desired == 0 || desired > n_units || interferer == 0 || interferer > n_units {
        bail!("desired/interferer unit ids must be in 1..={n_units}");
    }
    let (e1, e2) = element_sizes(common);
    let tracer = Tracer::new(&scene, e1, e2);
    let points = seeded_floor_positions(
        scene.width_m,
        scene.length_m,
        scene.comm_floor_z,
        positions,
        seed,
    );
    let (ds, us) = fit_tone_distributions(&tracer, &points, &template, desired, interferer);

    // Sample histograms, rebuilt from the same deterministic draw.
    let samples: Vec<(f64, f64)> = points
        .iter()
        .map(|&p| {
            let rx = ImagingReceiver {
                position: p,
                ..template.clone()
            };
            let mut per_pixel = vec![0.0f64; rx.grid.pixel_count()];
            for a in tracer.trace_unit(desired, &rx) {
                if let Some(px) = a.pixel {
                    per_pixel[px as usize] += a.power_w;
                }
            }
            let (best, best_p) =
                per_pixel
                    .iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                    );
            let mut other = 0.0;
            for a in tracer.trace_unit(interferer, &rx) {
                if a.pixel == Some(best as u16) {
                    other += a.power_w;
                }
            }
            let r = rx.electrical.responsivity;
            (r * best_p, r * other)
        })
        .collect();
    let max_a = samples
        .iter()
        .map(|s| s.0)
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let bins = 40;
    let mut hist = String::from("bin_lo_a,bin_hi_a,count_desired,count_undesired\n");
    for b in 0..bins {
        let lo = max_a * b as f64 / bins as f64;
        let hi = max_a * (b + 1) as f64 / bins as f64;
        let last = b == bins - 1;
        let in_bin = |v: f64| v >= lo && (v < hi || (last && v <= hi));
        let cd = samples.iter().filter(|s| in_bin(s.0)).count();
        let cu = samples.iter().filter(|s| in_bin(s.1)).count();
        hist.push_str(&format!("{},{},{cd},{cu}\n", num(lo), num(hi)));
    }

    let sigma_t = noise_sigma(
        template.grid.pixel_area_m2 * 1e4,
        ds.mean / template.electrical.responsivity,
        template.electrical.responsivity,
        TONE_BPF_BANDWIDTH_HZ,
    )
    .sigma_t;
    let (th, probs) = match optimal_threshold(ds, us, sigma_t) {
        Ok(th) => (
            th,
            Some(decision_probabilities(ds, us, sigma_t, th, n_units)),
        ),
        Err(_) => (f64::NAN, None),
    };

    let low_sample = positions < 100;
    if low_sample {
        eprintln!("warning: only {positions} positions; distribution fits will be noisy");
    }
    let mut report = String::from(
        "m_ds,sigma_ds,m_us,sigma_us,opt_th,p_cds,p_fus,p_cd,p_wd,sigma_t,n_positions,low_sample_warning\n",
    );
    let nanp = owc_sim::scm::DecisionProbabilities {
        p_cds: f64::NAN,
        p_fus: f64::NAN,
        p_cus: f64::NAN,
        p_cd: f64::NAN,
        p_wd: f64::NAN,
    };
    let p = probs.unwrap_or(nanp);
    report.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{positions},{}\n",
        num(ds.mean),
        num(ds.std),
        num(us.mean),
        num(us.std),
        num(th),
        num(p.p_cds),
        num(p.p_fus),
        num(p.p_cd),
        num(p.p_wd),
        num(sigma_t),
        low_sample as u8
    ));

    // Threshold against the desired-tone spread, other parameters held at
    // the fit: the flat half-mean region appears below the noise scale.
    let mut fig7 = String::from("sigma_ds,opt_th\n");
    for k in 0..=28 {
        let sigma = 10f64.powf(-12.0 + k as f64 * 0.25);
        let fit = GaussianFit {
            mean: ds.mean,
            std: sigma,
        };
        if let Ok(t) = optimal_threshold(fit, us, sigma_t) {
            fig7.push_str(&format!("{},{}\n", num(sigma), num(t)));
        }
    }

    let mut out = OutputSet::default();
    out.add("histogram.csv", hist);
    out.add("report.csv", report);
    out.add("threshold_vs_sigma.csv", fig7);
    out.write(&common.out)?;
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    grid: Option<&str>,
    pos: Option<&str>,
    threshold_db: f64,
) -> Result<()> {
    let (scene, template) = load_scene(common)?;
    let positions: Vec<Point3> = match (grid, pos) {
        (Some(spec), None) => parse_grid(&scene, spec)?,
        (None, Some(p)) => vec![parse_pos(&scene, p)?],
        _ => bail!("sweep needs exactly one of --grid or --pos"),
    };
    let (e1, e2) = element_sizes(common);
    let tracer = Tracer::new(&scene, e1, e2);
    let reports = evaluate_positions(&tracer, &template, &positions, threshold_db);

    let mut link =
        String::from("position_x,position_y,unit,active,rate_bps,sinr_db,aggregate_bps\n");
    let mut heatmap = String::from("x,y,aggregate_bps\n");
    for rep in &reports {
        let (x, y) = (rep.position.x, rep.position.y);
        for u in &rep.units {
            link.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                num(x),
                num(y),
                u.unit,
                u.active as u8,
                num(u.rate_bps),
                num(u.sinr_db),
                num(rep.aggregate_bps)
            ));
        }
        link.push_str(&format!(
            "{},{},aggregate,{},{},,{}\n",
            num(x),
            num(y),
            rep.units.iter().filter(|u| u.active).count(),
            num(rep.aggregate_bps),
            num(rep.aggregate_bps)
        ));
        heatmap.push_str(&format!(
            "{},{},{}\n",
            num(x),
            num(y),
            num(rep.aggregate_bps)
        ));
    }

    let mut out = OutputSet::default();
    out.add("linkreport.csv", link);
    out.add("heatmap.csv", heatmap);
    out.write(&common.out)?;
    Ok(())
}

/// Parse `x1,x2,...[:ystep]`; y samples run from 1 m to (length - 1) m in
/// steps of `ystep`, default 0.5 m.
fn parse_grid(scene: &Scene, spec: &str) -> Result<Vec<Point3>> {
    let (xs_part, step_part) = match spec.split_once(':') {
        Some((xs, step)) => (xs, Some(step)),
        None => (spec, None),
    };
    let mut xs = Vec::new();
    for tok in xs_part.split(',') {
        let x: f64 = tok
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad x `{tok}` in --grid"))?;
        if !(0.0..=scene.width_m).contains(&x) {
            bail!("grid line x={x} outside the room width {}", scene.width_m);
        }
        xs.push(x);
    }
    let ystep: f64 = match step_part {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad ystep in --grid"))?,
        None => 0.5,
    };
    if ystep <= 0.0 {
        bail!("ystep must be positive");
    }
    let y_lo = 1.0;
    let y_hi = scene.length_m - 1.0;
    let mut out = Vec::new();
    for &x in &xs {
        let mut y = y_lo;
        while y <= y_hi + 1e-9 {
            out.push(Point3::new(x, y, scene.comm_floor_z));
            y += ystep;
        }
    }
    Ok(out)
}
