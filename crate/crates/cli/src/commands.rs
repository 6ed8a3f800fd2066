use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fpptess::ergodic::ball_growth_series;
use fpptess::geometry::{sample_unit_sphere, sphere_covering};
use fpptess::hyperplane::{poisson_tail as tail_report, sample_pht, TailSide};
use fpptess::pht_fpp::{deviation_experiment, direction_sweep, limit_shape, TimeConstantModel};
use fpptess::rng::{derive_seed, stream};
use fpptess::tameness::{compute_fields, compute_w_pht, compute_w_voronoi, greedy_animal_max, GridField};
use fpptess::tess_fpp::{assign_marks, time_constant_estimate};
use fpptess::voronoi::{sample_voronoi, MARGIN_FACTOR};
use fpptess::{DirectionalDistribution, MarkDistribution};
use serde::Serialize;
use serde_json::json;

use crate::output::{commit, direction_columns, render, Header, Table, Val};
use crate::svg::shape_svg;
use crate::{CliError, Global};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Hyperplane intensity.
    #[arg(long, default_value_t = PI)]
    pub gamma: f64,
    /// Directional law: `isotropic`, `isotropic:<d>`, `atoms:ux,uy:w;...` or `mixture:w*<spec>|...`.
    #[arg(long, default_value = "isotropic")]
    pub phi: String,
    /// Mark law: `det:c`, `exp:rate`, `unif:a,b` or `zeromix:p0,<law>`.
    #[arg(long, default_value = "det:1")]
    pub marks: String,
}

impl ModelArgs {
    fn model(&self) -> Result<TimeConstantModel, CliError> {
        Ok(TimeConstantModel::new(self.gamma, parse_phi(&self.phi)?, parse_marks(&self.marks)?)?)
    }
}

fn parse_phi(s: &str) -> Result<DirectionalDistribution, CliError> {
    Ok(s.parse()?)
}

fn parse_marks(s: &str) -> Result<MarkDistribution, CliError> {
    Ok(s.parse()?)
}

/// Writes the table (to `out` or stdout) plus any extra files, atomically.
/// Summary lines go to stdout when the table goes to a file, else to stderr.
fn emit(
    command: &'static str,
    args: &impl Serialize,
    g: &Global,
    table: &Table,
    out: Option<&PathBuf>,
    extra: Vec<(PathBuf, Vec<u8>)>,
    summary: &[String],
) -> Result<(), CliError> {
    let config = json!({ "seed": g.seed, "format": g.format, "args": args });
    let header = Header::new(command, config, !g.no_timestamp);
    let bytes = render(table, &header, g.format);
    let mut files = extra;
    match out {
        Some(path) => {
            files.insert(0, (path.clone(), bytes));
            commit(files)?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            commit(files)?;
            std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?;
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhtShape {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of boundary directions.
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render the planar shape as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn pht_shape(a: &PhtShape, g: &Global) -> Result<(), CliError> {
    let model = a.model.model()?;
    let shape = limit_shape(&model, a.dirs)?;
    let d = model.dim();
    let mut cols = direction_columns(d);
    cols.push("radius".into());
    let mut table = Table::new(cols);
    for (u, r) in &shape.boundary {
        let mut row: Vec<Val> = u.iter().map(|&c| c.into()).collect();
        row.push((*r).into());
        table.push(row);
    }
    let r_min = shape.radii().fold(f64::INFINITY, f64::min);
    let r_max = shape.radii().fold(0.0, f64::max);
    let (mu_min, mu_max) = (1.0 / r_max, 1.0 / r_min);
    let mut extra = Vec::new();
    if let Some(path) = &a.svg {
        if d != 2 {
            return Err(CliError::Config(format!("SVG output needs a planar model, got dimension {d}")));
        }
        let mut pts: Vec<[f64; 2]> = shape.boundary_points().into_iter().map(|p| [p[0], p[1]]).collect();
        pts.sort_by(|p, q| p[1].atan2(p[0]).total_cmp(&q[1].atan2(q[0])));
        let title = format!("limit shape, phi {}, marks {}", a.model.phi, a.model.marks);
        extra.push((path.clone(), shape_svg(&pts, mu_min, mu_max, &title)?));
    }
    let summary = vec![format!(
        "{} directions: radius in [{r_min:.6}, {r_max:.6}], mu in [{mu_min:.6}, {mu_max:.6}]",
        shape.n_dirs
    )];
    emit("pht-shape", a, g, &table, a.out.as_ref(), extra, &summary)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhtSweep {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub r: f64,
    #[arg(long, default_value_t = 16)]
    pub dirs: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn pht_sweep(a: &PhtSweep, g: &Global) -> Result<(), CliError> {
    let model = a.model.model()?;
    let rows = direction_sweep(&model, a.r, a.dirs, a.reps, g.seed)?;
    let mut cols = direction_columns(model.dim());
    cols.extend(["r", "mean_tau_over_r", "stderr", "mu"].map(String::from));
    let mut table = Table::new(cols);
    let mut worst: f64 = 0.0;
    for row in &rows {
        let mut vals: Vec<Val> = row.u.iter().map(|&c| c.into()).collect();
        vals.extend([row.r.into(), row.mean_tau_over_r.into(), row.stderr.into(), row.mu.into()]);
        table.push(vals);
        if row.stderr > 0.0 {
            worst = worst.max((row.mean_tau_over_r - row.mu).abs() / row.stderr);
        }
    }
    let summary = vec![format!("{} directions at r={}: max |mean - mu| / stderr = {worst:.3}", rows.len(), a.r)];
    emit("pht-sweep", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhtDeviation {
    #[arg(long, default_value_t = PI)]
    pub gamma: f64,
    #[arg(long, default_value = "isotropic")]
    pub phi: String,
    #[arg(long = "r-list", value_delimiter = ',', default_value = "20,40,80")]
    pub r_list: Vec<f64>,
    #[arg(long = "eps-list", value_delimiter = ',', default_value = "0.5")]
    pub eps_list: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn pht_deviation(a: &PhtDeviation, g: &Global) -> Result<(), CliError> {
    let model = TimeConstantModel::new(a.gamma, parse_phi(&a.phi)?, MarkDistribution::Deterministic(1.0))?;
    let t = deviation_experiment(&model, &a.r_list, &a.eps_list, a.reps, g.seed)?;
    let mut table = Table::new(["r", "eps", "n_reps", "exceed_prob", "reference_decay"]);
    let mut summary = vec![format!("max mu over the grid: {:.6}", t.max_mu)];
    for row in &t.rows {
        table.push(vec![
            row.r.into(),
            row.eps.into(),
            row.n_reps.into(),
            row.exceed_prob.into(),
            row.reference_decay.into(),
        ]);
        summary.push(format!(
            "r={} eps={}: exceed {:.4}, reference {:.4}, grid delta {:.3e} ({} directions)",
            row.r, row.eps, row.exceed_prob, row.reference_decay, row.grid_delta, row.grid_size
        ));
    }
    emit("pht-deviation", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PoissonTail {
    /// Poisson means (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// Deviations from the mean (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.5}")
    } else {
        format!("{v:.5e}")
    }
}

pub fn poisson_tail(a: &PoissonTail, g: &Global) -> Result<(), CliError> {
    let sides: &[TailSide] = match a.side {
        SideArg::Lower => &[TailSide::Lower],
        SideArg::Upper => &[TailSide::Upper],
        SideArg::Both => &[TailSide::Lower, TailSide::Upper],
    };
    let mut table = Table::new(["lambda", "x", "side", "exact", "gaussian_bound", "chernoff_bound", "violation"]);
    let mut lines = Vec::new();
    for &lambda in &a.lambda {
        for &x in &a.x {
            for &side in sides {
                let t = tail_report(lambda, x, side)?;
                let name = match side {
                    TailSide::Lower => "lower",
                    TailSide::Upper => "upper",
                };
                lines.push(format!(
                    "lambda={lambda} x={x} side={name} exact={} paper={} chernoff={} VIOLATION={}",
                    short(t.exact),
                    short(t.gaussian_bound),
                    short(t.chernoff_bound),
                    t.violation()
                ));
                table.push(vec![
                    lambda.into(),
                    x.into(),
                    name.into(),
                    t.exact.into(),
                    t.gaussian_bound.into(),
                    t.chernoff_bound.into(),
                    t.violation().into(),
                ]);
            }
        }
    }
    match &a.out {
        Some(path) => emit("poisson-tail", a, g, &table, Some(path), Vec::new(), &lines),
        None => {
            for line in lines {
                println!("{line}");
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VoronoiErgodic {
    /// Generator intensity.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Largest graph-ball radius.
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn voronoi_ergodic(a: &VoronoiErgodic, g: &Global) -> Result<(), CliError> {
    let series = ball_growth_series(a.lambda, a.n, a.seeds, g.seed)?;
    let mut table = Table::new([
        "lambda",
        "n",
        "seed",
        "ball_size",
        "ball_area",
        "avg_area",
        "avg_perimeter",
        "avg_neighbors",
        "censored",
    ]);
    for r in &series.rows {
        table.push(vec![
            r.lambda.into(),
            r.n.into(),
            r.seed.into(),
            r.ball_size.into(),
            r.ball_area.into(),
            r.avg_area.into(),
            r.avg_perimeter.into(),
            r.avg_neighbors.into(),
            r.censored.into(),
        ]);
    }
    let ratio = series.size_area_ratio(a.n);
    let area = series.mean_of(a.n, |r| r.avg_area);
    let nbrs = series.mean_of(a.n, |r| r.avg_neighbors);
    let (size_n2, area_n2) = series.normalized(a.n);
    let summary = vec![
        format!(
            "n={}: size/area ratio {:.4} +- {:.4} (ratio / lambda = {:.4}), censored {} of {}",
            a.n,
            ratio.mean,
            ratio.stderr,
            ratio.mean / a.lambda,
            series.censored_count(a.n),
            a.seeds
        ),
        format!("n={}: ball average area {:.4} +- {:.4}, neighbors {:.4} +- {:.4}", a.n, area.mean, area.stderr, nbrs.mean, nbrs.stderr),
        format!("n={}: |B_n| / n^2 = {size_n2:.4}, area(B_n) / n^2 = {area_n2:.4}", a.n),
    ];
    emit("voronoi-ergodic", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VoronoiTimeconst {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "exp:1")]
    pub marks: String,
    /// Number of directions, evenly spaced over a half turn starting at (1, 0).
    #[arg(long, default_value_t = 1)]
    pub dirs: usize,
    #[arg(long = "r-list", value_delimiter = ',', default_value = "10,20,40")]
    pub r_list: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn voronoi_timeconst(a: &VoronoiTimeconst, g: &Global) -> Result<(), CliError> {
    if a.dirs == 0 {
        return Err(CliError::Config("--dirs must be at least 1".into()));
    }
    let marks = parse_marks(&a.marks)?;
    let mut table = Table::new(["lambda", "mark_spec", "ux", "uy", "r", "mean", "stderr", "n_censored"]);
    let mut summary = Vec::new();
    for k in 0..a.dirs {
        let angle = PI * k as f64 / a.dirs as f64;
        let u = [angle.cos(), angle.sin()];
        let est = time_constant_estimate(a.lambda, &marks, u, &a.r_list, a.reps, derive_seed(g.seed, k as u64))?;
        for row in &est.rows {
            table.push(vec![
                est.lambda.into(),
                est.mark_spec.clone().into(),
                u[0].into(),
                u[1].into(),
                row.r.into(),
                row.mean.into(),
                row.stderr.into(),
                row.n_censored.into(),
            ]);
        }
        let last = est.rows.last().expect("at least one radius");
        summary.push(format!("u=({:.4}, {:.4}): tau/r at r={} is {:.4} +- {:.4}", u[0], u[1], last.r, last.mean, last.stderr));
        for (r, gap, se) in est.subadditivity_gaps() {
            summary.push(format!("  E tau(2ru) - 2 E tau(ru) at r={r}: {gap:.4} +- {se:.4}"));
        }
    }
    emit("voronoi-timeconst", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TameModel {
    Voronoi,
    Pht,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Generator counts per box.
    Y,
    /// Cells spanning the surrounding block.
    U,
    /// Cheap escapes from the surrounding block.
    W,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Tameness {
    #[arg(long, value_enum, default_value_t = TameModel::Voronoi)]
    pub model: TameModel,
    #[arg(long, value_enum, default_value_t = FieldKind::U)]
    pub field: FieldKind,
    /// Voronoi generator intensity.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Hyperplane intensity.
    #[arg(long, default_value_t = PI)]
    pub gamma: f64,
    #[arg(long, default_value = "isotropic")]
    pub phi: String,
    #[arg(long, default_value = "det:1")]
    pub marks: String,
    /// Grid widths to sweep.
    #[arg(long = "delta-list", value_delimiter = ',', default_value = "1,2,5")]
    pub delta_list: Vec<f64>,
    /// Passage-time threshold for the W field.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long = "n-list", value_delimiter = ',', default_value = "10,25,50")]
    pub n_list: Vec<usize>,
    /// Sites range over {-box..box}^2.
    #[arg(long = "box", default_value_t = 8)]
    pub box_radius: i64,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn tameness(a: &Tameness, g: &Global) -> Result<(), CliError> {
    if a.model == TameModel::Pht && a.field != FieldKind::W {
        return Err(CliError::Config("hyperplane models only support the W field".into()));
    }
    let b = a.box_radius;
    let model_name = format!(
        "{}-{}",
        match a.model {
            TameModel::Voronoi => "voronoi",
            TameModel::Pht => "pht",
        },
        match a.field {
            FieldKind::Y => "y",
            FieldKind::U => "u",
            FieldKind::W => "w",
        }
    );
    let marks = parse_marks(&a.marks)?;
    let mut table = Table::new(["model", "delta", "rho", "n", "greedy_max_avg", "n_restarts", "seed"]);
    let mut summary = Vec::new();
    for (di, &delta) in a.delta_list.iter().enumerate() {
        let s = derive_seed(g.seed, di as u64);
        let reach = delta * (b as f64 + 2.0) * SQRT_2;
        let field: GridField = match a.model {
            TameModel::Voronoi => {
                let r_safe = reach + 1.0 / a.lambda.sqrt();
                let t = sample_voronoi(a.lambda, r_safe + MARGIN_FACTOR / a.lambda.sqrt(), r_safe, s)?;
                match a.field {
                    FieldKind::Y => compute_fields(&t, delta, b)?.0,
                    FieldKind::U => compute_fields(&t, delta, b)?.1,
                    FieldKind::W => compute_w_voronoi(&t, &assign_marks(&t, &marks, s), delta, a.rho, b)?,
                }
            }
            TameModel::Pht => {
                let sample = sample_pht(a.gamma, &parse_phi(&a.phi)?, reach, &marks, s)?;
                compute_w_pht(&sample, delta, a.rho, b)?
            }
        };
        summary.push(format!("delta={delta}: field mean {:.4} over {} sites", field.mean(), field.n_sites()));
        let rho: Val = if a.field == FieldKind::W { a.rho.into() } else { Val::Null };
        for &n in &a.n_list {
            let stat = greedy_animal_max(&field, n, a.restarts, derive_seed(s, n as u64))?;
            summary.push(format!("  n={n}: greedy animal mean {:.4} (lower bound on the maximum)", stat.greedy_max_avg));
            table.push(vec![
                model_name.clone().into(),
                delta.into(),
                rho.clone(),
                n.into(),
                stat.greedy_max_avg.into(),
                stat.n_restarts.into(),
                s.into(),
            ]);
        }
    }
    emit("tameness", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Covering {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Opening: each point p of the sphere has a direction u with <p, u> >= 1 - delta.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Uniform sphere samples used to check coverage.
    #[arg(long, default_value_t = 100_000)]
    pub verify: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn covering(a: &Covering, g: &Global) -> Result<(), CliError> {
    let c = sphere_covering(a.d, a.delta)?;
    let mut table = Table::new(direction_columns(a.d));
    for u in c.directions() {
        table.push(u.iter().map(|&x| x.into()).collect());
    }
    let mut rng = stream(g.seed, 0);
    let uncovered = (0..a.verify).filter(|_| !c.covers(&sample_unit_sphere(a.d, &mut rng))).count();
    let summary = vec![
        format!(
            "d={} delta={}: k={} directions, size bound c1 delta^(1-d) = {:.1} (c1 = {:.3}), volume bound {:.1}",
            a.d,
            a.delta,
            c.k(),
            c.size_bound(),
            c.c1(),
            c.volume_bound()
        ),
        format!("uncovered samples: {uncovered} of {}", a.verify),
    ];
    if uncovered > 0 {
        return Err(CliError::Numeric(format!("{uncovered} sampled directions are not covered")));
    }
    emit("covering", a, g, &table, a.out.as_ref(), Vec::new(), &summary)
}
