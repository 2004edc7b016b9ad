use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use layoutforge::bench::{self, BenchResult};
use layoutforge::config::{ConfigError, RunConfig};
use layoutforge::dataset::{self, DatasetError};
use layoutforge::drc::{check_metal, check_via_layout, DrcReport};
use layoutforge::experiment::{run_eval, train_method};
use layoutforge::gdsii::{self, GdsError, GdsLibrary};
use layoutforge::geom::{Cell, DbUnit};
use layoutforge::jsonl;
use layoutforge::learning::{read_labeled_csv, LearnError, ScoredDataset, Standardizer};
use layoutforge::metal::{draw_wire_cell, MetalSpec};
use layoutforge::via::{generate_via_cell, ViaSpec};

const LIB_NAME: &str = "LAYOUTFORGE";
/// Cell side used by `bench` without `--full`.
const BENCH_SIDE: DbUnit = 10_000;

#[derive(Parser)]
#[command(name = "layoutforge", version, about = "Rule-driven metal/via layout generation and checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration (a directory of configs for `bench`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full-size cells for `bench`.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a metal grating, write GDSII and check it.
    GenMetal {
        #[command(flatten)]
        common: Common,
        /// Also dump shapes as JSON lines.
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Generate M1, vias and M2, write GDSII and check them.
    GenVia {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Check a GDSII file against the rules in the configuration.
    Drc {
        #[command(flatten)]
        common: Common,
        /// GDSII file to check.
        gds: PathBuf,
    },
    /// Cut labeled clips from a generated metal cell.
    Clips {
        #[command(flatten)]
        common: Common,
    },
    /// Rasterize clips and extract DCT tensors and circle samples.
    Features {
        #[command(flatten)]
        common: Common,
        /// Dataset directory (defaults to --out).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train one model per configured loss on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset directory with tensors, or a `label,feature...` CSV.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Multi-seed train/test table with mean and variance.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Single-threaded generation throughput for every config in a directory.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Timed repetitions per config; the median is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

enum Failure {
    Violations,
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violations => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<GdsError> for Failure {
    fn from(e: GdsError) -> Self {
        match e {
            GdsError::InvalidName(_) | GdsError::InvalidLibName(_) | GdsError::CoordinateRange(_) | GdsError::BadLayer(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Feature(ref f) if !matches!(f, layoutforge::features::FeatureError::Io(_)) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<LearnError> for Failure {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Csv(_) | LearnError::Data(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn io_fail(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let path = c.config.as_ref().ok_or_else(|| Failure::Config("--config is required".into()))?;
    Ok(RunConfig::load(path, c.seed)?)
}

fn out_path(c: &Common, cfg: &RunConfig, fallback: &str) -> PathBuf {
    c.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(fallback))
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_fail(dir))?;
    }
    Ok(())
}

fn write_gds(path: &Path, cell: Cell) -> Result<usize, Failure> {
    ensure_parent(path)?;
    let f = File::create(path).map_err(io_fail(path))?;
    Ok(gdsii::write_gds(&GdsLibrary::new(LIB_NAME, vec![cell]), BufWriter::new(f))?)
}

fn write_jsonl(path: &Path, cell: &Cell) -> Result<(), Failure> {
    ensure_parent(path)?;
    let f = File::create(path).map_err(io_fail(path))?;
    jsonl::write_shapes(cell.shapes(), BufWriter::new(f)).map_err(io_fail(path))
}

fn finish_report(report: &DrcReport) -> Result<(), Failure> {
    print!("{}", report.to_text());
    if report.clean {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn gen_metal(c: &Common, jsonl_out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let spec = cfg.require_metal()?;
    let cell = draw_wire_cell(spec).map_err(|e| Failure::Config(e.to_string()))?;
    let out = out_path(c, &cfg, "metal.gds");
    let bytes = write_gds(&out, cell.clone())?;
    if let Some(p) = jsonl_out {
        write_jsonl(p, &cell)?;
    }
    eprintln!("wrote {} ({} shapes, {bytes} bytes)", out.display(), cell.shapes().len());
    finish_report(&check_metal(&cell, spec))
}

fn gen_via(c: &Common, jsonl_out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let spec = cfg.require_via()?;
    let layout = generate_via_cell(spec).map_err(|e| Failure::Config(e.to_string()))?;
    let merged = Cell::merge("VIA", spec.m1.bbox(), &[&layout.m1, &layout.via, &layout.m2])
        .map_err(|e| Failure::Config(e.to_string()))?;
    let out = out_path(c, &cfg, "via.gds");
    let bytes = write_gds(&out, merged.clone())?;
    if let Some(p) = jsonl_out {
        write_jsonl(p, &merged)?;
    }
    eprintln!("wrote {} ({} shapes, {bytes} bytes)", out.display(), merged.shapes().len());
    let s = layout.stats;
    println!(
        "# candidates={} after_density={} kept={} realized_fraction={:.6}",
        s.candidates, s.after_density, s.after_pitch, s.realized_density
    );
    finish_report(&check_via_layout(&layout.m1, &layout.m2, &layout.via, spec))
}

fn split_layers(cell: &Cell, layers: &[(i16, &str)]) -> Vec<Cell> {
    layers
        .iter()
        .map(|&(l, name)| {
            let shapes = cell.shapes().iter().filter(|s| s.layer == l).copied().collect();
            Cell::new_unchecked(name, cell.bbox(), shapes)
        })
        .collect()
}

fn drc(c: &Common, gds: &Path) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let f = File::open(gds).map_err(io_fail(gds))?;
    let lib = gdsii::read_gds(BufReader::new(f)).map_err(|e| Failure::Io(format!("{}: {e}", gds.display())))?;
    let mut report = DrcReport { clean: true, ..DrcReport::default() };
    for cell in &lib.cells {
        let part = if let Some(spec) = &cfg.via {
            let parts = split_layers(cell, &[(spec.m1.layer, "M1"), (spec.via_layer, "V"), (spec.m2.layer, "M2")]);
            check_via_layout(&parts[0], &parts[2], &parts[1], spec)
        } else {
            check_metal(cell, cfg.require_metal()?)
        };
        report = report.merge(part);
    }
    finish_report(&report)
}

fn dataset_dir(c: &Common, data: Option<&PathBuf>, cfg: &RunConfig) -> PathBuf {
    data.cloned().unwrap_or_else(|| out_path(c, cfg, "dataset"))
}

fn clips(c: &Common) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let spec = cfg.require_metal()?;
    let cell = draw_wire_cell(spec).map_err(|e| Failure::Config(e.to_string()))?;
    let records = dataset::cut_clips(&cell, spec, &cfg.features, cfg.hotspot_gap(spec));
    let dir = out_path(c, &cfg, "dataset");
    dataset::write_dataset(&dir, &cell, &records)?;
    let hot = records.iter().filter(|r| r.label == layoutforge::features::Label::Hotspot).count();
    println!("# clips={} hotspots={hot} dir={}", records.len(), dir.display());
    Ok(())
}

fn features(c: &Common, data: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let dir = dataset_dir(c, data, &cfg);
    let (records, f) = dataset::extract_features(&dir, &cfg.features)?;
    dataset::write_features(&dir, &records, &f)?;
    println!("# tensors={} shape={}x{}x{}", f.tensors.len(), cfg.features.blocks, cfg.features.blocks, cfg.features.keep);
    match &f.selection {
        Some(s) => println!("# selected circles {:?}", s.selected),
        None => println!("# circle selection skipped: dataset has a single class"),
    }
    Ok(())
}

fn load_rows(path: &Path) -> Result<Vec<(bool, Vec<f64>)>, Failure> {
    if path.is_dir() {
        return Ok(dataset::load_labeled_tensors(path)?);
    }
    let f = File::open(path).map_err(io_fail(path))?;
    let d = read_labeled_csv(BufReader::new(f))?;
    Ok(d.positives.into_iter().map(|x| (true, x)).chain(d.negatives.into_iter().map(|x| (false, x))).collect())
}

fn train(c: &Common, data: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let input = dataset_dir(c, data, &cfg);
    let rows = load_rows(&input)?;
    let ds = ScoredDataset::from_labeled(rows);
    let all: Vec<&[f64]> = ds.positives.iter().chain(&ds.negatives).map(Vec::as_slice).collect();
    let z = Standardizer::fit(&all);
    let ds = z.apply_all(&ds);
    let out = match &c.out {
        Some(o) => o.clone(),
        None if input.is_dir() => input.clone(),
        None => PathBuf::from("train"),
    };
    fs::create_dir_all(&out).map_err(io_fail(&out))?;
    let seed = c.seed.unwrap_or(cfg.train.seeds[0]);
    for method in cfg.train.methods()? {
        let (model, log) = train_method(&ds, &method, &cfg.train.train_config(seed))?;
        let name = method.name();
        let mpath = out.join(format!("model_{name}.json"));
        let saved = serde_json::json!({ "method": name, "standardizer": z, "model": model });
        fs::write(&mpath, saved.to_string() + "\n").map_err(io_fail(&mpath))?;
        let lpath = out.join(format!("train_log_{name}.csv"));
        let mut text = String::from("iter,loss,auc,lr\n");
        for r in &log {
            text.push_str(&format!("{},{},{},{}\n", r.iter, r.loss, r.auc, r.lr));
        }
        fs::write(&lpath, text).map_err(io_fail(&lpath))?;
        if let Some(last) = log.last() {
            println!("{name}: iter={} loss={:.6} auc={:.4}", last.iter, last.loss, last.auc);
        }
    }
    Ok(())
}

fn eval(c: &Common, data: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let input = dataset_dir(c, data, &cfg);
    let rows = load_rows(&input)?;
    let mut train = cfg.train.clone();
    if let Some(s) = c.seed {
        train.seeds = vec![s];
    }
    let table = run_eval(&rows, &train, &train.methods()?)?;
    let csv = table.to_csv();
    print!("{csv}");
    if let Some(out) = &c.out {
        let path = if out.is_dir() { out.join("eval.csv") } else { out.clone() };
        ensure_parent(&path)?;
        fs::write(&path, &csv).map_err(io_fail(&path))?;
    }
    Ok(())
}

fn shrink_metal(spec: &mut MetalSpec, side: DbUnit) {
    spec.total_x = side;
    spec.total_y = side;
}

fn shrink_via(spec: &mut ViaSpec, side: DbUnit) {
    shrink_metal(&mut spec.m1, side);
    shrink_metal(&mut spec.m2, side);
}

fn bench_cmd(c: &Common, reps: usize) -> Result<(), Failure> {
    let dir = c.config.clone().unwrap_or_else(|| PathBuf::from("configs"));
    let mut files = Vec::new();
    for sub in ["metal", "via"] {
        let d = dir.join(sub);
        let mut here: Vec<PathBuf> = fs::read_dir(&d)
            .map_err(io_fail(&d))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        here.sort();
        files.extend(here.into_iter().map(|p| (sub, p)));
    }
    let mut rows: Vec<BenchResult> = Vec::new();
    for (kind, path) in files {
        let cfg = RunConfig::load(&path, c.seed)?;
        let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let name = format!("{kind}_{stem}");
        let row = if kind == "metal" {
            let mut spec = cfg.require_metal()?.clone();
            if !c.full {
                shrink_metal(&mut spec, BENCH_SIDE);
            }
            bench::bench_metal(&name, &spec, reps)
        } else {
            let mut spec = cfg.require_via()?.clone();
            if !c.full {
                shrink_via(&mut spec, BENCH_SIDE);
            }
            bench::bench_via(&name, &spec, reps)
        };
        eprintln!("{name}: {:.1} um2/s", row.throughput_um2_per_s);
        rows.push(row);
    }
    let csv = bench::to_csv(&rows);
    print!("{csv}");
    if let Some(out) = &c.out {
        ensure_parent(out)?;
        fs::write(out, &csv).map_err(io_fail(out))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenMetal { common, jsonl } => gen_metal(common, jsonl.as_deref()),
        Command::GenVia { common, jsonl } => gen_via(common, jsonl.as_deref()),
        Command::Drc { common, gds } => drc(common, gds),
        Command::Clips { common } => clips(common),
        Command::Features { common, data } => features(common, data.as_ref()),
        Command::Train { common, data } => train(common, data.as_ref()),
        Command::Eval { common, data } => eval(common, data.as_ref()),
        Command::Bench { common, reps } => bench_cmd(common, *reps),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Violations => eprintln!("design rule violations found"),
                Failure::Config(m) | Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
