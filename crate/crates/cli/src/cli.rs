use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nccut_core::eval::{evaluate_dataset, RoiSource};
use nccut_core::imagegraph::slico;
use nccut_core::image::encode_rgb_png;
use nccut_core::nc::{compute_nc, SeedSet};
use nccut_core::pipeline::{init_session, Polygon};
use nccut_core::{load_image, Config, RgbImage};

use crate::server::{self, ServerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PROCESSING: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nccut", version, about = "Polygon-ROI foreground extraction with neutro-connectedness cut", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image from a polygon ROI and write the binary mask as PNG.
    Segment(SegmentArgs),
    /// Draw superpixel boundaries over the image.
    Superpixels(SuperpixelsArgs),
    /// Write the false-colour connectedness map of the first iteration.
    Ncmap(NcmapArgs),
    /// Segment a dataset and write per-image metrics (CSV if the output ends in .csv, JSON otherwise).
    Eval(EvalArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// JSON file `{"polygon": [[x, y], ...]}`.
    #[arg(long)]
    pub roi: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `key = value` overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-iteration trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Disable indeterminacy (γ = 1 throughout).
    #[arg(long = "nc-cut0")]
    pub nc_cut0: bool,
}

#[derive(Debug, Args)]
pub struct SuperpixelsArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the 16-bit label image.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NcmapArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub roi: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory with `images/` and `masks/`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of `<stem>.json` polygon ROIs.
    #[arg(long, conflicts_with = "looseness", required_unless_present = "looseness")]
    pub roi_dir: Option<PathBuf>,
    /// Grow a rectangle from the ground-truth box to this area ratio.
    #[arg(long)]
    pub looseness: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "NCCUT_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = server::DEFAULT_MAX_PIXELS)]
    pub max_pixels: usize,
    /// Sessions untouched for this long are dropped.
    #[arg(long, default_value_t = 30)]
    pub idle_minutes: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_PROCESSING
        }
    }
}

fn load_config(path: Option<&Path>, nc_cut0: bool) -> anyhow::Result<Config> {
    let mut config = Config::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        config.apply_overrides(&text)?;
    }
    if nc_cut0 {
        config.indeterminacy_enabled = false;
    }
    config.validate()?;
    Ok(config)
}

fn read_image(path: &Path) -> anyhow::Result<RgbImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(load_image(&bytes)?)
}

fn read_roi(path: &Path) -> anyhow::Result<Polygon> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Polygon::from_json(&text)?)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Segment(a) => {
            let config = load_config(a.config.as_deref(), a.nc_cut0)?;
            let image = read_image(&a.image)?;
            let roi = read_roi(&a.roi)?;
            let mut session = init_session(&image, &roi, &config)?;
            let out = session.segment()?;
            write(&a.out, out.mask.to_png()?)?;
            if let Some(t) = &a.trace {
                write(t, out.trace_json()?)?;
            }
            log::info!("{} iterations, {} object pixels", out.iterations(), out.mask.count());
        }
        Command::Superpixels(a) => {
            let config = load_config(a.config.as_deref(), false)?;
            let image = read_image(&a.image)?;
            let regions = slico(&image, config.n_regions.min(image.len()))?;
            let w = image.width();
            let overlay = RgbImage::from_fn(w, image.height(), |x, y| {
                let r = regions.label(y * w + x);
                let differs = (x + 1 < w && regions.label(y * w + x + 1) != r)
                    || (y + 1 < image.height() && regions.label((y + 1) * w + x) != r);
                if differs {
                    [255, 255, 0]
                } else {
                    image.get(x, y)
                }
            })?;
            write(&a.out, encode_rgb_png(&overlay)?)?;
            if let Some(p) = &a.labels {
                write(p, regions.to_label_png()?)?;
            }
            log::info!("{} superpixels", regions.n_regions());
        }
        Command::Ncmap(a) => {
            let config = load_config(a.config.as_deref(), false)?;
            let image = read_image(&a.image)?;
            let roi = read_roi(&a.roi)?;
            let session = init_session(&image, &roi, &config)?;
            let seeds = SeedSet::new(session.initial_seeds.iter().copied(), session.regions.n_regions())?;
            let nc = compute_nc(&session.graph, &seeds)?;
            write(&a.out, nc.truth_map_png(&session.regions)?)?;
        }
        Command::Eval(a) => {
            let config = load_config(a.config.as_deref(), false)?;
            let source = match (a.roi_dir, a.looseness) {
                (Some(dir), None) => RoiSource::Polygons(dir),
                (None, Some(l)) if l >= 1.0 => RoiSource::Looseness(l),
                (None, Some(l)) => bail!("looseness must be at least 1, got {l}"),
                _ => unreachable!("clap enforces exactly one ROI source"),
            };
            let report = evaluate_dataset(&a.dataset, source, &config)?;
            let csv = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            write(&a.out, if csv { report.to_csv()? } else { report.to_json()? })?;
            if let Some(m) = &report.mean {
                println!(
                    "{} images ({} failed): ERR {:.3}%  RI {:.4}  GCE {:.4}  BDE {:.3}  IoU {:.4}",
                    report.n_ok + report.n_failed,
                    report.n_failed,
                    m.err_percent,
                    m.rand_index,
                    m.gce,
                    m.bde,
                    m.iou_avg
                );
            }
        }
        Command::Serve(a) => {
            let config = load_config(a.config.as_deref(), false)?;
            let addr: SocketAddr = format!("{}:{}", a.host, a.port)
                .parse()
                .with_context(|| format!("bad listen address {}:{}", a.host, a.port))?;
            let cfg = ServerConfig {
                max_pixels: a.max_pixels,
                idle_timeout: Duration::from_secs(a.idle_minutes * 60),
                segmentation: config,
            };
            tokio::runtime::Runtime::new()?.block_on(server::serve(addr, cfg))?;
        }
    }
    Ok(())
}
