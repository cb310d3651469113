use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linestat::fp_kernel::{GammaConvention, DEFAULT_N_THETA_SOLVER};
use linestat::kernel_fit::{fit_parameters, kernel_error, prob_kernel, search_grids, FitOptions, Metric, Solver, Spacing};
use linestat::orientation::{build_cake_wavelets, dominant_orientations, orientation_score, CakeWaveletParams, Polarity};
use linestat::pipeline::{cluster_patch, load_intensity, stats_from_manifest, ClusterOptions, StatsOptions};
use linestat::raster_io::{
    read_kernel, read_manifest, thin, write_kernel, write_pgm, write_pgm_levels, Channel, KernelHeader, RasterKind,
};
use linestat::{KernelKind, KernelVolume, RotationMode};

#[derive(Parser)]
#[command(name = "linestat", version, about = "Line co-occurrence statistics and direction-process kernels")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thin a binary mask to a one-pixel centerline.
    Thin {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dominant orientation bin per pixel, written as gray levels.
    Orientations {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        ntheta: usize,
        #[command(flatten)]
        input: ImageInput,
    },
    /// Train K^stat from a dataset manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict pairs to artery/vein parts given by the label rasters.
        #[arg(long)]
        av: bool,
        #[arg(long, value_enum, default_value_t = Mode::Group)]
        mode: Mode,
        #[arg(long, default_value_t = 65)]
        d: usize,
        #[arg(long, default_value_t = 16)]
        ntheta: usize,
        #[command(flatten)]
        input: ImageInput,
    },
    /// Compute the symmetrized direction-process kernel K^prob.
    Fpkernel {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        d33: f64,
        #[arg(long, default_value_t = 33)]
        d: usize,
        #[arg(long, default_value_t = 16)]
        ntheta: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Grid-search (alpha, D33) so K^prob matches a target kernel.
    Fit {
        #[arg(long)]
        target: PathBuf,
        /// Error matrix CSV (default: next to the target).
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// 10×10 subset of the search grid.
        #[arg(long)]
        coarse: bool,
        /// Linear instead of logarithmic grid spacing.
        #[arg(long)]
        linear: bool,
        #[arg(long, default_value = "rel_l2")]
        metric: Metric,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Error between two kernels, in percent.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "rel_l2")]
        metric: Metric,
    },
    /// Group the centerline of a segmented patch into structures.
    Cluster {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        segmentation: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        sigma_int: f64,
        /// Smallest kept cluster (default: 10 px up to 51×51 patches, 20 px above).
        #[arg(long)]
        min_size: Option<usize>,
        #[arg(long, default_value_t = 8)]
        c_max: usize,
        /// Label map PGM; the point CSV is written next to it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        input: ImageInput,
    },
    /// Render kernel θ-slices as PGM images clipped at 0.2 of the maximum.
    Render {
        #[arg(long)]
        kernel: PathBuf,
        /// Orientation offsets in bins relative to the centre slice.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        thetas: Vec<i64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ImageInput {
    /// Bright structures on a dark background.
    #[arg(long)]
    bright_structures: bool,
    /// Plane read from colour PPM inputs.
    #[arg(long, value_enum, default_value_t = Plane::Green)]
    channel: Plane,
}

impl ImageInput {
    fn polarity(&self) -> Polarity {
        if self.bright_structures {
            Polarity::Bright
        } else {
            Polarity::Dark
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverKind::Fourier)]
    solver: SolverKind,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Required with `--solver mc`.
    #[arg(long)]
    seed: Option<u64>,
    /// Euler step of the sampler.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Spatial blur of the resolvent, in px.
    #[arg(long, default_value_t = 0.0)]
    blur: f64,
    #[arg(long, value_enum, default_value_t = Gamma::Reference)]
    gamma: Gamma,
    #[arg(long, default_value_t = DEFAULT_N_THETA_SOLVER)]
    n_theta_solver: usize,
    /// Spectral padding in px (default depends on alpha).
    #[arg(long)]
    pad: Option<usize>,
}

impl SolverArgs {
    fn options(&self) -> Result<FitOptions, CliError> {
        let solver = match self.solver {
            SolverKind::Fourier => Solver::Fourier,
            SolverKind::Mc => Solver::MonteCarlo {
                n_samples: self.samples,
                seed: self
                    .seed
                    .ok_or_else(|| CliError::Usage("--solver mc requires --seed".into()))?,
                dt: self.dt,
            },
        };
        Ok(FitOptions {
            solver,
            n_theta_solver: self.n_theta_solver,
            pad: self.pad,
            blur_s: self.blur,
            convention: match self.gamma {
                Gamma::Reference => GammaConvention::ReferenceFrame,
                Gamma::Printed => GammaConvention::Printed,
            },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Group,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Fourier,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gamma {
    Reference,
    Printed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Plane {
    Red,
    Green,
    Blue,
}

impl From<Plane> for Channel {
    fn from(p: Plane) -> Self {
        match p {
            Plane::Red => Channel::Red,
            Plane::Green => Channel::Green,
            Plane::Blue => Channel::Blue,
        }
    }
}

enum CliError {
    Usage(String),
    Data(linestat::Error),
}

impl From<linestat::Error> for CliError {
    fn from(e: linestat::Error) -> Self {
        CliError::Data(e)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| {
        CliError::Data(linestat::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Thin { mask, out } => {
            let m = linestat::raster_io::load_raster(&mask, RasterKind::Mask)?;
            write_pgm(&out, &thin(&m)?)?;
        }
        Command::Orientations {
            image,
            out,
            ntheta,
            input,
        } => {
            if !(2..=256).contains(&ntheta) {
                return Err(CliError::Usage(format!("--ntheta must be in 2..=256, got {ntheta}")));
            }
            let img = load_intensity(&image, input.channel.into())?;
            let wavelets = build_cake_wavelets(&CakeWaveletParams {
                n_theta: ntheta,
                ..CakeWaveletParams::default()
            })?;
            let omap = dominant_orientations(&orientation_score(&img, &wavelets)?, input.polarity());
            write_pgm_levels(&out, omap.width(), omap.height(), omap.bins(), (ntheta - 1) as u16)?;
        }
        Command::Stats {
            manifest,
            out,
            av,
            mode,
            d,
            ntheta,
            input,
        } => {
            let mode = match mode {
                Mode::Group => RotationMode::Group,
                Mode::Literal => RotationMode::Literal,
            };
            let opts = StatsOptions {
                d,
                n_theta: ntheta,
                mode,
                use_av: av,
                polarity: input.polarity(),
                channel: input.channel.into(),
            };
            let k = stats_from_manifest(&read_manifest(&manifest)?, &opts)?;
            write_kernel(&out, &k, &KernelHeader::for_kernel(&k, KernelKind::Stat, mode))?;
        }
        Command::Fpkernel {
            alpha,
            d33,
            d,
            ntheta,
            out,
            solver,
        } => {
            let k = prob_kernel(alpha, d33, d, ntheta, &solver.options()?)?;
            write_kernel(&out, &k, &KernelHeader::for_kernel(&k, KernelKind::Prob, RotationMode::Group))?;
        }
        Command::Fit {
            target,
            matrix,
            coarse,
            linear,
            metric,
            solver,
        } => {
            let opts = solver.options()?;
            let (k, _) = read_kernel(&target)?;
            let spacing = if linear { Spacing::Linear } else { Spacing::Log };
            let (alphas, d33s) = search_grids(spacing, coarse);
            let (fit, errors) = fit_parameters(&k, &alphas, &d33s, metric, &opts)?;
            write_text(&matrix.unwrap_or_else(|| sibling(&target, ".errors.csv")), &errors.to_csv())?;
            println!("{};{};{};{:.4}", fit.alpha, fit.d33, fit.sigma, fit.error_pct);
        }
        Command::Compare { a, b, metric } => {
            let (ka, _) = read_kernel(&a)?;
            let (kb, _) = read_kernel(&b)?;
            println!("{:.4}", kernel_error(&ka, &kb, metric)?);
        }
        Command::Cluster {
            image,
            segmentation,
            kernel,
            sigma_int,
            min_size,
            c_max,
            out,
            input,
        } => {
            let img = load_intensity(&image, input.channel.into())?;
            let seg = linestat::raster_io::load_raster(&segmentation, RasterKind::Mask)?;
            let (k, _) = read_kernel(&kernel)?;
            let mut opts = ClusterOptions {
                sigma_int,
                min_size,
                polarity: input.polarity(),
                ..ClusterOptions::default()
            };
            opts.tuning.c_max = c_max;
            let outcome = cluster_patch(&img, &seg, &k, &opts)?;
            let levels = outcome.label_levels(img.width(), img.height());
            let top = levels.iter().copied().max().unwrap_or(0).max(1);
            write_pgm_levels(&out, img.width(), img.height(), &levels, top)?;
            write_text(&sibling(&out, ".csv"), &outcome.to_csv())?;
        }
        Command::Render { kernel, thetas, out } => {
            let (k, _) = read_kernel(&kernel)?;
            render(&k, &thetas, &out)?;
        }
    }
    Ok(())
}

fn render(k: &KernelVolume, thetas: &[i64], out: &Path) -> Result<(), CliError> {
    let half = (k.n_theta() / 2) as i64;
    for &t in thetas {
        if t < -half || t >= half {
            return Err(CliError::Usage(format!(
                "theta offset {t} outside [{}, {}]",
                -half,
                half - 1
            )));
        }
    }
    fs::create_dir_all(out).map_err(|source| {
        CliError::Data(linestat::Error::Io {
            path: out.to_path_buf(),
            source,
        })
    })?;
    let peak = k.values().iter().copied().fold(0.0, f64::max);
    let clip = 0.2 * peak;
    let side = k.side();
    for &t in thetas {
        let slice = k.slice((t + half) as usize);
        let levels: Vec<u16> = slice
            .iter()
            .map(|&v| {
                if clip > 0.0 {
                    ((v / clip).clamp(0.0, 1.0) * 255.0).round() as u16
                } else {
                    0
                }
            })
            .collect();
        write_pgm_levels(out.join(format!("theta_{t}.pgm")), side, side, &levels, 255)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
