//! Batch front end for the rain-removal library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparsederain::dict::DictKind;
use sparsederain::image::quantize;
use sparsederain::{
    correlation_matrix, derain, extract_rain_overlay, ksvd_train, load_dictionary, load_image,
    load_mask, psnr, sample_training_patches, save_dictionary, save_image, ssim, synthesize_rain,
    DictionarySet, Image, RunConfig,
};

#[derive(Parser)]
#[command(name = "sparsederain", version, about = "Sparse-coding rain streak removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Patch side
    #[arg(long)]
    m: Option<usize>,
    /// Atoms per dictionary
    #[arg(long)]
    k: Option<usize>,
    /// Coding sparsity
    #[arg(long)]
    l: Option<usize>,
    /// Rain-region threshold on the shrinkage value
    #[arg(long)]
    th_s: Option<f64>,
    /// Correlation threshold for joint shrinkage
    #[arg(long)]
    th_c: Option<f64>,
    /// Fixed bounded error in 8-bit units (omit for adaptive)
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_atoms: Option<usize>,
    /// Disable per-patch mean removal
    #[arg(long)]
    no_mean_removal: bool,
    #[arg(long)]
    dilation_radius: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Worker threads (falls back to SD_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig, sparsederain::Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(l) = self.l {
            cfg.l = l;
        }
        if let Some(v) = self.th_s {
            cfg.th_s = v;
        }
        if let Some(v) = self.th_c {
            cfg.th_c = v;
        }
        if let Some(v) = self.eps {
            cfg.epsilon = Some(v);
        }
        if let Some(v) = self.max_atoms {
            cfg.max_atoms = Some(v);
        }
        if self.no_mean_removal {
            cfg.mean_removal = false;
        }
        if let Some(v) = self.dilation_radius {
            cfg.dilation_radius = v;
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        cfg.threads = self.threads.or_else(|| {
            std::env::var("SD_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        });
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn a dictionary from an image corpus directory
    TrainDict {
        /// Directory of training images
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of masks matching corpus file names (rain corpora)
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// rain | nonrain
        #[arg(long)]
        kind: String,
        /// Training patches to sample
        #[arg(long)]
        count: Option<usize>,
        /// K-SVD sweeps
        #[arg(long)]
        iters: Option<usize>,
        /// Masked fraction required per rain patch
        #[arg(long)]
        coverage: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Remove rain streaks from one image
    Derain {
        #[arg(long = "in")]
        input: PathBuf,
        /// Non-rain dictionary file
        #[arg(long)]
        dn: PathBuf,
        /// Rain dictionary file
        #[arg(long)]
        dr: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also export the shrinkage map as an 8-bit PNG
        #[arg(long)]
        map_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Export the shrinkage map of an image
    Map {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dr: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Cross-dictionary correlation statistics
    Corr {
        #[arg(long)]
        dn: PathBuf,
        #[arg(long)]
        dr: PathBuf,
        /// Report the count of non-rain atoms with any correlation >= th
        #[arg(long, default_value_t = 0.8)]
        th: f64,
    },
    /// Compose a synthetic rain image from a clean image and a rain source
    Synth {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        rain: PathBuf,
        /// Rain mask for the rain source
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rain patches to paste
        #[arg(long, default_value_t = 40)]
        count: usize,
        #[arg(long)]
        rotate90: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// PSNR/SSIM table for image pairs given as name=reference:test
    Eval {
        /// One or more name=reference_path:test_path triples
        pairs: Vec<String>,
    },
}

fn load_corpus(
    dir: &Path,
    masks: Option<&Path>,
) -> Result<Vec<(Image, Option<sparsederain::RainMask>)>, String> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read corpus dir {}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| {
                    e.eq_ignore_ascii_case("png")
                        || e.eq_ignore_ascii_case("pgm")
                })
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(format!("no PNG/PGM images in {}", dir.display()));
    }
    let mut corpus = Vec::new();
    for path in entries {
        let img = load_image(&path).map_err(|e| e.to_string())?;
        let mask = match masks {
            Some(mask_dir) => {
                let mask_path = mask_dir.join(path.file_name().unwrap());
                Some(load_mask(&mask_path, &img).map_err(|e| e.to_string())?)
            }
            None => None,
        };
        corpus.push((img, mask));
    }
    Ok(corpus)
}

fn save_map_png(map: &sparsederain::ShrinkageMap, path: &Path) -> Result<(), String> {
    let mut buf = image::GrayImage::new(map.width as u32, map.height as u32);
    for (i, px) in buf.pixels_mut().enumerate() {
        px.0 = [quantize(map.s[i])];
    }
    buf.save(path)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::TrainDict {
            corpus,
            masks,
            out,
            kind,
            count,
            iters,
            coverage,
            common,
        } => {
            let cfg = common.resolve().map_err(|e| e.to_string())?;
            let kind = match kind.as_str() {
                "rain" => DictKind::Rain,
                "nonrain" => DictKind::NonRain,
                other => return Err(format!("unknown dictionary kind '{other}'")),
            };
            let images = load_corpus(&corpus, masks.as_deref())?;
            let patches = sample_training_patches(
                &images,
                cfg.m,
                count.unwrap_or(cfg.train_patches),
                coverage.unwrap_or(cfg.rain_coverage),
                cfg.mean_removal,
                cfg.seed,
            )
            .map_err(|e| e.to_string())?;
            let (dict, report) = ksvd_train(
                &patches,
                cfg.k,
                cfg.l,
                iters.unwrap_or(cfg.train_iters),
                cfg.seed,
                kind,
                cfg.m,
            )
            .map_err(|e| e.to_string())?;
            save_dictionary(&dict, &out).map_err(|e| e.to_string())?;
            println!(
                "trained {}x{} dictionary in {} sweeps, final mean sq error {:.3e}",
                dict.patch_dim(),
                dict.k(),
                report.errors.len(),
                report.errors.last().unwrap_or(&f64::NAN)
            );
            Ok(())
        }
        Command::Derain {
            input,
            dn,
            dr,
            out,
            map_out,
            common,
        } => {
            let cfg = common.resolve().map_err(|e| e.to_string())?;
            let img = load_image(&input).map_err(|e| e.to_string())?;
            let nonrain = load_dictionary(&dn).map_err(|e| e.to_string())?;
            let rain = load_dictionary(&dr).map_err(|e| e.to_string())?;
            let dicts = DictionarySet::new(nonrain, rain).map_err(|e| e.to_string())?;
            let (output, map) =
                derain(&img, &dicts, &cfg.derain_config()).map_err(|e| e.to_string())?;
            save_image(&output, &out).map_err(|e| e.to_string())?;
            if let Some(map_path) = map_out {
                save_map_png(&map, &map_path)?;
            }
            Ok(())
        }
        Command::Map {
            input,
            dr,
            out,
            common,
        } => {
            let cfg = common.resolve().map_err(|e| e.to_string())?;
            let img = load_image(&input).map_err(|e| e.to_string())?;
            let rain = load_dictionary(&dr).map_err(|e| e.to_string())?;
            let map = sparsederain::build_shrinkage_map(
                &img,
                &rain,
                cfg.l,
                cfg.mean_removal,
                cfg.dilation_radius,
            )
            .map_err(|e| e.to_string())?;
            save_map_png(&map, &out)
        }
        Command::Corr { dn, dr, th } => {
            let nonrain = load_dictionary(&dn).map_err(|e| e.to_string())?;
            let rain = load_dictionary(&dr).map_err(|e| e.to_string())?;
            let corr = correlation_matrix(&nonrain, &rain).map_err(|e| e.to_string())?;
            let mut hist = [0usize; 10];
            let mut max_per_row = Vec::with_capacity(corr.c.nrows());
            for k in 0..corr.c.nrows() {
                let best = (0..corr.c.ncols())
                    .map(|l| corr.get(k, l))
                    .fold(f64::NEG_INFINITY, f64::max);
                max_per_row.push(best);
                let bin = ((best.clamp(0.0, 1.0) * 10.0) as usize).min(9);
                hist[bin] += 1;
            }
            println!("max correlation per non-rain atom, histogram:");
            for (i, count) in hist.iter().enumerate() {
                println!("  [{:.1},{:.1}) {count}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
            }
            let above = max_per_row.iter().filter(|&&v| v >= th).count();
            println!("atoms with correlation >= {th}: {above} of {}", corr.c.nrows());
            Ok(())
        }
        Command::Synth {
            clean,
            rain,
            mask,
            out,
            count,
            rotate90,
            common,
        } => {
            let cfg = common.resolve().map_err(|e| e.to_string())?;
            let clean_img = load_image(&clean).map_err(|e| e.to_string())?;
            let rain_img = load_image(&rain).map_err(|e| e.to_string())?;
            let rain_mask = load_mask(&mask, &rain_img).map_err(|e| e.to_string())?;
            let overlay = extract_rain_overlay(
                &rain_img,
                &rain_mask,
                cfg.m,
                count,
                cfg.rain_coverage,
                cfg.seed,
            )
            .map_err(|e| e.to_string())?;
            let rainy =
                synthesize_rain(&clean_img, &overlay, rotate90).map_err(|e| e.to_string())?;
            save_image(&rainy, &out).map_err(|e| e.to_string())
        }
        Command::Eval { pairs } => {
            if pairs.is_empty() {
                return Err("no pairs given; expected name=reference:test".into());
            }
            for spec in pairs {
                let (name, rest) = spec
                    .split_once('=')
                    .ok_or_else(|| format!("bad pair '{spec}', expected name=reference:test"))?;
                let (ref_path, test_path) = rest
                    .split_once(':')
                    .ok_or_else(|| format!("bad pair '{spec}', expected name=reference:test"))?;
                let a = load_image(Path::new(ref_path)).map_err(|e| e.to_string())?;
                let b = load_image(Path::new(test_path)).map_err(|e| e.to_string())?;
                let p = psnr(&a, &b).map_err(|e| e.to_string())?;
                let s = ssim(&a, &b).map_err(|e| e.to_string())?;
                println!("{name}\t{p:.4}\t{s:.6}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
