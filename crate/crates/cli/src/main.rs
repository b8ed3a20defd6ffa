use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forgeloc::copymove::{copymove_mask, detect_copymove, disambiguate_source, sweep_transforms, write_offset_field};
use forgeloc::imgcore::{evaluate, read_mask, read_rgb, write_mask, write_plane, Scores};
use forgeloc::pipeline::{build_clusters, build_splicing_model, read_manifest, run_pipeline, PipelineConfig, DETECTORS};
use forgeloc::prnu::{
    associate_image, correlation_field, estimate_fingerprint, format_cluster_manifest, noise_residual_with, prnu_mask,
    read_fingerprint, write_cluster_manifest, write_fingerprint, Cluster, ClusterSet, ManifestEntry,
};
use forgeloc::splicing::{read_model, read_training_manifest, sdh_map, splicing_mask};
use forgeloc::synth::{emit_corpus, CorpusSpec};
use forgeloc::fusion::{fuse_masks, FusionInput};
use forgeloc::{Error, MaskSource, RgbImage};

#[derive(Parser)]
#[command(name = "forgeloc", version, about = "Localize image forgeries with sensor-noise, copy-move and splicing detectors")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Blindly cluster images by camera and write one fingerprint per cluster.
    Cluster {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a fingerprint from images known to share a camera.
    Fingerprint {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        id: usize,
    },
    /// Match images against a directory of fingerprints.
    Associate {
        #[command(flatten)]
        inputs: Inputs,
        /// Directory holding `cluster_NNN.prnu` files.
        #[arg(long)]
        fingerprints: PathBuf,
        /// Write the association list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sensor-noise localization of one image against a fingerprint.
    DetectPrnu {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also render the correlation field (ρ in [-1, 1]).
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Copy-move localization of one image.
    DetectCopymove {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Camera fingerprint used to tell source from copy.
        #[arg(long)]
        fingerprint: Option<PathBuf>,
        /// Write one offset-field rendering per sweep transform into this directory.
        #[arg(long)]
        offsets: Option<PathBuf>,
    },
    /// Train the splicing classifier from a manifest with truth masks.
    TrainSplicing {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Splicing localization of one image.
    DetectSplicing {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also render the clamped distance map.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Combine detector masks into one decision.
    Fuse {
        #[arg(long)]
        splicing: PathBuf,
        #[arg(long)]
        copymove: Option<PathBuf>,
        #[arg(long)]
        prnu: Option<PathBuf>,
        #[arg(long)]
        prnu_pce: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score masks against truth (one pair, or a directory of `<image_id>.png` against a manifest).
    Evaluate {
        #[arg(long, requires = "truth", conflicts_with_all = ["manifest", "masks"])]
        mask: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, requires = "masks")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        masks: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with truth masks and a manifest.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        cameras: usize,
        #[arg(long, default_value_t = 6)]
        pristine_per_camera: usize,
        #[arg(long, default_value_t = 12)]
        train_splices: usize,
        #[arg(long, default_value_t = 10)]
        copymove: usize,
        #[arg(long, default_value_t = 10)]
        splice: usize,
        #[arg(long, default_value_t = 10)]
        inpaint: usize,
    },
    /// Full pipeline over a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Image inputs: positional paths and/or every `image_path` of a manifest.
#[derive(Args)]
struct Inputs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    images: Vec<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::from_file(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        config.set(k.trim(), v.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn run(cli: Cli) -> CliResult {
    let config = load_config(&cli)?;
    if cli.print_config {
        print!("{}", config.to_text());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Failure::Usage("no subcommand given (see --help)".into()));
    };
    match command {
        Command::Cluster { inputs, out } => cluster(&config, &inputs, &out),
        Command::Fingerprint { inputs, out, id } => {
            let loaded = load_all(&config, &inputs)?;
            let mut fp = estimate_fingerprint(loaded.iter().map(|(_, i, r)| (i, r)))?;
            fp.id = id;
            write_fingerprint(&out, &fp)?;
            eprintln!("fingerprint from {} images -> {}", loaded.len(), out.display());
            Ok(())
        }
        Command::Associate { inputs, fingerprints, out } => {
            let clusters = load_clusters(&fingerprints)?;
            let mut entries = Vec::new();
            for (id, image, residual) in load_all(&config, &inputs)? {
                let a = associate_image(&image, &residual, &clusters, config.association_pce, config.exclusion_radius)?;
                entries.push(ManifestEntry {
                    image_id: id,
                    cluster: a.cluster.map(|c| clusters.clusters[c].fingerprint.id),
                    best_pce: a.pce,
                });
            }
            match out {
                Some(p) => write_cluster_manifest(p, &entries)?,
                None => print!("{}", format_cluster_manifest(&entries)),
            }
            Ok(())
        }
        Command::DetectPrnu { image, fingerprint, out, field } => {
            let img = read_rgb(&image)?;
            let residual = noise_residual_with(&img, config.denoise_strength)?;
            let fp = read_fingerprint(&fingerprint, 0)?;
            let f = correlation_field(&img, &residual, &fp, config.corr_window, config.exclusion_radius)?;
            write_mask(&out, &prnu_mask(&f, &img, &config.prnu_mask_params())?)?;
            if let Some(p) = field {
                write_plane(p, &f.plane, -1.0, 1.0)?;
            }
            println!("pce {:.3}", f.pce);
            Ok(())
        }
        Command::DetectCopymove { image, out, fingerprint, offsets } => {
            let img = read_rgb(&image)?;
            let params = config.copymove_params();
            if let Some(dir) = offsets {
                mkdir(&dir)?;
                let nnf = forgeloc::copymove::NnfParams {
                    min_displacement: params.regions.min_displacement,
                    ..params.nnf
                };
                for (spec, field) in sweep_transforms(&img, &params.sweep, &nnf)? {
                    write_offset_field(dir.join(format!("offsets_r{}_s{}.png", spec.rotation, spec.scale)), &field)?;
                }
            }
            let field = match fingerprint {
                Some(p) => {
                    let residual = noise_residual_with(&img, config.denoise_strength)?;
                    let fp = read_fingerprint(&p, 0)?;
                    Some(correlation_field(&img, &residual, &fp, config.corr_window, config.exclusion_radius)?)
                }
                None => None,
            };
            let pairs: Vec<_> = detect_copymove(&img, &params)?
                .iter()
                .map(|p| disambiguate_source(p, field.as_ref(), config.disambiguation_pce, config.disambiguation_min_region))
                .collect();
            for p in &pairs {
                println!(
                    "pair offset=({},{}) rotation={} scale={} corr={:.3} role={:?} area={}+{}",
                    p.offset.0,
                    p.offset.1,
                    p.transform.rotation,
                    p.transform.scale,
                    p.verification_corr,
                    p.role,
                    p.region_a.count(),
                    p.region_b.count()
                );
            }
            write_mask(&out, &copymove_mask(&pairs, img.dims()))?;
            Ok(())
        }
        Command::TrainSplicing { manifest, out } => {
            let mut samples = Vec::new();
            for (image, truth) in read_training_manifest(&manifest)? {
                samples.push((read_rgb(&image)?, read_mask(&truth, MaskSource::GroundTruth)?));
            }
            match build_splicing_model(&samples, &config, &out)? {
                Some(_) => {
                    eprintln!("model from {} images -> {}", samples.len(), out.display());
                    Ok(())
                }
                None => Err(Failure::Data(Error::SingleClass)),
            }
        }
        Command::DetectSplicing { image, model, out, map } => {
            let img = read_rgb(&image)?;
            let model = read_model(&model)?;
            let sdh = sdh_map(&img, &model, config.block, config.stride)?;
            write_mask(&out, &splicing_mask(&sdh, &config.splicing_mask_params())?)?;
            if let Some(p) = map {
                let hi = sdh.plane.data().iter().cloned().fold(0.0, f64::max);
                write_plane(p, &sdh.plane, 0.0, if hi > 0.0 { hi } else { 1.0 })?;
            }
            Ok(())
        }
        Command::Fuse { splicing, copymove, prnu, prnu_pce, out } => {
            let opt = |p: Option<PathBuf>, s| p.map(|p| read_mask(p, s)).transpose();
            let input = FusionInput {
                copymove_mask: opt(copymove, MaskSource::CopyMove)?,
                prnu_mask: opt(prnu, MaskSource::Prnu)?,
                prnu_pce,
                splicing_mask: read_mask(&splicing, MaskSource::Splicing)?,
            };
            write_mask(&out, &fuse_masks(&input, config.fusion_pce)?)?;
            Ok(())
        }
        Command::Evaluate { mask, truth, manifest, masks } => evaluate_cmd(mask, truth, manifest, masks),
        Command::SynthCorpus {
            out,
            width,
            height,
            cameras,
            pristine_per_camera,
            train_splices,
            copymove,
            splice,
            inpaint,
        } => {
            let spec = CorpusSpec {
                width,
                height,
                cameras,
                pristine_per_camera,
                train_splices,
                test_copymove: copymove,
                test_splice: splice,
                test_inpaint: inpaint,
                seed: config.seed,
            };
            let entries = emit_corpus(&out, &spec)?;
            eprintln!("{} images -> {}", entries.len(), out.join("manifest.csv").display());
            Ok(())
        }
        Command::Run { manifest, out } => {
            let mut config = config;
            if let Some(o) = out {
                config.output_dir = o;
            }
            let report = run_pipeline(&config, &manifest)?;
            eprintln!(
                "{} clusters, splicing model {}, {} errors",
                report.clusters,
                if report.splicing_trained { "trained" } else { "absent" },
                report.errors.len()
            );
            for (id, e) in &report.errors {
                eprintln!("  {id}: {e}");
            }
            for d in DETECTORS {
                if let Some(f) = report.mean(d) {
                    println!("mean {d} f_measure {f:.4}");
                }
            }
            Ok(())
        }
    }
}

fn mkdir(p: &Path) -> CliResult {
    fs::create_dir_all(p).map_err(|e| Failure::Data(Error::Io { path: p.into(), source: e }))
}

fn image_list(inputs: &Inputs) -> CliResult<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    if let Some(m) = &inputs.manifest {
        out.extend(read_manifest(m)?.into_iter().map(|r| (r.image_id, r.image_path)));
    }
    for p in &inputs.images {
        let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        out.push((id, p.clone()));
    }
    if out.is_empty() {
        return Err(Failure::Usage("no input images (pass paths or --manifest)".into()));
    }
    Ok(out)
}

fn load_all(config: &PipelineConfig, inputs: &Inputs) -> CliResult<Vec<(String, RgbImage, forgeloc::prnu::NoiseResidual)>> {
    let mut out = Vec::new();
    for (id, path) in image_list(inputs)? {
        let image = read_rgb(&path)?;
        let residual = noise_residual_with(&image, config.denoise_strength)?;
        out.push((id, image, residual));
    }
    Ok(out)
}

fn cluster(config: &PipelineConfig, inputs: &Inputs, out: &Path) -> CliResult {
    let loaded = load_all(config, inputs)?;
    let images: Vec<&RgbImage> = loaded.iter().map(|l| &l.1).collect();
    let residuals: Vec<_> = loaded.iter().map(|l| &l.2).collect();
    let set = build_clusters(&images, &residuals, config, out)?;
    let assigned = set.assignments(loaded.len());
    let mut entries = Vec::new();
    for ((id, image, residual), cluster) in loaded.iter().zip(assigned) {
        let a = associate_image(image, residual, &set, 0.0, config.exclusion_radius)?;
        entries.push(ManifestEntry {
            image_id: id.clone(),
            cluster,
            best_pce: a.pce,
        });
    }
    write_cluster_manifest(out.join("clusters.txt"), &entries)?;
    eprintln!("{} clusters, {} leftovers -> {}", set.clusters.len(), set.leftovers.len(), out.display());
    Ok(())
}

/// Every `cluster_NNN.prnu` in `dir`, ids taken from the file names.
fn load_clusters(dir: &Path) -> CliResult<ClusterSet> {
    let read = fs::read_dir(dir).map_err(|e| Failure::Data(Error::Io { path: dir.into(), source: e }))?;
    let mut found = Vec::new();
    for entry in read.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_prefix("cluster_").and_then(|s| s.strip_suffix(".prnu")).and_then(|s| s.parse().ok()) {
            found.push((id, entry.path()));
        }
    }
    if found.is_empty() {
        return Err(Failure::Data(Error::EmptyInput("fingerprint directory")));
    }
    found.sort();
    let mut set = ClusterSet::default();
    for (id, path) in found {
        set.clusters.push(Cluster {
            fingerprint: read_fingerprint(&path, id)?,
            members: Vec::new(),
        });
    }
    Ok(set)
}

fn score_line(out: &mut String, id: &str, s: &Scores) {
    let _ = writeln!(out, "{id},{:.6},{:.6},{:.6}", s.precision, s.recall, s.f_measure);
}

fn evaluate_cmd(mask: Option<PathBuf>, truth: Option<PathBuf>, manifest: Option<PathBuf>, masks: Option<PathBuf>) -> CliResult {
    let mut out = String::from("image_id,precision,recall,f_measure\n");
    match (mask, truth, manifest, masks) {
        (Some(m), Some(t), None, None) => {
            let s = evaluate(&read_mask(&m, MaskSource::Fused)?, &read_mask(&t, MaskSource::GroundTruth)?)?;
            let id = m.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            score_line(&mut out, &id, &s);
        }
        (None, None, Some(manifest), Some(dir)) => {
            let mut all: Vec<Scores> = Vec::new();
            for row in read_manifest(&manifest)? {
                let Some(t) = row.truth_path else { continue };
                let p = dir.join(format!("{}.png", row.image_id));
                if !p.exists() {
                    continue;
                }
                let s = evaluate(&read_mask(&p, MaskSource::Fused)?, &read_mask(&t, MaskSource::GroundTruth)?)?;
                score_line(&mut out, &row.image_id, &s);
                all.push(s);
            }
            if all.is_empty() {
                return Err(Failure::Data(Error::EmptyInput("masks matching the manifest")));
            }
            let n = all.len() as f64;
            let mean = Scores {
                precision: all.iter().map(|s| s.precision).sum::<f64>() / n,
                recall: all.iter().map(|s| s.recall).sum::<f64>() / n,
                f_measure: all.iter().map(|s| s.f_measure).sum::<f64>() / n,
            };
            score_line(&mut out, "mean", &mean);
        }
        _ => return Err(Failure::Usage("evaluate needs --mask with --truth, or --manifest with --masks".into())),
    }
    print!("{out}");
    Ok(())
}

