use std::fs;
use std::path::{Path, PathBuf};

use mirage_core::channel::{ChannelConfig, ReliabilityConfig};
use mirage_core::codec::{train_vqvae, Codebook, VqVae, VqVaeConfig};
use mirage_core::genclient::{personalize_prompt, request_generation, Endpoint, GenerationRequest, GeneratorConfig};
use mirage_core::pipeline::{run_scheme, size_model_table, sweep, synthetic_video, CodecModels, SchemeConfig, SizeModel};
use mirage_core::ppm::decode_ppm;
use mirage_core::rng::substream;
use mirage_core::tensor::{FrameTensor, VideoTensor};
use mirage_core::transport::Scheme;
use serde::Serialize;

use crate::ingest::{export, ingest, MANIFEST_FILE};
use crate::output::write_atomic;
use crate::{CliError, Command, GenArgs, SchemeArgs, SimulateArgs, SweepArgs, Table1Args, TrainArgs, DEFAULT_CAPTION};

/// Synthetic test video used when no `--input` is given.
pub const SYNTHETIC_FRAMES: usize = 16;
pub const SYNTHETIC_SIZE: usize = 256;
pub const SYNTHETIC_SEED: u64 = 0;

const DEFAULT_K: usize = 256;

/// Runs a parsed command and returns a one-line summary for stdout.
pub fn run(cmd: &Command) -> Result<String, CliError> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::TrainCodebook(a) => train_codebook(a),
        Command::Table1(a) => table1(a),
        Command::GenRequest(a) => gen_request(a),
    }
}

/// Path of the model file written next to a codebook.
pub fn model_path(codebook: &Path) -> PathBuf {
    let mut name = codebook.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".model.json");
    codebook.with_file_name(name)
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    text.push(b'\n');
    write_file(path, &text)
}

fn load_video(input: Option<&Path>) -> Result<VideoTensor<f64>, CliError> {
    match input {
        Some(dir) => Ok(ingest(dir)?),
        None => Ok(synthetic_video(SYNTHETIC_FRAMES, SYNTHETIC_SIZE, SYNTHETIC_SIZE, SYNTHETIC_SEED)),
    }
}

fn load_caption(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => Ok(read_text(p)?.trim_end_matches(['\r', '\n']).to_string()),
        None => Ok(DEFAULT_CAPTION.to_string()),
    }
}

/// Loads a codebook and its model file, checking that they belong together.
pub fn load_vq_model(codebook: &Path) -> Result<VqVae<f64>, CliError> {
    let book: Codebook<f64> = Codebook::from_bytes(&read_file(codebook)?)?;
    let sidecar = model_path(codebook);
    let text = read_text(&sidecar)?;
    let mut model: VqVae<f64> = serde_json::from_str(&text).map_err(|source| CliError::Json { path: sidecar.clone(), source })?;
    if model.codebook.id() != book.id() {
        return Err(CliError::Invalid(format!(
            "{} was trained with codebook {:#010x}, {} holds {:#010x}",
            sidecar.display(),
            model.codebook.id(),
            codebook.display(),
            book.id()
        )));
    }
    model.codebook = book;
    Ok(model)
}

fn scheme_config(scheme: Scheme, args: &SchemeArgs, k: usize, caption: &str) -> SchemeConfig {
    match scheme {
        Scheme::Raw => SchemeConfig::raw(args.q),
        Scheme::RawAe => SchemeConfig::raw_ae(args.q),
        Scheme::MirageAe => SchemeConfig::mirage_ae(args.q, args.keyframes, caption),
        Scheme::MirageVq => SchemeConfig::mirage_vq(k, args.keyframes, caption),
    }
}

fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    if a.codebook.is_some() && a.scheme != Scheme::MirageVq {
        return Err(CliError::Usage("--codebook applies to mirage-vq only".into()));
    }
    let video = load_video(a.common.input.as_deref())?;
    let caption = load_caption(a.common.caption.as_deref())?;
    let loaded = a.codebook.as_deref().map(load_vq_model).transpose()?;
    let k = a.common.k.or(loaded.as_ref().map(|m| m.codebook.size())).unwrap_or(DEFAULT_K);
    let scfg = scheme_config(a.scheme, &a.common, k, &caption);
    scfg.validate()?;
    let models = match loaded {
        Some(vq) => CodecModels { ae: None, vq: Some(vq) },
        None => CodecModels::fit_for(video.frames(), std::slice::from_ref(&scfg), a.seed)?,
    };
    let ccfg = ChannelConfig::new(a.snr_db, a.common.bandwidth_hz, a.common.overhead_s, 0)?;
    let record = run_scheme(&video, &scfg, &models, &ccfg, &ReliabilityConfig::default(), a.seed)?;
    write_json(&a.out, &record)?;
    Ok(format!(
        "{}: {} bytes, latency {:.3} ms, PSNR {:.2} dB -> {}",
        record.scheme,
        record.transmitted_bytes,
        record.latency_s * 1e3,
        record.quality.psnr_db,
        a.out.display()
    ))
}

fn run_sweep(a: &SweepArgs) -> Result<String, CliError> {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let template = ChannelConfig::new(0.0, a.common.bandwidth_hz, a.common.overhead_s, 0)?;
    for &snr in &a.snr_db {
        template.with_snr_db(snr).validate()?;
    }
    let video = load_video(a.common.input.as_deref())?;
    let caption = load_caption(a.common.caption.as_deref())?;
    let k = a.common.k.unwrap_or(DEFAULT_K);
    let configs: Vec<SchemeConfig> = a.schemes.iter().map(|&s| scheme_config(s, &a.common, k, &caption)).collect();
    for c in &configs {
        c.validate()?;
    }
    let models = CodecModels::fit_for(video.frames(), &configs, a.seed)?;
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let rows = sweep(&video, &configs, &models, &a.snr_db, &template, &ReliabilityConfig::default(), &seeds);

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?;
    write_file(&a.out, &bytes)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(format!("{} cells ({failed} failed) -> {}", rows.len(), a.out.display()))
}

fn train_codebook(a: &TrainArgs) -> Result<String, CliError> {
    let video = ingest::<f64>(&a.input)?;
    let cfg = VqVaeConfig { patch_size: a.patch, latent_dim: a.latent, codebook_size: a.k, steps: a.steps, ..VqVaeConfig::default() };
    cfg.validate()?;
    let trained = train_vqvae(video.frames(), &cfg, substream(a.seed, "training"))?;
    let model = trained.model;
    write_file(&a.out, &model.codebook.to_bytes())?;
    let sidecar = model_path(&a.out);
    write_json(&sidecar, &model)?;
    let mse = model.reconstruction_mse(video.frames())?;
    Ok(format!(
        "codebook {:#010x}: K = {}, dim = {}, reconstruction MSE {mse:.6} -> {}, {}",
        model.codebook.id(),
        model.codebook.size(),
        model.codebook.dim(),
        a.out.display(),
        sidecar.display()
    ))
}

fn table1(a: &Table1Args) -> Result<String, CliError> {
    let text = read_text(&a.sizes)?;
    let sizes: SizeModel = serde_json::from_str(&text).map_err(|source| CliError::Json { path: a.sizes.clone(), source })?;
    let ccfg = ChannelConfig::new(a.snr_db, a.bandwidth_hz, a.overhead_s, 0)?;
    let report = size_model_table(&sizes, &ccfg, &ReliabilityConfig::default())?;
    write_json(&a.out, &report)?;
    let speedups = report.rows.iter().map(|r| format!("{} x{:.1}", r.scheme, r.data_speedup)).collect::<Vec<_>>().join(", ");
    Ok(format!("{speedups} -> {}", a.out.display()))
}

/// Keyframes from a manifest directory, or from its `.ppm` files in name order.
fn load_keyframes(dir: &Path) -> Result<Vec<FrameTensor<f64>>, CliError> {
    if dir.join(MANIFEST_FILE).is_file() {
        return Ok(ingest::<f64>(dir)?.into_frames());
    }
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("ppm"))).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Invalid(format!("no .ppm keyframes in {}", dir.display())));
    }
    paths.iter().map(|p| decode_ppm(&read_file(p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))).collect()
}

fn gen_request(a: &GenArgs) -> Result<String, CliError> {
    let endpoint = if a.mock {
        Endpoint::Mock
    } else {
        Endpoint::resolve(a.endpoint.as_deref()).ok_or_else(|| CliError::Usage("give --mock, --endpoint or MIRAGE_GEN_ENDPOINT".into()))?
    };
    let caption = load_caption(Some(&a.caption))?;
    let prompt = personalize_prompt(&caption, &a.identity, &a.style)?;
    let keyframes = load_keyframes(&a.keyframes)?;
    let defaults = GeneratorConfig::default();
    let config = GeneratorConfig {
        frames: a.frames,
        fps: a.fps.unwrap_or(defaults.fps),
        width: a.width.unwrap_or(keyframes[0].width()),
        height: a.height.unwrap_or(keyframes[0].height()),
        ..defaults
    };
    let req = GenerationRequest::new(prompt, keyframes, config)?;
    let video = request_generation(&req, &endpoint)?;
    export(&video, &a.out)?;
    Ok(format!("{} frames -> {}", video.len(), a.out.display()))
}
