use clap::{Args, Parser, Subcommand, ValueEnum};
use kabp::designer::{ckar_rho, design_ekar, urw_rho, RhoFile};
use kabp::graph::{count_girth_cycles, SystematicEncoder};
use kabp::harness::{
    ber_sweep, build_code, exit_decoder_curve, exit_detector_curve, resolve_rho, write_ber_csv,
    write_exit_csv, DecoderSpec, HarnessError, RhoSource, RunManifest, SimConfig,
};
use kabp::idd::IddSystem;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    version,
    about = "LDPC-coded MIMO iterative detection and decoding with reweighted BP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file of flat key-value settings; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed relevant to the command.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the parity-check matrix and write it as an alist file.
    Construct(Common),
    /// Design a reweighting vector and write it as a rho file.
    DesignRho {
        designer: Designer,
        #[command(flatten)]
        common: Common,
    },
    /// BER/FER sweep over the configured SNR grid.
    Ber(Common),
    /// EXIT curves of the detector and the configured decoders.
    Exit(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Designer {
    Urw,
    Ckar,
    Ekar,
}

impl Designer {
    fn name(self) -> &'static str {
        match self {
            Designer::Urw => "urw",
            Designer::Ckar => "ckar",
            Designer::Ekar => "ekar",
        }
    }
}

fn load(common: &Common) -> Result<SimConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| HarnessError::io(&cfg.output, e))?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn create(path: &Path) -> Result<std::fs::File, HarnessError> {
    std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))
}

fn construct(common: Common) -> Result<(), HarnessError> {
    let mut cfg = load(&common)?;
    if let Some(s) = common.seed {
        cfg.code_seed = s;
    }
    let h = build_code(&cfg)?;
    let census = count_girth_cycles(&h);
    let path = cfg.output.join("code.alist");
    write(&path, &h.to_alist())?;
    println!(
        "{}: N = {}, M = {}, girth = {:?}, mu_g = {:.4}, hash = {}",
        path.display(),
        h.n(),
        h.m(),
        census.girth,
        census.mu_g,
        h.content_hash()
    );
    Ok(())
}

fn design(designer: Designer, common: Common) -> Result<(), HarnessError> {
    let mut cfg = load(&common)?;
    if let Some(s) = common.seed {
        cfg.ekar_seed = s;
    }
    let h = build_code(&cfg)?;
    let (rho, digest) = match designer {
        Designer::Urw => (urw_rho(&h)?, String::from("-")),
        Designer::Ckar => (ckar_rho(&count_girth_cycles(&h), &h)?, String::from("-")),
        Designer::Ekar => {
            let ec = cfg.ekar_config();
            (design_ekar(&h, &ec)?.rho, ec.digest())
        }
    };
    let file = RhoFile {
        code_hash: h.content_hash(),
        designer: designer.name().to_string(),
        config_digest: digest,
        rho,
    };
    let path = cfg.output.join(format!("rho_{}.txt", designer.name()));
    write(&path, &file.to_text())?;
    println!("{}", path.display());
    Ok(())
}

fn decoders(
    cfg: &SimConfig,
    system: &IddSystem,
) -> Result<(Vec<DecoderSpec>, Vec<(String, String)>), HarnessError> {
    let mut specs = Vec::new();
    let mut hashes = Vec::new();
    for &kind in &cfg.decoders {
        let (rho, source) = resolve_rho(kind, &system.h, cfg)?;
        let origin = match source {
            RhoSource::Builtin => {
                let text: String = rho.as_slice().iter().map(|v| format!("{v}\n")).collect();
                hex::encode(Sha256::digest(text.as_bytes()))
            }
            RhoSource::File { sha256, .. } => sha256,
            RhoSource::Designed { config_digest } => format!("designed:{config_digest}"),
        };
        hashes.push((kind.name().to_string(), origin));
        specs.push(DecoderSpec {
            kind,
            decoder: system.decoder(rho)?,
        });
    }
    Ok((specs, hashes))
}

fn ber(common: Common) -> Result<(), HarnessError> {
    let start = Instant::now();
    let mut cfg = load(&common)?;
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    let h = build_code(&cfg)?;
    let code_hash = h.content_hash();
    let system = IddSystem::new(h, cfg.idd_config())?;
    let (specs, rho) = decoders(&cfg, &system)?;
    let records = ber_sweep(&cfg, &system, &specs)?;
    let csv_path = cfg.output.join("ber.csv");
    write_ber_csv(create(&csv_path)?, &records)?;
    RunManifest {
        command: "ber".into(),
        config_digest: cfg.digest(),
        master_seed: cfg.master_seed,
        code_seed: cfg.code_seed,
        code_hash,
        rho,
        workers: cfg.workers,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
    .write(&cfg.output.join("manifest.json"))?;
    println!("{}", csv_path.display());
    Ok(())
}

fn exit(common: Common) -> Result<(), HarnessError> {
    let mut cfg = load(&common)?;
    let seed = common.seed.unwrap_or(cfg.master_seed);
    cfg.master_seed = seed;
    let h = build_code(&cfg)?;
    let system = IddSystem::new(h, cfg.idd_config())?;
    let encoder = SystematicEncoder::new(&system.h);
    let grid: Vec<f64> = (0..cfg.exit_points)
        .map(|i| i as f64 / (cfg.exit_points - 1) as f64)
        .collect();
    let mut curves = vec![exit_detector_curve(
        &system,
        cfg.exit_ebn0_db,
        &grid,
        cfg.exit_channel_uses,
        seed,
    )?];
    let (specs, _) = decoders(&cfg, &system)?;
    for spec in &specs {
        curves.push(exit_decoder_curve(
            spec.kind.name(),
            &spec.decoder,
            &encoder,
            cfg.inner_iters,
            &grid,
            cfg.exit_codewords,
            seed,
        )?);
    }
    let path = cfg.output.join("exit.csv");
    write_exit_csv(create(&path)?, &curves)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(c) => construct(c),
        Command::DesignRho { designer, common } => design(designer, common),
        Command::Ber(c) => ber(c),
        Command::Exit(c) => exit(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
