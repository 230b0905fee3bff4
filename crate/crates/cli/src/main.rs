use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use freqsketch::advice::{AdviceMap, AdviceParams, AdviceSketch, NoiseModel};
use freqsketch::estimation::{benchmark_nrmse, estimate_query, estimate_rank_distribution};
use freqsketch::io::{read_elements, read_frequencies, write_frequencies};
use freqsketch::overhead::{overhead_report, BaseScheme, OverheadReport};
use freqsketch::samplers::sample_with_replacement;
use freqsketch::{
    aggregate, evaluate_nrmse, gen_zipf, Blob, BottomKSketch, Domain, DomainQuery, FreqFn, FrequencyVector,
    SamplerConfig, WeightedSample, ZipfModel,
};

mod config;
mod sampler;

use config::{Config, ConfigError};
use sampler::SamplerName;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_K: usize = 64;

#[derive(Parser)]
#[command(
    name = "freqsketch",
    version,
    about = "Weighted sampling sketches for frequency statistics"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write Zipf or sub-Zipf frequencies as aggregated TSV.
    GenerateZipf {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        w1: Option<f64>,
        /// Sub-Zipf slack; 1 gives exact Zipf.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Aggregate element TSV files (`-` for stdin) into key frequencies.
    Aggregate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Sketch element TSV files into a versioned blob.
    Sketch {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        sampler: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Target function of advice samplers.
        #[arg(long)]
        f: Option<String>,
        /// Advice TSV; advice samplers default to the exact frequencies.
        #[arg(long)]
        advice: Option<PathBuf>,
        #[arg(long)]
        noise: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Merge sketch blobs built with the same configuration.
    Merge {
        #[arg(required = true)]
        blobs: Vec<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Estimate f-statistics from a sketch or sample blob (JSON).
    Estimate {
        blob: PathBuf,
        /// Functions to estimate; repeatable.
        #[arg(long = "f")]
        fs: Vec<String>,
        /// Restrict to the keys listed one per line.
        #[arg(long)]
        keys: Option<PathBuf>,
        /// Aggregated data to report exact values alongside.
        #[arg(long)]
        exact: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// NRMSE of each sampler over a grid of sizes (TSV).
    Evaluate {
        input: PathBuf,
        /// Comma-separated sampler names.
        #[arg(long, value_delimiter = ',')]
        samplers: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Vec<usize>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        advice: Option<PathBuf>,
        #[arg(long)]
        noise: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Emulation overheads of l1, l2 and concave-sublinear sampling.
    Overhead {
        input: PathBuf,
        /// Comma-separated target moments.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Estimated rank of every sampled key (TSV).
    RankDist {
        blob: PathBuf,
        /// Aggregated data to report true ranks alongside.
        #[arg(long)]
        exact: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::from(1)
        }
    }
}

fn report(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": kind, "message": message.trim() });
    eprintln!("{body}");
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(e) = e.downcast_ref::<freqsketch::Error>() {
        e.kind()
    } else if e.downcast_ref::<ConfigError>().is_some() {
        "config"
    } else if e.downcast_ref::<io::Error>().is_some() {
        "io"
    } else {
        "invalid_argument"
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::GenerateZipf {
            alpha,
            n,
            w1,
            c,
            seed,
            out,
        } => {
            let model = ZipfModel {
                alpha: alpha.or(cfg.zipf.alpha).unwrap_or(1.0),
                n: n.or(cfg.zipf.n).context("generate-zipf needs --n")?,
                w1: w1.or(cfg.zipf.w1).unwrap_or(1e6),
                c: c.or(cfg.zipf.c).unwrap_or(1.0),
            };
            let w = gen_zipf(&model, seed.or(cfg.seed).unwrap_or(DEFAULT_SEED))?;
            write_frequencies(&w, output(out.as_deref())?)?;
        }
        Command::Aggregate { inputs, out } => {
            write_frequencies(&read_inputs(&inputs)?, output(out.as_deref())?)?;
        }
        Command::Sketch {
            inputs,
            sampler,
            k,
            seed,
            f,
            advice,
            noise,
            out,
        } => {
            let name: SamplerName = sampler.or(cfg.sampler).unwrap_or_else(|| "ppswor".into()).parse()?;
            let k = k.or(cfg.k).unwrap_or(DEFAULT_K);
            let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let w = read_inputs(&inputs)?;
            let blob = match name {
                SamplerName::BottomK { scheme, q } => {
                    let mut s = BottomKSketch::new(SamplerConfig::new(k, q, scheme, seed)?)?;
                    s.process(&w)?;
                    Blob::from(&s)
                }
                SamplerName::WithReplacement { q } => {
                    Blob::from(sample_with_replacement(&w, &FreqFn::power(q)?, k, seed)?)
                }
                _ => {
                    let f = parse_fn(f.or(cfg.f).as_deref())?;
                    let advice = load_advice(
                        advice.or(cfg.advice).as_deref(),
                        noise.or(cfg.noise).as_deref(),
                        &w,
                        seed,
                    )?;
                    let sizes = name.advice_sizes(k).expect("advice sampler");
                    let params =
                        AdviceParams::new(sizes.k_h, sizes.k_p, sizes.k_u, f, freqsketch::Scheme::Ppswor, seed)?;
                    let mut s = AdviceSketch::new(params)?;
                    for (key, wx) in w.iter() {
                        s.update(key, wx, advice.get(key.as_str()))?;
                    }
                    Blob::from(&s)
                }
            };
            write_text(out.as_deref(), &blob.encode())?;
        }
        Command::Merge { blobs, out } => {
            let mut loaded = blobs.iter().map(|p| read_blob(p));
            let first = loaded.next().expect("clap requires one blob")?;
            let merged = match first {
                Blob::BottomK(_) => {
                    let mut acc = first.into_bottom_k()?;
                    for b in loaded {
                        acc = acc.merge(&b?.into_bottom_k()?)?;
                    }
                    Blob::from(&acc)
                }
                Blob::Advice(_) => {
                    let mut acc = first.into_advice()?;
                    for b in loaded {
                        acc = acc.merge(&b?.into_advice()?)?;
                    }
                    Blob::from(&acc)
                }
                Blob::Sample(_) => bail!("finalized samples cannot be merged; merge the sketches instead"),
            };
            write_text(out.as_deref(), &merged.encode())?;
        }
        Command::Estimate {
            blob,
            fs,
            keys,
            exact,
            out,
        } => {
            let sample = load_sample(&blob)?;
            let fs = if fs.is_empty() {
                vec![cfg.f.unwrap_or_else(|| "identity".into())]
            } else {
                fs
            };
            let domain = match keys {
                Some(path) => Domain::keys(read_lines(&path)?),
                None => Domain::All,
            };
            let exact = exact.map(|p| read_inputs(&[p])).transpose()?;
            let mut estimates = Vec::with_capacity(fs.len());
            for f in &fs {
                let query = DomainQuery::over(parse_fn(Some(f))?, domain.clone());
                estimates.push(Estimate {
                    f: query.f.to_string(),
                    estimate: estimate_query(&sample, &query)?,
                    exact: exact.as_ref().map(|w| query.exact(w)),
                });
            }
            let report = EstimateReport {
                scheme: sample.meta.scheme,
                k: sample.meta.k,
                sampled: sample.len(),
                estimates,
            };
            write_json(out.as_deref(), &report)?;
        }
        Command::Evaluate {
            input,
            samplers,
            k_grid,
            f,
            trials,
            seed,
            advice,
            noise,
            out,
        } => {
            let w = read_inputs(&[input])?;
            let samplers = nonempty(samplers)
                .or(cfg.samplers)
                .unwrap_or_else(|| vec!["ppswor".into()]);
            let names = samplers
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<SamplerName>>>()?;
            let k_grid = nonempty(k_grid)
                .or(cfg.k_grid)
                .or(cfg.k.map(|k| vec![k]))
                .unwrap_or_else(|| vec![DEFAULT_K]);
            let f = parse_fn(f.or(cfg.f).as_deref())?;
            let trials = trials.or(cfg.trials).unwrap_or(freqsketch::estimation::DEFAULT_TRIALS);
            let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let advice = if names.iter().any(SamplerName::is_advice) {
                Some(load_advice(
                    advice.or(cfg.advice).as_deref(),
                    noise.or(cfg.noise).as_deref(),
                    &w,
                    seed,
                )?)
            } else {
                None
            };
            let mut out = output(out.as_deref())?;
            writeln!(out, "sampler\tk\tnrmse\tbenchmark")?;
            for name in &names {
                for &k in &k_grid {
                    let spec = name.spec(k, f, advice.as_ref())?;
                    let r = evaluate_nrmse(&w, &f, &spec, trials, seed)?;
                    writeln!(out, "{name}\t{k}\t{}\t{}", r.nrmse, benchmark_nrmse(k))?;
                }
            }
            out.flush()?;
        }
        Command::Overhead {
            input,
            targets,
            format,
            out,
        } => {
            let w = read_inputs(&[input])?;
            let targets = nonempty(targets).or(cfg.targets).unwrap_or_else(|| vec![3.0, 10.0]);
            let r = overhead_report(&w, &targets, &BaseScheme::ALL)?;
            match format {
                Format::Json => write_json(out.as_deref(), &r)?,
                Format::Tsv => write_text(out.as_deref(), &overhead_tsv(&r))?,
            }
        }
        Command::RankDist { blob, exact, out } => {
            let sample = load_sample(&blob)?;
            let exact = exact.map(|p| read_inputs(&[p])).transpose()?;
            let mut out = output(out.as_deref())?;
            write!(out, "key\tfrequency\trank_hat")?;
            writeln!(out, "{}", if exact.is_some() { "\trank" } else { "" })?;
            for p in estimate_rank_distribution(&sample)? {
                write!(out, "{}\t{}\t{}", p.key, p.frequency, p.rank)?;
                match &exact {
                    Some(w) => writeln!(out, "\t{}", w.iter().filter(|(_, wy)| *wy >= p.frequency).count())?,
                    None => writeln!(out)?,
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Estimate {
    f: String,
    estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
}

#[derive(Serialize)]
struct EstimateReport {
    scheme: freqsketch::samplers::SampleScheme,
    k: usize,
    sampled: usize,
    estimates: Vec<Estimate>,
}

fn overhead_tsv(r: &OverheadReport) -> String {
    let mut s = String::from("scheme");
    let targets: Vec<f64> = r
        .schemes
        .first()
        .map(|x| x.targets.iter().map(|t| t.p).collect())
        .unwrap_or_default();
    for p in &targets {
        s += &format!("\tmax_p{p}\texpected_p{p}");
    }
    s += "\tuniversal_emulation\tuniversal_estimation\tphi_l1\tphi_l2\n";
    let phi = |q: f64| r.heavy_hitters.iter().find(|h| h.q == q).map_or(f64::NAN, |h| h.phi);
    for scheme in &r.schemes {
        s += match scheme.scheme {
            BaseScheme::L1 => "l1",
            BaseScheme::L2 => "l2",
            BaseScheme::ConcaveSublinear => "concave-sublinear",
        };
        for t in &scheme.targets {
            s += &format!("\t{}\t{}", t.max_overhead, t.expected_overhead);
        }
        s += &format!(
            "\t{}\t{}\t{}\t{}\n",
            scheme.universal_emulation,
            scheme.universal_estimation,
            phi(1.0),
            phi(2.0)
        );
    }
    s
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

fn parse_fn(s: Option<&str>) -> Result<FreqFn> {
    Ok(s.unwrap_or("identity").parse::<FreqFn>()?)
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Elements of every input, aggregated.
fn read_inputs(paths: &[PathBuf]) -> Result<FrequencyVector> {
    if let [one] = paths {
        return read_frequencies(open(one)?).with_context(|| format!("reading {}", one.display()));
    }
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_elements(open(p)?).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(aggregate(all)?)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let lines = open(path)?.lines().collect::<io::Result<Vec<_>>>()?;
    Ok(lines
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn read_blob(path: &Path) -> Result<Blob> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    Blob::decode(&text).with_context(|| format!("decoding {}", path.display()))
}

fn load_sample(path: &Path) -> Result<WeightedSample> {
    Ok(match read_blob(path)? {
        b @ Blob::BottomK(_) => b.into_bottom_k()?.finalize(),
        b @ Blob::Advice(_) => b.into_advice()?.to_sample(),
        b @ Blob::Sample(_) => b.into_sample()?,
    })
}

/// Advice from `path`, or the exact frequencies of `w`, with noise applied.
fn load_advice(path: Option<&Path>, noise: Option<&str>, w: &FrequencyVector, seed: u64) -> Result<AdviceMap> {
    let base = match path {
        Some(p) => AdviceMap::read_tsv(open(p)?).with_context(|| format!("reading advice {}", p.display()))?,
        None => AdviceMap::from_frequencies(w),
    };
    match noise {
        Some(n) => Ok(base.with_noise(n.parse::<NoiseModel>()?, seed)?),
        None => Ok(base),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
