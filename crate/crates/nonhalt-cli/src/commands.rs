use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use nonhalt_core::cycle::{certify_non_halting, detect_cycle};
use nonhalt_core::guard::{GuardAction, GuardPolicy, GuardState};
use nonhalt_core::recipe::{build_query, TemplateId};
use nonhalt_core::sampler::{SamplerConfig, SeededRng};
use nonhalt_core::sim::{
    invert_search, simulate, verify_theorem_oracle, CertSearchOptions, HashEchoParams,
    SearchStrategy, SimModel, TheoremOptions, TheoremVerdict, DEFAULT_ECHO_BETA, DEFAULT_EOS_BIAS,
};
use nonhalt_core::symbol::{Interner, Symbol, SymbolStream, Vocab};
use nonhalt_core::CertifyResult;
use nonhalt_harness::probe::{logprob_summary, probe, ProbeOptions, ProbePrompt};
use nonhalt_harness::record::{RecordSink, ResumeIndex};
use nonhalt_harness::runner::{
    default_schedule, run_temperature_sweep, run_wordlist_experiment, ProbeSession,
};
use nonhalt_harness::{ModelClient, RemoteClient, SimClient};

use crate::model_spec::load_sim_model;
use crate::settings::Settings;
use crate::{Cli, ClientArgs, Command, RunArgs, SamplerArgs};

/// Error class mapped to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let settings = Settings::load(cli.config.as_deref())?;
    let outcome = dispatch(cli.command, &settings);
    match outcome {
        Ok(code) => Ok(code),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("usage error: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e),
    }
}

fn dispatch(command: Command, settings: &Settings) -> Result<ExitCode> {
    match command {
        Command::Detect {
            stream_file,
            c_max,
            r_min,
        } => cmd_detect(settings, &stream_file, c_max, r_min),
        Command::Certify {
            stream_file,
            w,
            deterministic,
            c_max,
            r_min,
        } => cmd_certify(settings, &stream_file, w, deterministic, c_max, r_min),
        Command::Simulate {
            model,
            prompt,
            max_len,
            sampler,
        } => cmd_simulate(settings, &model, &prompt, max_len, sampler),
        Command::VerifyTheorem {
            trials,
            w_min,
            w_max,
            vocab_max,
            extension_cycles,
            prompt_len_max,
            seed,
            echo_beta,
            eos_bias,
        } => cmd_verify_theorem(
            settings,
            trials,
            w_min,
            w_max,
            vocab_max,
            extension_cycles,
            prompt_len_max,
            seed,
            echo_beta,
            eos_bias,
        ),
        Command::Invert {
            model,
            target,
            len,
            strategy,
            budget,
            search_seed,
            sampler,
        } => cmd_invert(settings, &model, target, len, strategy, budget, search_seed, sampler),
        Command::Recipe {
            cycle,
            reps,
            template,
        } => cmd_recipe(settings, &cycle, reps, template),
        Command::Probe {
            client,
            prompt,
            cycle,
            reps,
            template,
            sampler,
            run,
        } => cmd_probe(settings, client, prompt, cycle, reps, template, sampler, run),
        Command::Sweep {
            client,
            cycle,
            template,
            temps,
            schedule,
            sampler,
            run,
        } => cmd_sweep(settings, client, cycle, template, temps, schedule, sampler, run),
        Command::Wordlist {
            client,
            words,
            template,
            schedule,
            sampler,
            run,
        } => cmd_wordlist(settings, client, words, template, schedule, sampler, run),
        Command::GuardDemo {
            policy,
            stream_file,
        } => cmd_guard_demo(settings, policy, stream_file),
    }
}

// ---- shared helpers -------------------------------------------------------

fn intern_tokens(text: &str) -> SymbolStream {
    let mut interner = Interner::new();
    text.split_whitespace().map(|t| interner.intern(t)).collect()
}

fn read_stream_file(path: &Path) -> Result<SymbolStream> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading stream file {}", path.display()))?;
    Ok(intern_tokens(&text))
}

fn join_symbols(symbols: &[Symbol]) -> String {
    symbols
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_id_prompt(prompt: &str, vocab_size: usize) -> Result<SymbolStream> {
    let mut out = Vec::new();
    for token in prompt.split_whitespace() {
        let id: u32 = token
            .parse()
            .map_err(|_| usage(format!("prompt token `{token}` is not a symbol id")))?;
        if id as usize >= vocab_size {
            return Err(usage(format!(
                "prompt id {id} outside the vocabulary (size {vocab_size})"
            )));
        }
        out.push(Symbol::new(id));
    }
    if out.is_empty() {
        return Err(usage("prompt must contain at least one symbol id"));
    }
    Ok(out)
}

fn resolve_sampler(
    args: SamplerArgs,
    settings: &Settings,
    vocab_size: Option<usize>,
) -> Result<SamplerConfig<f64>> {
    let tau = settings.resolve(args.tau, "tau", 0.0)?;
    let top_k_raw = settings.resolve(args.top_k, "top-k", 0usize)?;
    let top_p = settings.resolve(args.top_p, "top-p", 1.0)?;
    let seed = settings.resolve(args.seed, "seed", 0u64)?;
    let top_k = if top_k_raw == 0 {
        vocab_size.unwrap_or(usize::MAX)
    } else {
        top_k_raw
    };
    SamplerConfig::new(tau, top_k, top_p, seed)
        .map_err(|e| usage(format!("invalid sampler parameters: {e}")))
}

fn resolve_template(cli: Option<String>, settings: &Settings) -> Result<TemplateId> {
    let name = settings.resolve(cli, "template", "many-words".to_string())?;
    name.parse::<TemplateId>()
        .map_err(|e| usage(e.to_string()))
}

fn resolve_schedule(cli: Option<String>, settings: &Settings) -> Result<Vec<usize>> {
    let raw = settings.resolve(cli, "schedule", "default".to_string())?;
    if raw == "default" {
        return Ok(default_schedule());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad schedule entry `{t}`")))
        })
        .collect()
}

fn resolve_temps(cli: Option<String>, settings: &Settings) -> Result<Vec<f64>> {
    let raw = settings.resolve(cli, "temps", "default".to_string())?;
    if raw == "default" {
        return Ok((0..=10).map(|i| i as f64 / 10.0).collect());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad temperature `{t}`")))
        })
        .collect()
}

struct ResolvedRun {
    options: ProbeOptions,
    records: Option<PathBuf>,
}

fn resolve_run(run: &RunArgs, settings: &Settings) -> Result<ResolvedRun> {
    // `probe-timeout-s` is accepted as an alias of the flag-mirroring key.
    let timeout_s = match settings.resolve_opt(run.timeout_s, "timeout-s")? {
        Some(v) => v,
        None => settings.resolve(None, "probe-timeout-s", 300u64)?,
    };
    let mut options = ProbeOptions {
        output_budget: settings.resolve(run.budget, "budget", 4096usize)?,
        c_max: settings.resolve(run.c_max, "c-max", 64usize)?,
        r_min: settings.resolve(run.r_min, "r-min", 2usize)?,
        timeout: Duration::from_secs(timeout_s),
        parallelism: settings.resolve(run.parallelism, "parallelism", 4usize)?,
        ..ProbeOptions::default()
    };
    if let Some(mode) = settings.resolve_opt(run.segment.clone(), "segment")? {
        options.segment_mode = Some(
            mode.parse()
                .map_err(|e: String| usage(e))?,
        );
    }
    let records = match &run.records {
        Some(p) => Some(p.clone()),
        None => settings.get_str("records").map(PathBuf::from),
    };
    Ok(ResolvedRun { options, records })
}

enum BuiltClient {
    Sim(SimClient),
    Remote(RemoteClient),
}

impl BuiltClient {
    fn as_dyn(&self) -> &dyn ModelClient {
        match self {
            BuiltClient::Sim(c) => c,
            BuiltClient::Remote(c) => c,
        }
    }
}

fn build_client(args: &ClientArgs, settings: &Settings, timeout: Duration) -> Result<BuiltClient> {
    let sim = settings.resolve_opt(args.sim.clone(), "sim")?;
    let model = settings.resolve_opt(args.model.clone(), "model")?;
    let w = settings.resolve_opt(args.w, "w")?;
    match (sim, model) {
        (Some(_), Some(_)) => Err(usage("--sim and --model are mutually exclusive")),
        (Some(spec), None) => {
            let sim_model = load_sim_model(&spec)?;
            Ok(BuiltClient::Sim(SimClient::new(
                format!("sim:{spec}"),
                Arc::new(sim_model),
            )))
        }
        (None, Some(name)) => {
            let base = settings.resolve_opt(args.base_url.clone(), "base-url")?;
            let mut client = match base {
                Some(url) => RemoteClient::new(url, name)?,
                None => RemoteClient::from_env(name)?,
            };
            if let Some(w) = w {
                client = client.with_context_size(w);
            }
            client = client.with_timeout(timeout);
            Ok(BuiltClient::Remote(client))
        }
        (None, None) => Err(usage("need --sim <spec> or --model <name>")),
    }
}

fn open_sink(
    records: &Option<PathBuf>,
    header: serde_json::Value,
) -> Result<Option<(RecordSink, ResumeIndex)>> {
    match records {
        None => Ok(None),
        Some(path) => {
            let (sink, index) = RecordSink::open(path, header)?;
            Ok(Some((sink, index)))
        }
    }
}

fn greedy_full() -> SamplerConfig<f64> {
    SamplerConfig::new(0.0, usize::MAX, 1.0, 0).expect("static config")
}

// ---- subcommands ----------------------------------------------------------

fn cmd_detect(
    settings: &Settings,
    stream_file: &Path,
    c_max: Option<usize>,
    r_min: Option<usize>,
) -> Result<ExitCode> {
    let c_max = settings.resolve(c_max, "c-max", 256usize)?;
    let r_min = settings.resolve(r_min, "r-min", 2usize)?;
    let stream = read_stream_file(stream_file)?;
    match detect_cycle(&stream, c_max, r_min) {
        Some(a) => println!(
            "b={} c={} r={} ell={} cycle=[{}]",
            a.b(),
            a.c(),
            a.r_obs(),
            a.ell(),
            join_symbols(a.cycle())
        ),
        None => println!("NONE"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(
    settings: &Settings,
    stream_file: &Path,
    w: usize,
    deterministic: bool,
    c_max: Option<usize>,
    r_min: Option<usize>,
) -> Result<ExitCode> {
    let c_max = settings.resolve(c_max, "c-max", 256usize)?;
    let r_min = settings.resolve(r_min, "r-min", 2usize)?;
    let stream = read_stream_file(stream_file)?;
    let Some(anomaly) = detect_cycle(&stream, c_max, r_min) else {
        println!("NO ANOMALY");
        return Ok(ExitCode::SUCCESS);
    };
    match certify_non_halting(&anomaly, w, deterministic) {
        CertifyResult::Certified(cert) => {
            println!(
                "CERTIFIED ell_star={} b={} c={} ell={} w={} cycle=[{}]",
                cert.ell_star(),
                cert.anomaly().b(),
                cert.anomaly().c(),
                cert.anomaly().ell(),
                cert.w(),
                join_symbols(cert.anomaly().cycle())
            );
        }
        CertifyResult::Refused(reason) => println!("REFUSED {reason}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    settings: &Settings,
    model_spec: &str,
    prompt: &str,
    max_len: Option<usize>,
    sampler: SamplerArgs,
) -> Result<ExitCode> {
    let model = load_sim_model(model_spec)?;
    let config = resolve_sampler(sampler, settings, Some(model.vocab().size()))?;
    let max_len = settings.resolve(max_len, "max-len", 64usize)?;
    let prompt = parse_id_prompt(prompt, model.vocab().size())?;
    let outcome = simulate(&model, &prompt, &config, max_len)?;
    println!("{}", join_symbols(&outcome.output));
    println!("halt={}", outcome.halted);
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify_theorem(
    settings: &Settings,
    trials: Option<usize>,
    w_min: Option<usize>,
    w_max: Option<usize>,
    vocab_max: Option<usize>,
    extension_cycles: Option<usize>,
    prompt_len_max: Option<usize>,
    seed: Option<u64>,
    echo_beta: Option<f64>,
    eos_bias: Option<f64>,
) -> Result<ExitCode> {
    let trials = settings.resolve(trials, "trials", 1000usize)?;
    let w_min = settings.resolve(w_min, "w-min", 2usize)?;
    let w_max = settings.resolve(w_max, "w-max", 16usize)?;
    let vocab_max = settings.resolve(vocab_max, "vocab-max", 32usize)?;
    let extension = settings.resolve(extension_cycles, "extension-cycles", 50usize)?;
    let prompt_len_max = settings.resolve(prompt_len_max, "prompt-len-max", 8usize)?;
    let seed = settings.resolve(seed, "seed", 0u64)?;
    let echo_beta = settings.resolve(echo_beta, "echo-beta", DEFAULT_ECHO_BETA)?;
    let eos_bias = settings.resolve(eos_bias, "eos-bias", DEFAULT_EOS_BIAS)?;
    if w_min < 1 || w_max < w_min || vocab_max < 4 {
        return Err(usage("need w-min >= 1, w-max >= w-min, vocab-max >= 4"));
    }

    let config = greedy_full();
    let mut rng = SeededRng::new(seed);
    let (mut certified, mut halted, mut no_anomaly, mut violations) = (0usize, 0usize, 0usize, 0usize);
    for trial in 0..trials {
        let w = w_min + (rng.next_u64() as usize) % (w_max - w_min + 1);
        let n = 4 + (rng.next_u64() as usize) % (vocab_max - 3);
        let model_seed = rng.next_u64();
        let vocab = Vocab::numeric(n, n - 1)?;
        let model = SimModel::hash_echo(
            w,
            vocab,
            HashEchoParams {
                seed: model_seed,
                echo_beta,
                eos_bias,
            },
        )?;
        let prompt_len = 1 + (rng.next_u64() as usize) % prompt_len_max;
        let prompt: SymbolStream = (0..prompt_len)
            .map(|_| Symbol::new((rng.next_u64() % n as u64) as u32))
            .collect();
        let opts = TheoremOptions::for_model(&model);
        match verify_theorem_oracle(&model, &prompt, &config, extension, &opts)? {
            TheoremVerdict::Certified(report) => {
                certified += 1;
                if !report.is_clean() {
                    violations += 1;
                    eprintln!(
                        "violation in trial {trial} (w={w} n={n} seed={model_seed}): {:?}",
                        report.violations()
                    );
                }
            }
            TheoremVerdict::Halted { .. } => halted += 1,
            TheoremVerdict::NoAnomaly { .. } => no_anomaly += 1,
        }
    }
    println!(
        "trials={trials} certified={certified} halted={halted} no-anomaly={no_anomaly} violations={violations}"
    );
    Ok(if violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_invert(
    settings: &Settings,
    model_spec: &str,
    target: u32,
    len: Option<usize>,
    strategy: Option<String>,
    budget: Option<usize>,
    search_seed: Option<u64>,
    sampler: SamplerArgs,
) -> Result<ExitCode> {
    let model = load_sim_model(model_spec)?;
    let config = resolve_sampler(sampler, settings, Some(model.vocab().size()))?;
    let len = settings.resolve(len, "len", 3usize)?;
    let budget = settings.resolve(budget, "budget", 4096usize)?;
    let search_seed = settings.resolve(search_seed, "search-seed", 0u64)?;
    let strategy_name = settings.resolve(strategy, "strategy", "exhaustive".to_string())?;
    let strategy = match strategy_name.as_str() {
        "exhaustive" => SearchStrategy::Exhaustive,
        "random" => SearchStrategy::Random { seed: search_seed },
        "hill-climb" => SearchStrategy::HillClimb { seed: search_seed },
        other => return Err(usage(format!("unknown strategy `{other}`"))),
    };
    let opts = CertSearchOptions::for_model(&model);
    let outcome = invert_search(
        &model,
        &Symbol::new(target),
        len,
        strategy,
        budget,
        &config,
        &opts,
    )?;
    let s = outcome.stats;
    println!(
        "evaluated={} certified={} hits={} halted={} distinct_cycles={} hit_rate={:.4}",
        s.evaluated, s.certified, s.hits, s.halted, s.distinct_cycles, s.hit_rate
    );
    const SHOWN: usize = 20;
    for hit in outcome.hits.iter().take(SHOWN) {
        println!(
            "hit: prompt=[{}] cycle=[{}] ell_star={}",
            join_symbols(&hit.prompt),
            join_symbols(hit.certificate.anomaly().cycle()),
            hit.certificate.ell_star()
        );
    }
    if outcome.hits.len() > SHOWN {
        println!("... and {} more", outcome.hits.len() - SHOWN);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_recipe(
    settings: &Settings,
    cycle: &str,
    reps: usize,
    template: Option<String>,
) -> Result<ExitCode> {
    let template = resolve_template(template, settings)?;
    let query = build_query(template, cycle, reps).map_err(|e| usage(e.to_string()))?;
    // Byte-exact on stdout: no trailing newline.
    print!("{}", query.rendered);
    use std::io::Write;
    std::io::stdout().flush()?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_probe(
    settings: &Settings,
    client_args: ClientArgs,
    prompt: Option<String>,
    cycle: Option<String>,
    reps: Option<usize>,
    template: Option<String>,
    sampler: SamplerArgs,
    run: RunArgs,
) -> Result<ExitCode> {
    let resolved = resolve_run(&run, settings)?;
    let built = build_client(&client_args, settings, resolved.options.timeout)?;
    let client = built.as_dyn();

    let vocab_size = match &built {
        BuiltClient::Sim(sim) => Some(sim.model().vocab().size()),
        BuiltClient::Remote(_) => None,
    };
    let config = resolve_sampler(sampler, settings, vocab_size)?;

    let prompt = match (prompt, cycle) {
        (Some(_), Some(_)) => return Err(usage("--prompt and --cycle are mutually exclusive")),
        (Some(raw), None) => ProbePrompt::Raw(raw),
        (None, Some(cycle_text)) => {
            let reps = settings
                .resolve_opt(reps, "reps")?
                .ok_or_else(|| usage("--cycle needs --reps"))?;
            let template = resolve_template(template, settings)?;
            ProbePrompt::Recipe(build_query(template, &cycle_text, reps).map_err(|e| usage(e.to_string()))?)
        }
        (None, None) => return Err(usage("need --prompt <text> or --cycle <text> --reps <n>")),
    };

    let header = serde_json::json!({
        "command": "probe",
        "model_id": client.id(),
        "tau": config.tau,
        "top_k": config.top_k as u64,
        "top_p": config.top_p,
        "seed": config.seed,
        "output_budget": resolved.options.output_budget,
        "c_max": resolved.options.c_max,
        "r_min": resolved.options.r_min,
    });
    let sink = open_sink(&resolved.records, header)?;

    let record = probe(client, &prompt, &config, &resolved.options)?;
    if let Some((sink, _)) = &sink {
        sink.append_record(&record)?;
    }

    println!(
        "model={} classification={} finish={} units={} duration_ms={}",
        record.model_id,
        record.classification,
        record.finish.as_str(),
        record.output.len(),
        record.duration.as_millis()
    );
    match &record.anomaly {
        Some(a) => println!(
            "anomaly: b={} c={} r_obs={} ell={} cycle=[{}]",
            a.b(),
            a.c(),
            a.r_obs(),
            a.ell(),
            join_symbols(a.cycle())
        ),
        None => println!("anomaly: none"),
    }
    if let Some(ell_star) = record.ell_star {
        println!("ell_star: {ell_star}");
    }
    if let Some(error) = &record.error {
        println!("error: {error}");
    }
    if let Some(trace) = &record.logprobs {
        if trace.len() >= 4 {
            let summary = logprob_summary(trace, 0.5)?;
            println!(
                "logprobs: first_q={:.4} last_q={:.4} converged={}",
                summary.first_quartile_mean, summary.last_quartile_mean, summary.converged
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    settings: &Settings,
    client_args: ClientArgs,
    cycle: Option<String>,
    template: Option<String>,
    temps: Option<String>,
    schedule: Option<String>,
    sampler: SamplerArgs,
    run: RunArgs,
) -> Result<ExitCode> {
    let resolved = resolve_run(&run, settings)?;
    let built = build_client(&client_args, settings, resolved.options.timeout)?;
    let client = built.as_dyn();
    let cycle = settings
        .resolve_opt(cycle, "cycle")?
        .ok_or_else(|| usage("sweep needs --cycle <text>"))?;
    let template = resolve_template(template, settings)?;
    let temps = resolve_temps(temps, settings)?;
    let schedule = resolve_schedule(schedule, settings)?;
    let config = resolve_sampler(sampler, settings, None)?;

    let header = serde_json::json!({
        "command": "sweep",
        "model_id": client.id(),
        "cycle": cycle,
        "template": template.name(),
        "temps": temps,
        "schedule": schedule,
        "top_k": config.top_k as u64,
        "top_p": config.top_p,
        "seed": config.seed,
        "output_budget": resolved.options.output_budget,
    });
    let sink = open_sink(&resolved.records, header)?;
    let mut session = ProbeSession::new(client, resolved.options);
    if let Some((sink, index)) = &sink {
        session = session.with_sink(sink, index);
    }

    let table = run_temperature_sweep(
        &session,
        &cycle,
        template,
        &config,
        &temps,
        &schedule,
        resolved.options.output_budget,
    )?;
    print!("{}", table.to_tsv());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_wordlist(
    settings: &Settings,
    client_args: ClientArgs,
    words: Option<PathBuf>,
    template: Option<String>,
    schedule: Option<String>,
    sampler: SamplerArgs,
    run: RunArgs,
) -> Result<ExitCode> {
    let resolved = resolve_run(&run, settings)?;
    let built = build_client(&client_args, settings, resolved.options.timeout)?;
    let client = built.as_dyn();
    let words_path = match words {
        Some(p) => p,
        None => settings
            .get_str("words")
            .map(PathBuf::from)
            .ok_or_else(|| usage("wordlist needs --words <file>"))?,
    };
    let text = std::fs::read_to_string(&words_path)
        .with_context(|| format!("reading word list {}", words_path.display()))?;
    let words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    let template = resolve_template(template, settings)?;
    let schedule = resolve_schedule(schedule, settings)?;
    let config = resolve_sampler(sampler, settings, None)?;

    let header = serde_json::json!({
        "command": "wordlist",
        "model_id": client.id(),
        "words": words_path.display().to_string(),
        "template": template.name(),
        "schedule": schedule,
        "tau": config.tau,
        "top_k": config.top_k as u64,
        "top_p": config.top_p,
        "seed": config.seed,
        "output_budget": resolved.options.output_budget,
    });
    let sink = open_sink(&resolved.records, header)?;
    let mut session = ProbeSession::new(client, resolved.options);
    if let Some((sink, index)) = &sink {
        session = session.with_sink(sink, index);
    }

    let outcome = run_wordlist_experiment(
        &session,
        &words,
        template,
        &config,
        &schedule,
        resolved.options.output_budget,
    )?;
    print!("{}", outcome.to_tsv());
    println!(
        "summary: success={:.1}% mean_reps={:.1}",
        outcome.summary.success_pct, outcome.summary.mean_reps
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_guard_demo(
    settings: &Settings,
    policy_path: Option<PathBuf>,
    stream_file: Option<PathBuf>,
) -> Result<ExitCode> {
    let policy_settings = match &policy_path {
        Some(p) => Settings::load(Some(p))?,
        None => Settings::default(),
    };
    let defaults = GuardPolicy::default();
    let lookup = |local: &Settings, key: &str| -> Result<Option<String>> {
        Ok(local
            .get_str(key)
            .or_else(|| settings.get_str(key))
            .map(str::to_string))
    };
    let parse_or = |raw: Option<String>, key: &str, default: usize| -> Result<usize> {
        match raw {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("bad `{key}` value `{v}`"))),
        }
    };
    let parse_bool_or = |raw: Option<String>, key: &str, default: bool| -> Result<bool> {
        match raw {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("bad `{key}` value `{v}`"))),
        }
    };
    let policy = GuardPolicy {
        hard_limit: parse_or(
            lookup(&policy_settings, "hard-limit")?,
            "hard-limit",
            defaults.hard_limit,
        )?,
        loop_c_max: parse_or(
            lookup(&policy_settings, "loop-c-max")?,
            "loop-c-max",
            defaults.loop_c_max,
        )?,
        loop_min_repeats: parse_or(
            lookup(&policy_settings, "loop-min-repeats")?,
            "loop-min-repeats",
            defaults.loop_min_repeats,
        )?,
        hard_limit_enabled: parse_bool_or(
            lookup(&policy_settings, "hard-limit-enabled")?,
            "hard-limit-enabled",
            defaults.hard_limit_enabled,
        )?,
        loop_detection_enabled: parse_bool_or(
            lookup(&policy_settings, "loop-detection-enabled")?,
            "loop-detection-enabled",
            defaults.loop_detection_enabled,
        )?,
    };

    let stream = match stream_file {
        Some(path) => read_stream_file(&path)?,
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            intern_tokens(&text)
        }
    };

    let mut guard = GuardState::new(policy).map_err(|e| usage(e.to_string()))?;
    for sym in stream {
        let display = sym.to_string();
        match guard.feed(sym)? {
            GuardAction::Pass => println!("PASS {display}"),
            GuardAction::Terminate(reason) => {
                println!("TERMINATE {reason}");
                break;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
