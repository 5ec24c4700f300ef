//! `nonhalt`: detect repetition cycles in generation streams, certify
//! non-halting behaviour against context-window thresholds, drive simulator
//! and endpoint probes, and demo the stream guard.

mod commands;
mod model_spec;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "nonhalt", version, about)]
struct Cli {
    /// Key/value config file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy, Default)]
struct SamplerArgs {
    /// Temperature; 0 is greedy argmax (default 0).
    #[arg(long)]
    tau: Option<f64>,

    /// Top-k truncation; 0 resolves to the full vocabulary (default 0).
    #[arg(long)]
    top_k: Option<usize>,

    /// Nucleus (top-p) truncation (default 1).
    #[arg(long)]
    top_p: Option<f64>,

    /// Seed for the sampled draw (default 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
struct ClientArgs {
    /// Remote model name on an OpenAI-compatible endpoint.
    #[arg(long)]
    model: Option<String>,

    /// Endpoint base URL; falls back to NONHALT_BASE_URL.
    #[arg(long)]
    base_url: Option<String>,

    /// Simulator spec: fixture path, hash-echo:<seed>:<n>:<w>[:beta[:eos]],
    /// or `inversion-fixture`. Mutually exclusive with --model.
    #[arg(long)]
    sim: Option<String>,

    /// Declared context size in output units (enables CERTIFIED for remote
    /// clients; simulators declare their own).
    #[arg(long)]
    w: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// Output budget in detection units (default 4096).
    #[arg(long)]
    budget: Option<usize>,

    /// Largest cycle size the detector tracks (default 64).
    #[arg(long)]
    c_max: Option<usize>,

    /// Minimum observed full repetitions before reporting (default 2).
    #[arg(long)]
    r_min: Option<usize>,

    /// Segmentation of online output: chunk | word | char (default word
    /// for remote clients, chunk for simulators).
    #[arg(long)]
    segment: Option<String>,

    /// Wall-clock timeout per probe, seconds (default 300).
    #[arg(long)]
    timeout_s: Option<u64>,

    /// JSON Lines record file; runs resume from it when it exists.
    #[arg(long)]
    records: Option<PathBuf>,

    /// Concurrent probes for batch runners (default 4).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Batch cycle detection over a stream file; prints the anomaly or NONE.
    Detect {
        /// Whitespace-separated symbols, UTF-8.
        stream_file: PathBuf,
        #[arg(long)]
        c_max: Option<usize>,
        #[arg(long)]
        r_min: Option<usize>,
    },

    /// Detect on a stream file, then apply the non-halting threshold.
    Certify {
        stream_file: PathBuf,
        /// Context size of the model that produced the stream.
        #[arg(long)]
        w: usize,
        /// Assert the producing sampler was deterministic.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        c_max: Option<usize>,
        #[arg(long)]
        r_min: Option<usize>,
    },

    /// Generate from a simulator model.
    Simulate {
        /// Model spec (fixture path, hash-echo:..., inversion-fixture).
        #[arg(long)]
        model: String,
        /// Prompt as whitespace-separated symbol ids.
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        max_len: Option<usize>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },

    /// Randomized oracle suite over seeded hash-echo models; any violation
    /// of the certification consequences is an implementation bug.
    VerifyTheorem {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        w_min: Option<usize>,
        #[arg(long)]
        w_max: Option<usize>,
        #[arg(long)]
        vocab_max: Option<usize>,
        #[arg(long)]
        extension_cycles: Option<usize>,
        #[arg(long)]
        prompt_len_max: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        echo_beta: Option<f64>,
        #[arg(long)]
        eos_bias: Option<f64>,
    },

    /// Search a simulator for prompts whose generation certifies
    /// non-halting with the target symbol in the cycle.
    Invert {
        #[arg(long)]
        model: String,
        /// Target symbol id.
        #[arg(long)]
        target: u32,
        /// Prompt length in symbols.
        #[arg(long)]
        len: Option<usize>,
        /// exhaustive | random | hill-climb.
        #[arg(long)]
        strategy: Option<String>,
        /// Candidate-evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Seed for the random / hill-climb strategies.
        #[arg(long)]
        search_seed: Option<u64>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },

    /// Render an attack query (byte-exact, no trailing newline).
    Recipe {
        #[arg(long)]
        cycle: String,
        #[arg(long)]
        reps: usize,
        /// many-words | words.
        #[arg(long)]
        template: Option<String>,
    },

    /// One probe against a simulator or remote endpoint.
    Probe {
        #[command(flatten)]
        client: ClientArgs,
        /// Raw prompt text (mutually exclusive with --cycle).
        #[arg(long)]
        prompt: Option<String>,
        /// Cycle text for a recipe-rendered prompt.
        #[arg(long)]
        cycle: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        template: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        run: RunArgs,
    },

    /// Repetition escalation across a temperature range; emits a
    /// plot-ready table.
    Sweep {
        #[command(flatten)]
        client: ClientArgs,
        #[arg(long)]
        cycle: Option<String>,
        #[arg(long)]
        template: Option<String>,
        /// Comma-separated temperatures (default 0,0.1,...,1).
        #[arg(long)]
        temps: Option<String>,
        /// Comma-separated repetition schedule, or `default`.
        #[arg(long)]
        schedule: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        run: RunArgs,
    },

    /// Escalation for every word of a list at a fixed config; emits
    /// per-word rows (0 = failure) and summary statistics.
    Wordlist {
        #[command(flatten)]
        client: ClientArgs,
        /// UTF-8 word list, one word per line.
        #[arg(long)]
        words: Option<PathBuf>,
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        run: RunArgs,
    },

    /// Feed a stream through the guard and print the action trace.
    GuardDemo {
        /// Guard policy file (key/value); defaults otherwise.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Stream file; stdin when omitted.
        stream_file: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Die quietly when the read end of a pipe closes, like other unix tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
