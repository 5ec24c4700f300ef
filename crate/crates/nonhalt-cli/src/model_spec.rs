//! Simulator model specs.
//!
//! Accepted forms:
//! * a path to a TABLE fixture file,
//! * `hash-echo:<seed>:<n>:<w>[:<echo_beta>[:<eos_bias>]]`,
//! * `inversion-fixture`, the shipped N=16, w=8 seeded model.

use anyhow::{anyhow, Context, Result};
use nonhalt_core::sim::{inversion_fixture, parse_table_fixture, HashEchoParams, SimModel};
use nonhalt_core::symbol::Vocab;

pub fn load_sim_model(spec: &str) -> Result<SimModel<f64>> {
    if spec == "inversion-fixture" {
        return Ok(inversion_fixture());
    }
    if let Some(rest) = spec.strip_prefix("hash-echo:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() < 3 || parts.len() > 5 {
            return Err(anyhow!(
                "hash-echo spec needs seed:n:w[:echo_beta[:eos_bias]], got `{spec}`"
            ));
        }
        let seed: u64 = parts[0].parse().context("hash-echo seed")?;
        let n: usize = parts[1].parse().context("hash-echo vocab size")?;
        let w: usize = parts[2].parse().context("hash-echo context size")?;
        let mut params = HashEchoParams::new(seed);
        if let Some(beta) = parts.get(3) {
            params.echo_beta = beta.parse().context("hash-echo echo_beta")?;
        }
        if let Some(bias) = parts.get(4) {
            params.eos_bias = bias.parse().context("hash-echo eos_bias")?;
        }
        let vocab = Vocab::numeric(n, n.saturating_sub(1))?;
        return Ok(SimModel::hash_echo(w, vocab, params)?);
    }
    let text = std::fs::read_to_string(spec)
        .with_context(|| format!("reading model fixture `{spec}`"))?;
    Ok(parse_table_fixture(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixture_loads() {
        let m = load_sim_model("inversion-fixture").unwrap();
        assert_eq!(m.vocab().size(), 16);
        assert_eq!(m.w(), 8);
    }

    #[test]
    fn hash_echo_spec_parses() {
        let m = load_sim_model("hash-echo:5:8:4").unwrap();
        assert_eq!(m.vocab().size(), 8);
        assert_eq!(m.w(), 4);
        assert!(load_sim_model("hash-echo:5").is_err());
        assert!(load_sim_model("hash-echo:x:8:4").is_err());
    }
}
