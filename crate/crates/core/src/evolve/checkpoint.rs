//! Versioned text checkpoints.
//!
//! ```text
//! QSNN-CHECKPOINT
//! version = 1
//! config_hash = <sha256 of the run configuration text>
//! config_lines = <n>
//! | <config line 1, split on '\n'>
//! ..
//! generation = <g>
//! rng_seed = <64 hex digits>
//! rng_stream = <u64>
//! rng_word_pos = <u128>
//! population = <n>
//! <objective> <bits>
//! ..
//! history = <n>
//! <generation> <best> <mean>
//! ..
//! checksum = <sha256 of every preceding byte>
//! ```
//!
//! Floats are written in shortest round-trip form, so a loaded state is
//! bit-identical to the saved one.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{GaRunState, GenerationStats, Individual};
use crate::error::{Error, Result};

const MAGIC: &str = "QSNN-CHECKPOINT";
const VERSION: u32 = 1;

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Fingerprint of a run configuration's canonical text.
pub fn config_hash(config_text: &str) -> String {
    sha256_hex(config_text.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub state: GaRunState,
}

impl Checkpoint {
    pub fn config_hash(&self) -> String {
        config_hash(&self.config_text)
    }

    pub fn verify_config(&self, config_text: &str) -> Result<()> {
        if config_hash(config_text) != self.config_hash() {
            return Err(Error::Checkpoint(
                "configuration hash differs from the one the checkpoint was written with".into(),
            ));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let s = &self.state;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "version = {VERSION}");
        let _ = writeln!(out, "config_hash = {}", self.config_hash());
        // Split on '\n' rather than lines() so a missing final newline survives.
        let lines: Vec<&str> = self.config_text.split('\n').collect();
        let _ = writeln!(out, "config_lines = {}", lines.len());
        for l in lines {
            let _ = writeln!(out, "| {l}");
        }
        let _ = writeln!(out, "generation = {}", s.generation);
        let seed = s.rng.get_seed();
        let _ = writeln!(
            out,
            "rng_seed = {}",
            seed.iter().map(|b| format!("{b:02x}")).collect::<String>()
        );
        let _ = writeln!(out, "rng_stream = {}", s.rng.get_stream());
        let _ = writeln!(out, "rng_word_pos = {}", s.rng.get_word_pos());
        let _ = writeln!(out, "population = {}", s.population.len());
        for ind in &s.population {
            let _ = writeln!(out, "{:?} {}", ind.objective, ind.chromosome);
        }
        let _ = writeln!(out, "history = {}", s.history.len());
        for h in &s.history {
            let _ = writeln!(out, "{} {:?} {:?}", h.generation, h.best, h.mean);
        }
        let sum = sha256_hex(out.as_bytes());
        let _ = writeln!(out, "checksum = {sum}");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let body_end = text
            .rfind("checksum = ")
            .ok_or_else(|| Error::Checkpoint("missing checksum".into()))?;
        let (body, tail) = text.split_at(body_end);
        let stored = tail["checksum = ".len()..].trim_end();
        if stored != sha256_hex(body.as_bytes()) {
            return Err(Error::Checkpoint(
                "checksum mismatch, file is corrupted".into(),
            ));
        }

        let mut lines = body.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("truncated before {what}")))
        };
        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(Error::parse(n, "not a checkpoint file"));
        }
        fn value<'a>(entry: (usize, &'a str), key: &str) -> Result<(usize, &'a str)> {
            let (n, l) = entry;
            l.strip_prefix(key)
                .and_then(|r| r.strip_prefix(" = "))
                .map(|v| (n, v))
                .ok_or_else(|| Error::parse(n, format!("expected '{key} = ..'")))
        }
        fn num<T: std::str::FromStr>((n, v): (usize, &str)) -> Result<T> {
            v.parse()
                .map_err(|_| Error::parse(n, format!("bad number '{v}'")))
        }

        let version: u32 = num(value(next("version")?, "version")?)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {VERSION})"
            )));
        }
        let (_, hash) = value(next("config_hash")?, "config_hash")?;
        let hash = hash.to_string();
        let config_lines: usize = num(value(next("config_lines")?, "config_lines")?)?;
        let mut config = Vec::with_capacity(config_lines);
        for _ in 0..config_lines {
            let (n, l) = next("config")?;
            let l = l
                .strip_prefix("| ")
                .or_else(|| (l == "|").then_some(""))
                .ok_or_else(|| Error::parse(n, "expected '| ' config line"))?;
            config.push(l);
        }
        let config_text = config.join("\n");
        if config_hash(&config_text) != hash {
            return Err(Error::Checkpoint(
                "embedded configuration does not match its hash".into(),
            ));
        }

        let generation: usize = num(value(next("generation")?, "generation")?)?;
        let (sn, seed_hex) = value(next("rng_seed")?, "rng_seed")?;
        if seed_hex.len() != 64 || !seed_hex.is_ascii() {
            return Err(Error::parse(sn, "rng_seed must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&seed_hex[2 * i..2 * i + 2], 16)
                .map_err(|_| Error::parse(sn, "rng_seed must be 64 hex digits"))?;
        }
        let stream: u64 = num(value(next("rng_stream")?, "rng_stream")?)?;
        let word_pos: u128 = num(value(next("rng_word_pos")?, "rng_word_pos")?)?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);

        let count: usize = num(value(next("population")?, "population")?)?;
        let mut population = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = next("individual")?;
            let (obj, bits) = l
                .split_once(' ')
                .ok_or_else(|| Error::parse(n, "expected '<objective> <bits>'"))?;
            population.push(Individual {
                objective: num((n, obj))?,
                chromosome: bits
                    .parse()
                    .map_err(|e: Error| Error::parse(n, e.to_string()))?,
            });
        }
        let count: usize = num(value(next("history")?, "history")?)?;
        let mut history = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = next("history entry")?;
            let parts: Vec<_> = l.split(' ').collect();
            if parts.len() != 3 {
                return Err(Error::parse(n, "expected '<generation> <best> <mean>'"));
            }
            history.push(GenerationStats {
                generation: num((n, parts[0]))?,
                best: num((n, parts[1]))?,
                mean: num((n, parts[2]))?,
            });
        }
        if let Some((n, _)) = lines.next() {
            return Err(Error::parse(n, "unexpected content before checksum"));
        }
        if population.is_empty() {
            return Err(Error::Checkpoint("empty population".into()));
        }
        Ok(Checkpoint {
            config_text,
            state: GaRunState {
                generation,
                population,
                rng,
                history,
            },
        })
    }
}

/// Writes atomically via a temporary sibling file.
pub fn checkpoint_save(path: &Path, state: &GaRunState, config_text: &str) -> Result<()> {
    let cp = Checkpoint {
        config_text: config_text.to_string(),
        state: state.clone(),
    };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, cp.to_text())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a checkpoint and refuses it unless it was written for `config_text`.
pub fn checkpoint_load(path: &Path, config_text: &str) -> Result<GaRunState> {
    let cp = Checkpoint::from_text(&fs::read_to_string(path)?)?;
    cp.verify_config(config_text)?;
    Ok(cp.state)
}
