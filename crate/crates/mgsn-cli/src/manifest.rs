//! Run manifests: everything needed to reproduce a run byte-for-byte.
//! The manifest is printed to standard error (with wall-clock time,
//! which is informational) and embedded in `--out` files without it.

use std::time::Duration;

use crate::io::kv;

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub flags: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub series_k_max: usize,
    pub series_rel_tol: f64,
    pub em_max_iter: Option<usize>,
    pub em_rel_tol: Option<f64>,
    pub paper_mode: bool,
    pub wall_clock: Duration,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            flags: Vec::new(),
            seed: None,
            series_k_max: 0,
            series_rel_tol: 0.0,
            em_max_iter: None,
            em_rel_tol: None,
            paper_mode: false,
            wall_clock: Duration::ZERO,
        }
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.flags.push((name.to_string(), value.to_string()));
        self
    }

    /// Reproducibility keys, without wall-clock.
    pub fn kv_lines(&self) -> Vec<(String, String)> {
        let mut pairs = vec![
            kv("manifest.command", &self.command),
            kv("manifest.artifact_version", env!("CARGO_PKG_VERSION")),
            kv("manifest.rng", format!("{} ({})", mgsn::RNG_ALGORITHM, mgsn::RNG_VERSION)),
        ];
        if let Some(seed) = self.seed {
            pairs.push(kv("manifest.seed", seed));
        }
        pairs.push(kv("manifest.series.k_max", self.series_k_max));
        pairs.push(kv("manifest.series.rel_tol", self.series_rel_tol));
        if let Some(it) = self.em_max_iter {
            pairs.push(kv("manifest.em.max_iter", it));
        }
        if let Some(t) = self.em_rel_tol {
            pairs.push(kv("manifest.em.rel_tol", t));
        }
        pairs.push(kv("manifest.paper_mode", self.paper_mode));
        for (name, value) in &self.flags {
            pairs.push(kv(format!("manifest.flag.{name}"), value));
        }
        pairs
    }

    /// Full manifest text for standard error.
    pub fn render(&self) -> String {
        let mut out = String::from("# run manifest\n");
        for (k, v) in self.kv_lines() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&format!("# manifest.wall_clock_s = {:.3}\n", self.wall_clock.as_secs_f64()));
        out
    }
}
