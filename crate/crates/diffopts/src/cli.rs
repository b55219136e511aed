// SPDX-License-Identifier: Apache-2.0

//! Experiment orchestration: flat key=value configs in, CSV artifacts out.
//!
//! A config names a map file, an option-discovery method with its
//! parameters, the learning protocol, a seed, and an output directory. A
//! full experiment writes six artifacts into the output directory:
//!
//! | File | Content |
//! |------|---------|
//! | `options.csv` | discovered option set, one row per (option, state) |
//! | `learning_curve.csv` | per-episode mean and std of steps to goal |
//! | `visitation.csv` | per-cell occupancy counts, raw and normalized |
//! | `pair_steps.csv` | steps-between-states summaries |
//! | `difficulty.txt` | the domain-difficulty index |
//! | `manifest.txt` | config echo plus a content hash of the map |
//!
//! Everything is deterministic in (config, seed): re-runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::agent::{q_learning_run, LearningConfig, RunLog};
use crate::env::{load_domain, Action, Domain, Wind};
use crate::graph::{build_directed_graph, build_state_graph, walk_matrices, StateGraph};
use crate::metrics::{domain_difficulty, learning_curve, steps_between_states, PairStepsReport};
use crate::options::{
    cover_options, discover_diffusion_options, eigenoptions, random_options, Method, OptionSet,
};
use crate::spectral::decompose;
use crate::{Error, Result};

/// Everything one experiment needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Path of the ASCII map file.
    pub domain_map: PathBuf,
    /// Optional wind perturbation.
    pub wind: Option<Wind>,
    /// Option-discovery method.
    pub method: Method,
    /// Diffusion scale for the diffusion method.
    pub t: u32,
    /// Option count for the baselines.
    pub k: usize,
    /// Learning protocol.
    pub learning: LearningConfig,
    /// Base random seed.
    pub seed: u64,
    /// Trials per ordered state pair in the pair-steps protocol.
    pub trials_per_pair: usize,
    /// Directory the artifacts are written into.
    pub output_dir: PathBuf,
}

/// Parse a flat key=value config.
///
/// One pair per line; `#` starts a comment; later keys override earlier
/// ones. `domain_map` and `method` are required, everything else has a
/// default.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut domain_map = None;
    let mut wind_direction = None;
    let mut wind_probability = None;
    let mut method = None;
    let mut t = 4u32;
    let mut k = 20usize;
    let mut learning = LearningConfig::default();
    let mut seed = 0u64;
    let mut trials_per_pair = 10usize;
    let mut output_dir = PathBuf::from("out");

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected key=value, got '{line}'",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad =
            |what: &str| Error::InvalidConfig(format!("line {}: {what} '{value}'", lineno + 1));
        match key {
            "domain_map" => domain_map = Some(PathBuf::from(value)),
            "wind_direction" => wind_direction = Some(Action::parse(value)?),
            "wind_probability" => {
                wind_probability = Some(value.parse::<f64>().map_err(|_| bad("bad probability"))?)
            }
            "method" => method = Some(Method::parse(value)?),
            "t" => t = value.parse().map_err(|_| bad("bad scale"))?,
            "k" => k = value.parse().map_err(|_| bad("bad option count"))?,
            "alpha" => learning.alpha = value.parse().map_err(|_| bad("bad alpha"))?,
            "gamma" => learning.gamma = value.parse().map_err(|_| bad("bad gamma"))?,
            "episodes" => learning.episodes = value.parse().map_err(|_| bad("bad episodes"))?,
            "max_steps_per_episode" => {
                learning.max_steps_per_episode =
                    value.parse().map_err(|_| bad("bad step budget"))?
            }
            "default_steps_on_failure" => {
                learning.default_steps_on_failure =
                    value.parse().map_err(|_| bad("bad failure sentinel"))?
            }
            "monte_carlo_iterations" => {
                learning.monte_carlo_iterations =
                    value.parse().map_err(|_| bad("bad iteration count"))?
            }
            "seed" => seed = value.parse().map_err(|_| bad("bad seed"))?,
            "trials_per_pair" => {
                trials_per_pair = value.parse().map_err(|_| bad("bad trial count"))?
            }
            "output_dir" => output_dir = PathBuf::from(value),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }

    let domain_map = domain_map
        .ok_or_else(|| Error::InvalidConfig("missing required key 'domain_map'".into()))?;
    let method =
        method.ok_or_else(|| Error::InvalidConfig("missing required key 'method'".into()))?;
    let wind = match (wind_direction, wind_probability) {
        (Some(direction), Some(probability)) => Some(Wind {
            direction,
            probability,
        }),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "wind needs both wind_direction and wind_probability".into(),
            ))
        }
    };
    learning.validate()?;
    if t == 0 {
        return Err(Error::InvalidConfig("t must be positive".into()));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if trials_per_pair == 0 {
        return Err(Error::InvalidConfig(
            "trials_per_pair must be positive".into(),
        ));
    }
    Ok(ExperimentConfig {
        domain_map,
        wind,
        method,
        t,
        k,
        learning,
        seed,
        trials_per_pair,
        output_dir,
    })
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidConfig(format!("cannot read config file '{}': {e}", path.display()))
    })?;
    parse_config(&text)
}

/// A loaded experiment: domain, graph, and discovered options.
pub struct Experiment {
    /// The parsed configuration.
    pub cfg: ExperimentConfig,
    /// Raw text of the map file.
    pub map_text: String,
    /// The loaded domain.
    pub domain: Domain,
    /// The state graph (directed when wind is active).
    pub graph: StateGraph,
    /// The discovered option set.
    pub options: OptionSet,
}

impl Experiment {
    /// Load the domain, build the graph, and discover options per config.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Experiment> {
        let map_text = fs::read_to_string(&cfg.domain_map).map_err(|e| {
            Error::InvalidConfig(format!(
                "cannot read map file '{}': {e}",
                cfg.domain_map.display()
            ))
        })?;
        let domain = load_domain(&map_text, cfg.wind)?;
        let graph = match cfg.wind {
            Some(w) if w.probability > 0.0 => {
                build_directed_graph(&domain.transition_matrix(), domain.states().to_vec())?
            }
            _ => build_state_graph(&domain)?,
        };
        let options = match cfg.method {
            Method::Diffusion => discover_diffusion_options(&graph, cfg.t)?,
            Method::Eigen => eigenoptions(&graph, cfg.k)?,
            Method::Cover => cover_options(&graph, cfg.k)?,
            Method::Random => random_options(&graph, cfg.k, cfg.seed)?,
            Method::None => OptionSet::empty(),
        };
        Ok(Experiment {
            cfg: cfg.clone(),
            map_text,
            domain,
            graph,
            options,
        })
    }

    /// Run the learning protocol: one Q-learning run per (goal, iteration),
    /// seeded `seed + flat trial index`, in parallel.
    pub fn learning_runs(&self) -> Result<Vec<RunLog>> {
        let goals = self.domain.goals();
        if goals.is_empty() {
            return Err(Error::InvalidConfig(
                "map defines no goal cells to learn toward".into(),
            ));
        }
        let mc = self.cfg.learning.monte_carlo_iterations;
        let trials: Vec<(usize, u64)> = goals
            .iter()
            .enumerate()
            .flat_map(|(gi, &goal)| (0..mc).map(move |it| (goal, (gi * mc + it) as u64)))
            .collect();
        trials
            .par_iter()
            .map(|&(goal, idx)| {
                q_learning_run(
                    &self.domain,
                    &self.options,
                    goal,
                    &self.cfg.learning,
                    self.cfg.seed.wrapping_add(idx),
                )
            })
            .collect()
    }

    /// Run the pair-steps protocol for this experiment's option set.
    pub fn pair_steps(&self) -> Result<PairStepsReport> {
        steps_between_states(
            &self.domain,
            &self.options,
            self.cfg.seed,
            self.cfg.trials_per_pair,
        )
    }

    /// Compute the domain-difficulty index.
    pub fn difficulty(&self) -> Result<f64> {
        let wm = walk_matrices(&self.graph)?;
        let sp = decompose(&self.graph, &wm)?;
        Ok(domain_difficulty(&sp, &self.graph))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_options_csv(dir: &Path, set: &OptionSet) -> Result<()> {
    let mut out = String::from("state,option,action,is_goal,in_initiation\n");
    for (id, opt) in set.options.iter().enumerate() {
        for s in 0..opt.termination.len() {
            let action = opt.policy[s].map(Action::name).unwrap_or("");
            let _ = writeln!(
                out,
                "{s},{id},{action},{},{}",
                (s == opt.goal) as u8,
                opt.in_initiation(s) as u8
            );
        }
    }
    fs::write(dir.join("options.csv"), out)?;
    Ok(())
}

fn write_learning_curve_csv(dir: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = String::from("episode,mean_steps,std_steps\n");
    for (i, (mean, std)) in curve.iter().enumerate() {
        let _ = writeln!(out, "{},{mean},{std}", i + 1);
    }
    fs::write(dir.join("learning_curve.csv"), out)?;
    Ok(())
}

fn write_visitation_csv(dir: &Path, domain: &Domain, logs: &[RunLog]) -> Result<()> {
    let mut counts = vec![0u64; domain.num_states()];
    for log in logs {
        for (s, &c) in log.visitation.iter().enumerate() {
            counts[s] += c;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0).max(1);
    let mut out = String::from("row,col,count,normalized_count\n");
    for (s, &(r, c)) in domain.states().iter().enumerate() {
        let normalized = counts[s] as f64 / max as f64;
        let _ = writeln!(out, "{r},{c},{},{normalized}", counts[s]);
    }
    fs::write(dir.join("visitation.csv"), out)?;
    Ok(())
}

fn pair_steps_rows(label: &str, report: &PairStepsReport) -> String {
    let mut out = String::new();
    let t = report.t.map(|t| t.to_string()).unwrap_or_default();
    for (scope, s) in [
        ("ordered", &report.ordered),
        ("unordered", &report.unordered),
    ] {
        let _ = writeln!(
            out,
            "{label},{t},{},{scope},{},{},{},{},{},{},{},{},{}",
            report.num_options,
            report.trials_per_pair,
            report.cap,
            report.capped_fraction,
            s.median,
            s.q1,
            s.q3,
            s.iqr,
            s.mean,
            s.std
        );
    }
    out
}

const PAIR_STEPS_HEADER: &str =
    "method,t,num_options,scope,trials_per_pair,cap,capped_fraction,median,q1,q3,iqr,mean,std\n";

fn write_pair_steps_csv(dir: &Path, report: &PairStepsReport) -> Result<()> {
    let mut out = String::from(PAIR_STEPS_HEADER);
    out.push_str(&pair_steps_rows(report.method.name(), report));
    fs::write(dir.join("pair_steps.csv"), out)?;
    Ok(())
}

fn manifest_text(cfg: &ExperimentConfig, map_text: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "domain_map={}", cfg.domain_map.display());
    match cfg.wind {
        Some(w) => {
            let _ = writeln!(out, "wind_direction={}", w.direction.name());
            let _ = writeln!(out, "wind_probability={}", w.probability);
        }
        None => {
            let _ = writeln!(out, "wind=none");
        }
    }
    let _ = writeln!(out, "method={}", cfg.method.name());
    let _ = writeln!(out, "t={}", cfg.t);
    let _ = writeln!(out, "k={}", cfg.k);
    let _ = writeln!(out, "alpha={}", cfg.learning.alpha);
    let _ = writeln!(out, "gamma={}", cfg.learning.gamma);
    let _ = writeln!(out, "episodes={}", cfg.learning.episodes);
    let _ = writeln!(
        out,
        "max_steps_per_episode={}",
        cfg.learning.max_steps_per_episode
    );
    let _ = writeln!(
        out,
        "default_steps_on_failure={}",
        cfg.learning.default_steps_on_failure
    );
    let _ = writeln!(
        out,
        "monte_carlo_iterations={}",
        cfg.learning.monte_carlo_iterations
    );
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "trials_per_pair={}", cfg.trials_per_pair);
    let _ = writeln!(out, "map_sha256={}", hex_sha256(map_text.as_bytes()));
    out
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, map_text: &str) -> Result<()> {
    fs::write(dir.join("manifest.txt"), manifest_text(cfg, map_text))?;
    Ok(())
}

/// Run a full experiment, writing all six artifacts into the output
/// directory. Deterministic: identical config and seed give byte-identical
/// files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<()> {
    let exp = Experiment::prepare(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    write_options_csv(&cfg.output_dir, &exp.options)?;
    let logs = exp.learning_runs()?;
    let curve = learning_curve(&logs)?;
    write_learning_curve_csv(&cfg.output_dir, &curve)?;
    write_visitation_csv(&cfg.output_dir, &exp.domain, &logs)?;
    let report = exp.pair_steps()?;
    write_pair_steps_csv(&cfg.output_dir, &report)?;
    fs::write(
        cfg.output_dir.join("difficulty.txt"),
        format!("{}\n", exp.difficulty()?),
    )?;
    write_manifest(&cfg.output_dir, cfg, &exp.map_text)?;
    Ok(())
}

/// Discover options only: writes `options.csv` and `manifest.txt`.
pub fn cmd_discover(cfg: &ExperimentConfig, dump_matrices: bool) -> Result<()> {
    let exp = Experiment::prepare(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    write_options_csv(&cfg.output_dir, &exp.options)?;
    write_manifest(&cfg.output_dir, cfg, &exp.map_text)?;
    if dump_matrices {
        write_matrix_dump(&cfg.output_dir, &exp)?;
    }
    Ok(())
}

/// Pair-steps only: writes `pair_steps.csv` and `manifest.txt`.
pub fn cmd_pairsteps(cfg: &ExperimentConfig) -> Result<()> {
    let exp = Experiment::prepare(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let report = exp.pair_steps()?;
    write_pair_steps_csv(&cfg.output_dir, &report)?;
    write_manifest(&cfg.output_dir, cfg, &exp.map_text)?;
    Ok(())
}

/// Difficulty only: writes `difficulty.txt` and `manifest.txt`.
pub fn cmd_difficulty(cfg: &ExperimentConfig) -> Result<()> {
    let exp = Experiment::prepare(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    fs::write(
        cfg.output_dir.join("difficulty.txt"),
        format!("{}\n", exp.difficulty()?),
    )?;
    write_manifest(&cfg.output_dir, cfg, &exp.map_text)?;
    Ok(())
}

/// Dump graph and spectrum matrices for debugging.
fn write_matrix_dump(dir: &Path, exp: &Experiment) -> Result<()> {
    let wm = walk_matrices(&exp.graph)?;
    let sp = decompose(&exp.graph, &wm)?;
    let write_matrix = |name: &str, m: &nalgebra::DMatrix<f64>| -> Result<()> {
        let mut out = String::new();
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        fs::write(dir.join(name), out)?;
        Ok(())
    };
    write_matrix("m.csv", exp.graph.m())?;
    write_matrix("w.csv", &wm.w)?;
    let mut pi = String::from("state,pi0\n");
    for s in 0..exp.graph.num_states() {
        let _ = writeln!(pi, "{s},{}", wm.pi0[s]);
    }
    fs::write(dir.join("pi0.csv"), pi)?;
    let mut spec = String::from("index,nu,omega\n");
    for i in 0..sp.num_states() {
        let _ = writeln!(spec, "{i},{},{}", sp.nus()[i], sp.omegas()[i]);
    }
    fs::write(dir.join("spectrum.csv"), spec)?;
    let shown = sp.num_states().min(5);
    let mut vecs = String::from("state");
    for i in 0..shown {
        let _ = write!(vecs, ",psi{i}");
    }
    vecs.push('\n');
    for s in 0..sp.num_states() {
        let _ = write!(vecs, "{s}");
        for i in 0..shown {
            let _ = write!(vecs, ",{}", sp.psi()[(s, i)]);
        }
        vecs.push('\n');
    }
    fs::write(dir.join("eigenvectors.csv"), vecs)?;
    Ok(())
}

/// Label a config's column group: method name plus its distinguishing
/// parameter.
fn method_label(cfg: &ExperimentConfig) -> String {
    match cfg.method {
        Method::Diffusion => format!("diffusion_t{}", cfg.t),
        Method::Eigen => format!("eigen_k{}", cfg.k),
        Method::Cover => format!("cover_k{}", cfg.k),
        Method::Random => format!("random_k{}", cfg.k),
        Method::None => "none".into(),
    }
}

/// Run several configs on one domain and merge their learning curves and
/// pair-steps summaries into `comparison.csv` in the first config's output
/// directory.
pub fn compare(cfgs: &[ExperimentConfig]) -> Result<PathBuf> {
    if cfgs.len() < 2 {
        return Err(Error::InvalidConfig(
            "compare needs at least two configs".into(),
        ));
    }
    let exps: Vec<Experiment> = cfgs
        .iter()
        .map(Experiment::prepare)
        .collect::<Result<_>>()?;
    let reference = hex_sha256(exps[0].map_text.as_bytes());
    for exp in &exps[1..] {
        if hex_sha256(exp.map_text.as_bytes()) != reference {
            return Err(Error::DomainMismatch(
                exps[0].cfg.domain_map.display().to_string(),
                exp.cfg.domain_map.display().to_string(),
            ));
        }
    }

    let mut labels: Vec<String> = exps.iter().map(|e| method_label(&e.cfg)).collect();
    for i in 0..labels.len() {
        let mut n = 1;
        for j in 0..i {
            if labels[j].split("__").next() == Some(&labels[i]) || labels[j] == labels[i] {
                n += 1;
            }
        }
        if n > 1 {
            labels[i] = format!("{}__{n}", labels[i]);
        }
    }

    let mut curves = Vec::new();
    let mut reports = Vec::new();
    for exp in &exps {
        let logs = exp.learning_runs()?;
        curves.push(learning_curve(&logs)?);
        reports.push(exp.pair_steps()?);
    }
    let episodes = curves[0].len();
    for curve in &curves {
        if curve.len() != episodes {
            return Err(Error::LengthMismatch(episodes, curve.len()));
        }
    }

    let mut out = String::from("episode");
    for label in &labels {
        let _ = write!(out, ",{label}_mean,{label}_std");
    }
    out.push('\n');
    for e in 0..episodes {
        let _ = write!(out, "{}", e + 1);
        for curve in &curves {
            let _ = write!(out, ",{},{}", curve[e].0, curve[e].1);
        }
        out.push('\n');
    }
    out.push('\n');
    out.push_str(PAIR_STEPS_HEADER);
    for (label, report) in labels.iter().zip(&reports) {
        out.push_str(&pair_steps_rows(label, report));
    }

    ensure_dir(&cfgs[0].output_dir)?;
    let path = cfgs[0].output_dir.join("comparison.csv");
    fs::write(&path, out)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("domain_map=maps/fourrooms.map\nmethod=diffusion\n").unwrap();
        assert_eq!(cfg.t, 4);
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.trials_per_pair, 10);
        assert_eq!(cfg.learning.episodes, 400);
        assert!(cfg.wind.is_none());
    }

    #[test]
    fn comments_and_overrides_are_handled() {
        let cfg = parse_config(
            "# experiment\ndomain_map=a.map\nmethod=eigen\nseed=1\nseed=9 # later wins\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.method, Method::Eigen);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(
            parse_config("domain_map=a.map\nmethod=diffusion\nfrobnicate=1\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_config("domain_map=a.map\nmethod=warp\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_config("method=diffusion\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_config("domain_map=a.map\nmethod=diffusion\nwind_direction=down\n"),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn missing_map_file_is_a_config_error_naming_the_file() {
        let cfg = parse_config("domain_map=/no/such/file.map\nmethod=diffusion\n").unwrap();
        match Experiment::prepare(&cfg) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("/no/such/file.map")),
            Err(other) => panic!("expected config error, got {other:?}"),
            Ok(_) => panic!("expected config error, got success"),
        }
    }
}
