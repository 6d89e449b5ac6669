//! Experiment configuration and its flat `key = value` file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hemilearn::learner::{PolicyKind, ProjectionMode};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    LearnHm,
    IndGreedy,
    IndGreedySit,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LearnHm => "learnhm",
            Algorithm::IndGreedy => "indgreedy",
            Algorithm::IndGreedySit => "indgreedy-sit",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "learnhm" => Ok(Algorithm::LearnHm),
            "indgreedy" => Ok(Algorithm::IndGreedy),
            "indgreedy-sit" | "sit" => Ok(Algorithm::IndGreedySit),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which attribute model to build from synthetic restaurants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestaurantModel {
    /// Cuisine-dominated weights.
    Cuisine,
    /// Cuisine, popularity, location and noise mixed.
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceKind {
    Clustered { k: usize, r_in: f64 },
    Quantized { k: usize, step: f64 },
    Restaurants(RestaurantModel),
    /// Every off-diagonal distance equal to `value`.
    Uniform { value: f64 },
    /// A saved instance; `n` takes a seeded sample of its items.
    File(PathBuf),
}

impl InstanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceKind::Clustered { .. } => "clustered",
            InstanceKind::Quantized { .. } => "quantized",
            InstanceKind::Restaurants(RestaurantModel::Cuisine) => "restaurants-cuisine",
            InstanceKind::Restaurants(RestaurantModel::Mixed) => "restaurants-mixed",
            InstanceKind::Uniform { .. } => "uniform",
            InstanceKind::File(_) => "file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseSetting {
    None,
    Gaussian,
    Bounded,
}

impl FromStr for NoiseSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "noise-free" => Ok(NoiseSetting::None),
            "gaussian" | "truncated-gaussian" => Ok(NoiseSetting::Gaussian),
            "bounded" => Ok(NoiseSetting::Bounded),
            other => Err(format!("unknown noise kind `{other}`")),
        }
    }
}

impl NoiseSetting {
    pub fn name(self) -> &'static str {
        match self {
            NoiseSetting::None => "none",
            NoiseSetting::Gaussian => "gaussian",
            NoiseSetting::Bounded => "bounded",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    Eps,
    EtaBn,
    Sigma,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" => Ok(SweepAxis::N),
            "eps" => Ok(SweepAxis::Eps),
            "eta_bn" => Ok(SweepAxis::EtaBn),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

/// Parameters of one trial, apart from the algorithm and the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialParams {
    pub instance: InstanceKind,
    pub n: usize,
    pub r: f64,
    pub eps: f64,
    pub delta: f64,
    pub noise: NoiseSetting,
    pub sigma: f64,
    pub eta_bn: f64,
    pub projection: ProjectionMode,
    pub policy: PolicyKind,
    /// Record wall-clock times; off by default so that outputs are
    /// byte-identical across runs.
    pub timing: bool,
}

impl TrialParams {
    pub fn new(instance: InstanceKind, n: usize, eps: f64) -> Self {
        Self {
            instance,
            n,
            r: 1.0,
            eps,
            delta: 0.1,
            noise: NoiseSetting::None,
            sigma: 0.0,
            eta_bn: 0.0,
            projection: ProjectionMode::Fast,
            policy: PolicyKind::QClique,
            timing: false,
        }
    }

    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut s = self.clone();
        match axis {
            SweepAxis::N => s.n = value as usize,
            SweepAxis::Eps => s.eps = value,
            SweepAxis::EtaBn => s.eta_bn = value,
            SweepAxis::Sigma => s.sigma = value,
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub base: TrialParams,
    pub algorithms: Vec<Algorithm>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: u64,
    pub first_seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|(line, message)| BenchError::Config {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses the `key = value` format. Errors carry the 1-based line, or 0
    /// for a missing key.
    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut kv: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| (idx + 1, format!("expected `key = value`, got `{line}`")))?;
            let key = k.trim().to_ascii_lowercase();
            if kv.iter().any(|(_, existing, _)| *existing == key) {
                return Err((idx + 1, format!("duplicate key `{key}`")));
            }
            kv.push((idx + 1, key, v.trim().to_string()));
        }
        let find = |key: &str| kv.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
        fn num<T: FromStr>(entry: Option<(usize, &str)>, key: &str, default: Option<T>) -> Result<T, (usize, String)>
        where
            T::Err: fmt::Display,
        {
            match entry {
                Some((line, v)) => v.parse::<T>().map_err(|e| (line, format!("bad value for `{key}`: {e}"))),
                None => default.ok_or((0, format!("missing required key `{key}`"))),
            }
        }
        fn parsed<T: FromStr<Err = String>>(entry: Option<(usize, &str)>, default: T) -> Result<T, (usize, String)> {
            match entry {
                Some((line, v)) => v.parse::<T>().map_err(|e| (line, e)),
                None => Ok(default),
            }
        }

        const KNOWN: [&str; 21] = [
            "instance", "n", "k", "r_in", "step", "value", "instance_file", "algorithms", "axis", "values", "eps",
            "delta", "r", "noise", "sigma", "eta_bn", "seeds", "seed", "projection", "policy", "output",
        ];
        for (line, key, _) in &kv {
            if !KNOWN.contains(&key.as_str()) && key != "timing" {
                return Err((*line, format!("unknown key `{key}`")));
            }
        }

        let kind_entry = find("instance").ok_or((0, "missing required key `instance`".to_string()))?;
        let instance = match kind_entry.1.to_ascii_lowercase().as_str() {
            "clustered" => InstanceKind::Clustered {
                k: num(find("k"), "k", None)?,
                r_in: num(find("r_in"), "r_in", Some(0.1))?,
            },
            "quantized" => InstanceKind::Quantized {
                k: num(find("k"), "k", None)?,
                step: num(find("step"), "step", Some(1.0 / 64.0))?,
            },
            "restaurants-cuisine" => InstanceKind::Restaurants(RestaurantModel::Cuisine),
            "restaurants-mixed" => InstanceKind::Restaurants(RestaurantModel::Mixed),
            "uniform" => InstanceKind::Uniform {
                value: num(find("value"), "value", Some(0.5))?,
            },
            "file" => InstanceKind::File(PathBuf::from(
                find("instance_file").ok_or((kind_entry.0, "`instance = file` needs `instance_file`".to_string()))?.1,
            )),
            other => return Err((kind_entry.0, format!("unknown instance kind `{other}`"))),
        };

        let axis: SweepAxis = parsed(find("axis"), SweepAxis::N)?;
        let values: Vec<f64> = match find("values") {
            Some((line, v)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| (line, format!("bad sweep value `{x}`: {e}"))))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let n: Option<usize> = match find("n") {
            Some(e) => Some(num(Some(e), "n", None)?),
            None => None,
        };
        let values = if values.is_empty() {
            match (axis, n) {
                (SweepAxis::N, Some(n)) => vec![n as f64],
                _ => return Err((0, "missing sweep `values`".into())),
            }
        } else {
            values
        };
        if axis == SweepAxis::N && values.iter().any(|v| v.fract() != 0.0 || *v < 2.0) {
            return Err((find("values").map_or(0, |e| e.0), "item counts must be integers >= 2".into()));
        }
        let algorithms: Vec<Algorithm> = match find("algorithms") {
            Some((line, v)) => v
                .split(',')
                .map(|a| a.parse::<Algorithm>().map_err(|e| (line, e)))
                .collect::<Result<_, _>>()?,
            None => vec![Algorithm::LearnHm],
        };
        if algorithms.is_empty() {
            return Err((0, "at least one algorithm is required".into()));
        }
        let projection = match find("projection") {
            Some((line, v)) => parse_projection(v).map_err(|e| (line, e))?,
            None => ProjectionMode::Fast,
        };
        let policy = match find("policy") {
            Some((line, v)) => parse_policy(v).map_err(|e| (line, e))?,
            None => PolicyKind::QClique,
        };
        let seeds: u64 = num(find("seeds"), "seeds", Some(5))?;
        if seeds == 0 {
            return Err((find("seeds").map_or(0, |e| e.0), "seeds must be at least 1".into()));
        }
        let base = TrialParams {
            instance,
            n: n.unwrap_or(values[0] as usize),
            r: num(find("r"), "r", Some(1.0))?,
            eps: num(find("eps"), "eps", Some(0.01))?,
            delta: num(find("delta"), "delta", Some(0.1))?,
            noise: parsed(find("noise"), NoiseSetting::None)?,
            sigma: num(find("sigma"), "sigma", Some(0.0))?,
            eta_bn: num(find("eta_bn"), "eta_bn", Some(0.0))?,
            projection,
            policy,
            timing: num(find("timing"), "timing", Some(false))?,
        };
        Ok(Self {
            base,
            algorithms,
            axis,
            values,
            seeds,
            first_seed: num(find("seed"), "seed", Some(0))?,
            output: find("output").map(|(_, v)| PathBuf::from(v)),
        })
    }
}

pub fn parse_projection(s: &str) -> Result<ProjectionMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "full" => Ok(ProjectionMode::Full),
        "fast" => Ok(ProjectionMode::Fast),
        "none" => Ok(ProjectionMode::None),
        other => Err(format!("unknown projection mode `{other}`")),
    }
}

pub fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "qclique" => Ok(PolicyKind::QClique),
        "qgreedy" => Ok(PolicyKind::QGreedy),
        other => Err(format!("unknown policy `{other}`")),
    }
}

pub fn projection_name(p: ProjectionMode) -> &'static str {
    match p {
        ProjectionMode::Full => "full",
        ProjectionMode::Fast => "fast",
        ProjectionMode::None => "none",
    }
}

pub fn policy_name(p: PolicyKind) -> &'static str {
    match p {
        PolicyKind::QClique => "qclique",
        PolicyKind::QGreedy => "qgreedy",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# n-sweep on the cuisine model
instance = restaurants-cuisine
algorithms = learnhm, indgreedy, indgreedy-sit
axis = n
values = 25, 50, 100
eps = 0.01
seeds = 3
seed = 7
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.algorithms.len(), 3);
        assert_eq!(c.values, vec![25.0, 50.0, 100.0]);
        assert_eq!(c.seeds, 3);
        assert_eq!(c.first_seed, 7);
        assert_eq!(c.base.instance, InstanceKind::Restaurants(RestaurantModel::Cuisine));
        assert!(!c.base.timing);
    }

    #[test]
    fn reports_line_of_bad_value() {
        let err = ExperimentConfig::parse("instance = clustered\nk = 5\neps = abc\nn = 10\n").unwrap_err();
        assert_eq!(err.0, 3);
        let err = ExperimentConfig::parse("instance = clustered\nk = 5\nbogus = 1\n").unwrap_err();
        assert_eq!(err.0, 3);
    }

    #[test]
    fn enforces_invariants() {
        assert!(ExperimentConfig::parse("instance = uniform\nn = 5\nalgorithms = \n").is_err());
        assert!(ExperimentConfig::parse("instance = uniform\nn = 5\nseeds = 0\n").is_err());
        assert!(ExperimentConfig::parse("instance = uniform\naxis = eps\n").is_err());
        let ok = ExperimentConfig::parse("instance = uniform\nn = 5\n").unwrap();
        assert_eq!(ok.values, vec![5.0]);
    }
}
