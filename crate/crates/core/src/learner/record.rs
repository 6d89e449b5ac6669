use crate::metric::format_decimal;

/// Column names of [`ResultRow::fields`].
pub const RESULT_HEADER: [&str; 17] = [
    "algo",
    "policy",
    "projection_mode",
    "n",
    "K",
    "r",
    "r_in",
    "eps",
    "delta",
    "noise_kind",
    "sigma",
    "eta_bn",
    "seed",
    "iterations",
    "user_queries",
    "linf_error",
    "wall_clock_ms",
];

/// One learner run, flattened for CSV output. Parameters that do not apply
/// are left empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultRow {
    pub algo: String,
    pub policy: String,
    pub projection_mode: String,
    pub n: usize,
    pub k: Option<usize>,
    pub r: f64,
    pub r_in: Option<f64>,
    pub eps: f64,
    pub delta: Option<f64>,
    pub noise_kind: String,
    pub sigma: Option<f64>,
    pub eta_bn: Option<f64>,
    pub seed: u64,
    pub iterations: u64,
    pub user_queries: u64,
    pub linf_error: Option<f64>,
    pub wall_clock_ms: Option<f64>,
}

impl ResultRow {
    pub fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(format_decimal).unwrap_or_default();
        vec![
            self.algo.clone(),
            self.policy.clone(),
            self.projection_mode.clone(),
            self.n.to_string(),
            self.k.map(|k| k.to_string()).unwrap_or_default(),
            format_decimal(self.r),
            opt(self.r_in),
            format_decimal(self.eps),
            opt(self.delta),
            self.noise_kind.clone(),
            opt(self.sigma),
            opt(self.eta_bn),
            self.seed.to_string(),
            self.iterations.to_string(),
            self.user_queries.to_string(),
            opt(self.linf_error),
            self.wall_clock_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_count_matches_header() {
        let row = ResultRow {
            algo: "indgreedy".into(),
            n: 10,
            r: 1.0,
            eps: 0.01,
            ..Default::default()
        };
        let f = row.fields();
        assert_eq!(f.len(), RESULT_HEADER.len());
        assert_eq!(f[7], "0.01");
        assert_eq!(f[16], "");
    }
}
