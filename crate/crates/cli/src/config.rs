//! Optional TOML job configuration. Any value given on the command line
//! takes precedence over the file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub run: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metrics: Option<Vec<String>>,
    pub recall_threshold: Option<u32>,
    pub predictors: Option<Vec<String>>,
    pub stopwords: Option<PathBuf>,
    pub bins: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: ParamsConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub wig_k: Option<usize>,
    pub nqc_k: Option<usize>,
    pub smv_k: Option<usize>,
    pub sigma_x_percent: Option<f64>,
    pub clarity_top_docs: Option<usize>,
    pub clarity_clip_terms: Option<usize>,
    pub corpus_score_depth: Option<usize>,
    pub score_shift: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// First of the flag value and the config value.
pub fn pick<T>(flag: Option<T>, file: &Option<T>) -> Option<T>
where
    T: Clone,
{
    flag.or_else(|| file.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg: FileConfig = toml::from_str(
            r#"
            run = "run.txt"
            metrics = ["ndcg@3"]
            [params]
            wig_k = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.run.as_deref(), Some(Path::new("run.txt")));
        assert_eq!(cfg.params.wig_k, Some(10));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn flags_win() {
        assert_eq!(pick(Some(3), &Some(5)), Some(3));
        assert_eq!(pick(None, &Some(5)), Some(5));
        assert_eq!(pick::<u8>(None, &None), None);
    }
}
