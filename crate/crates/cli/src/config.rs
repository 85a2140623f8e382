//! Run configuration: defaults, the line-oriented `key = value` config file,
//! and flag overrides (flags win).

use std::path::{Path, PathBuf};

use factored_lm::{Error, Result, TShirtConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingMode {
    BinaryIndex,
    OneHot,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out: PathBuf,
    pub min_count: u64,
    pub encoding_mode: EncodingMode,
    pub width: usize,
    pub markers: bool,
    pub split_sentences: bool,
    pub tshirt: TShirtConfig,
    pub hidden: usize,
    pub train_cfg: TrainConfig,
    pub skip_eos: bool,
    /// Class count for the class-layer cost estimate; sqrt(|V|) when unset.
    pub classes: Option<usize>,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            validation: None,
            test: None,
            out: PathBuf::from("out"),
            min_count: 5,
            encoding_mode: EncodingMode::BinaryIndex,
            width: 15,
            markers: true,
            split_sentences: false,
            tshirt: TShirtConfig::default(),
            hidden: 48,
            train_cfg: TrainConfig::default(),
            skip_eos: false,
            classes: None,
            top_k: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "train" => self.train = Some(PathBuf::from(value)),
            "validation" => self.validation = Some(PathBuf::from(value)),
            "test" => self.test = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "min_count" => self.min_count = parse(key, value)?,
            "encoding" => {
                self.encoding_mode = match value {
                    "binary-index" => EncodingMode::BinaryIndex,
                    "one-hot" => EncodingMode::OneHot,
                    _ => return Err(Error::Config(format!("unknown encoding {value:?}"))),
                }
            }
            "width" => self.width = parse(key, value)?,
            "markers" => self.markers = parse_bool(key, value)?,
            "split_sentences" => self.split_sentences = parse_bool(key, value)?,
            "thresholds" => self.tshirt.thresholds = parse_list(key, value)?,
            "factors" => self.tshirt.factors = parse_list(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "lr" => self.train_cfg.learning_rate = parse(key, value)?,
            "lr_decay" => self.train_cfg.lr_decay = parse(key, value)?,
            "bptt" => self.train_cfg.bptt_steps = parse(key, value)?,
            "epochs" => self.train_cfg.epochs = parse(key, value)?,
            "seed" => self.train_cfg.seed = parse(key, value)?,
            "init_scale" => self.train_cfg.init_scale = Some(parse(key, value)?),
            "clip" => self.train_cfg.clip_gradients = parse_bool(key, value)?,
            "shuffle" => self.train_cfg.shuffle = parse_bool(key, value)?,
            "skip_eos" => self.skip_eos = parse_bool(key, value)?,
            "classes" => self.classes = Some(parse(key, value)?),
            "top_k" => self.top_k = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn tokenizer_options(&self) -> factored_lm::TokenizerOptions {
        factored_lm::TokenizerOptions {
            split_sentences: self.split_sentences,
            sentence_markers: self.markers,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {value:?} for {key}"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<[usize; 7]> {
    let items: Vec<usize> = value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| Error::Config(format!("{key} needs exactly 7 comma-separated values")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\ntrain = corpus.txt\nmin_count = 3\nhidden = 32\n\
             factors = 9,8,7,6,5,4,3\nshuffle = true\nlr = 0.05\n",
        )
        .unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.train.as_deref(), Some(Path::new("corpus.txt")));
        assert_eq!(config.min_count, 3);
        assert_eq!(config.hidden, 32);
        assert_eq!(config.tshirt.factors, [9, 8, 7, 6, 5, 4, 3]);
        assert!(config.train_cfg.shuffle);
        assert_eq!(config.train_cfg.learning_rate, 0.05);
    }

    #[test]
    fn rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "mystery = 1\n").unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.category(), "config");
    }
}
