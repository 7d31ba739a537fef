use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use moelab::Word;

/// Values read from a `--config` JSON file; every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub k: Option<usize>,
    pub n: Option<SizeList>,
    pub seeds: Option<SeedList>,
    pub starts: Option<usize>,
    pub max_iters: Option<usize>,
    pub samples: Option<usize>,
    pub matrices: Option<usize>,
    pub moment_order: Option<usize>,
    pub words: Option<WordList>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub slack_256: Option<f64>,
    pub slack_512: Option<f64>,
    pub distribution: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "k",
    "n",
    "seeds",
    "starts",
    "max_iters",
    "samples",
    "matrices",
    "moment_order",
    "words",
    "tolerances",
    "out",
    "format",
    "threads",
];

const KNOWN_TOLERANCES: &[&str] = &["slack_256", "slack_512", "distribution"];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses a config file. Unknown keys are returned as warnings.
pub fn load_config(path: &Path) -> Result<(ConfigFile, Vec<String>), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| ConfigError(format!("config {}: {}", path.display(), e.0)))
}

pub fn parse_config(text: &str) -> Result<(ConfigFile, Vec<String>), ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        ConfigError(format!(
            "malformed JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    let Value::Object(map) = &value else {
        return Err(ConfigError("top level must be a JSON object".into()));
    };
    let mut warnings = Vec::new();
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            warnings.push(format!("unknown config key `{key}` ignored"));
        }
    }
    if let Some(Value::Object(tol)) = map.get("tolerances") {
        for key in tol.keys() {
            if !KNOWN_TOLERANCES.contains(&key.as_str()) {
                warnings.push(format!("unknown config key `tolerances.{key}` ignored"));
            }
        }
    }
    let config =
        serde_json::from_value(value).map_err(|e| ConfigError(format!("invalid value: {e}")))?;
    Ok((config, warnings))
}

/// Matrix sizes, written `a,b,c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SizeList(pub Vec<usize>);

impl FromStr for SizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let sizes = s
            .split(',')
            .map(|p| {
                let n: usize = p
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{p}` is not a size"))?;
                if n == 0 {
                    return Err("sizes must be positive".to_owned());
                }
                Ok(n)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SizeList(sizes))
    }
}

impl fmt::Display for SizeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl<'de> Deserialize<'de> for SizeList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(usize),
            Many(Vec<usize>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(n) => Ok(SizeList(vec![n])),
            Raw::Many(v) => Ok(SizeList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Seeds, written `i..j` (inclusive), `a,b,c` or a single integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |p: &str| format!("`{p}` is not a seed");
        if let Some((lo, hi)) = s.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|_| bad(lo))?;
            let hi: u64 = hi.trim().parse().map_err(|_| bad(hi))?;
            if lo > hi {
                return Err(format!("empty seed range {s}"));
            }
            return Ok(SeedList((lo..=hi).collect()));
        }
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad(p)))
            .collect::<Result<_, _>>()
            .map(SeedList)
    }
}

impl fmt::Display for SeedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.0;
        let contiguous = v.len() > 1 && v.windows(2).all(|w| w[1] == w[0] + 1);
        if contiguous {
            write!(f, "{}..{}", v[0], v[v.len() - 1])
        } else {
            let parts: Vec<String> = v.iter().map(u64::to_string).collect();
            f.write_str(&parts.join(","))
        }
    }
}

impl<'de> Deserialize<'de> for SeedList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(u64),
            Many(Vec<u64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(s) => Ok(SeedList(vec![s])),
            Raw::Many(v) => Ok(SeedList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Words separated by `;`, letters by `,`; `e` is the empty word.
/// `1,2,-1,-2` is `u_1 u_2 u_1^{-1} u_2^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordList(pub Vec<Vec<i32>>);

impl WordList {
    pub fn reduced(&self, k: usize) -> moelab::Result<Vec<Word>> {
        self.0.iter().map(|w| Word::reduce(w, k)).collect()
    }
}

impl Serialize for WordList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl FromStr for WordList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';')
            .map(|w| {
                let w = w.trim();
                if w == "e" || w.is_empty() {
                    return Ok(Vec::new());
                }
                w.split(',')
                    .map(|l| {
                        let letter: i32 = l
                            .trim()
                            .parse()
                            .map_err(|_| format!("`{l}` is not a letter"))?;
                        if letter == 0 {
                            return Err("letter 0 does not exist".to_owned());
                        }
                        Ok(letter)
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(WordList)
    }
}

impl fmt::Display for WordList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self
            .0
            .iter()
            .map(|w| {
                if w.is_empty() {
                    "e".to_owned()
                } else {
                    w.iter().map(i32::to_string).collect::<Vec<_>>().join(",")
                }
            })
            .collect();
        f.write_str(&words.join(";"))
    }
}

impl<'de> Deserialize<'de> for WordList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Nested(Vec<Vec<i32>>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Nested(v) => Ok(WordList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_are_inclusive() {
        assert_eq!("0..4".parse::<SeedList>().unwrap().0, vec![0, 1, 2, 3, 4]);
        assert_eq!("3".parse::<SeedList>().unwrap().0, vec![3]);
        assert_eq!("5,1".parse::<SeedList>().unwrap().0, vec![5, 1]);
        assert!("4..1".parse::<SeedList>().is_err());
        assert_eq!(SeedList(vec![0, 1, 2]).to_string(), "0..2");
        assert_eq!(SeedList(vec![7]).to_string(), "7");
    }

    #[test]
    fn size_lists() {
        assert_eq!("64,128".parse::<SizeList>().unwrap().0, vec![64, 128]);
        assert!("64,x".parse::<SizeList>().is_err());
        assert!("0".parse::<SizeList>().is_err());
    }

    #[test]
    fn word_lists_round_trip() {
        let w: WordList = "e;1,1;1,2,-1,-2".parse().unwrap();
        assert_eq!(w.0, vec![vec![], vec![1, 1], vec![1, 2, -1, -2]]);
        assert_eq!(w.to_string(), "e;1,1;1,2,-1,-2");
        assert!("1,0".parse::<WordList>().is_err());
    }

    #[test]
    fn empty_config_is_all_defaults() {
        let (c, warnings) = parse_config("{}").unwrap();
        assert!(c.k.is_none() && c.n.is_none() && c.seeds.is_none());
        assert!(warnings.is_empty());
    }

    #[test]
    fn unknown_keys_warn() {
        let (c, warnings) =
            parse_config(r#"{"k": 8, "colour": 1, "tolerances": {"x": 1}}"#).unwrap();
        assert_eq!(c.k, Some(8));
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config("{\n  \"k\": 8,\n  oops\n}").unwrap_err();
        assert!(err.0.contains("line 3, column 3"), "{}", err.0);
    }

    #[test]
    fn list_values_accept_several_spellings() {
        let (c, _) =
            parse_config(r#"{"n": [64, 128], "seeds": "0..2", "words": "e;1,1"}"#).unwrap();
        assert_eq!(c.n.unwrap().0, vec![64, 128]);
        assert_eq!(c.seeds.unwrap().0, vec![0, 1, 2]);
        assert_eq!(c.words.unwrap().0.len(), 2);
        let (c, _) = parse_config(r#"{"n": 32, "seeds": [4, 9]}"#).unwrap();
        assert_eq!(c.n.unwrap().0, vec![32]);
        assert_eq!(c.seeds.unwrap().0, vec![4, 9]);
    }
}
