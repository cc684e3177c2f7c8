//! Run configuration: a flat `key = value` file overlaid by command line
//! flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rdseg_core::{SolverParams, StopNorm};

use crate::Failure;

pub const KEYS: &[&str] = &[
    "image",
    "fitting",
    "c1",
    "c2",
    "mask",
    "markers",
    "gamma",
    "normalize",
    "lambda",
    "theta",
    "tau",
    "delta",
    "epsilon",
    "max_outer",
    "inner_steps",
    "alpha",
    "stop_norm",
    "q",
    "q_list",
    "gt_max_outer",
    "repeats",
    "output_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FittingKind {
    ChanVese,
    Selective,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub image_path: PathBuf,
    pub fitting_kind: FittingKind,
    /// Foreground/background constants; estimated from `mask_path` when
    /// absent.
    pub constants: Option<(f64, f64)>,
    pub mask_path: Option<PathBuf>,
    pub markers_path: Option<PathBuf>,
    pub gamma: f64,
    pub normalize: bool,
    pub params: SolverParams,
    pub q: f64,
    pub q_list: Vec<f64>,
    pub gt_max_outer: usize,
    pub repeats: usize,
    pub output_dir: PathBuf,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Failure::Usage(format!(
                "config line {}: unknown key {key:?}",
                n + 1
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Reads a config file. Relative paths in it are taken relative to the
/// file's own directory.
pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = parse_file(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for key in ["image", "mask", "markers", "output_dir"] {
        if let Some(v) = map.get_mut(key) {
            if Path::new(v.as_str()).is_relative() {
                *v = base.join(v.as_str()).display().to_string();
            }
        }
    }
    Ok(map)
}

fn value<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|raw| {
            raw.parse()
                .map_err(|e| Failure::Usage(format!("bad value {raw:?} for {key}: {e}")))
        })
        .transpose()
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

pub fn parse_q_list(raw: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("bad q value {s:?} in q_list")))
        })
        .collect()
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, Failure> {
        let image_path: PathBuf = value(map, "image")?
            .ok_or_else(|| Failure::Usage("no input image (set image or --image)".into()))?;
        let fitting_kind = match map.get("fitting").map(String::as_str) {
            None | Some("chan_vese") | Some("chan-vese") => FittingKind::ChanVese,
            Some("selective") => FittingKind::Selective,
            Some(other) => {
                return Err(Failure::Usage(format!(
                    "unknown fitting {other:?} (expected chan_vese or selective)"
                )))
            }
        };
        let constants = match (value::<f64>(map, "c1")?, value::<f64>(map, "c2")?) {
            (Some(c1), Some(c2)) => Some((c1, c2)),
            (None, None) => None,
            _ => return Err(Failure::Usage("c1 and c2 must be given together".into())),
        };
        let mask_path: Option<PathBuf> = value(map, "mask")?;
        if constants.is_none() && mask_path.is_none() {
            return Err(Failure::Usage(
                "intensity constants missing: set c1 and c2, or a mask to estimate them from"
                    .into(),
            ));
        }
        let markers_path: Option<PathBuf> = value(map, "markers")?;
        if fitting_kind == FittingKind::Selective && markers_path.is_none() {
            return Err(Failure::Usage(
                "selective fitting needs a markers file".into(),
            ));
        }
        let normalize = match map.get("normalize") {
            None => false,
            Some(raw) => parse_bool(raw)
                .ok_or_else(|| Failure::Usage(format!("bad value {raw:?} for normalize")))?,
        };

        let d = SolverParams::default();
        let params = SolverParams {
            lambda: value(map, "lambda")?.unwrap_or(d.lambda),
            theta: value(map, "theta")?.unwrap_or(d.theta),
            tau: value(map, "tau")?.unwrap_or(d.tau),
            delta: value(map, "delta")?.unwrap_or(d.delta),
            epsilon: value(map, "epsilon")?.unwrap_or(d.epsilon),
            max_outer: value(map, "max_outer")?.unwrap_or(d.max_outer),
            inner_steps: value(map, "inner_steps")?.unwrap_or(d.inner_steps),
            alpha: value(map, "alpha")?.unwrap_or(d.alpha),
            stop_norm: value::<StopNorm>(map, "stop_norm")?.unwrap_or(d.stop_norm),
        };
        params
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;

        let q = value(map, "q")?.unwrap_or(1.0);
        let q_list = match map.get("q_list") {
            Some(raw) => parse_q_list(raw)?,
            None => (0..=10).map(|k| k as f64 / 10.0).collect(),
        };
        if q_list.is_empty() {
            return Err(Failure::Usage("q_list is empty".into()));
        }
        if let Some(bad) = std::iter::once(&q)
            .chain(&q_list)
            .find(|q| !(0.0..=1.0).contains(*q))
        {
            return Err(Failure::Usage(format!("q = {bad} outside [0, 1]")));
        }
        let gamma: f64 = value(map, "gamma")?.unwrap_or(0.0);
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Failure::Usage(format!("gamma = {gamma} must be >= 0")));
        }

        Ok(Self {
            image_path,
            fitting_kind,
            constants,
            mask_path,
            markers_path,
            gamma,
            normalize,
            params,
            q,
            q_list,
            gt_max_outer: value(map, "gt_max_outer")?.unwrap_or(d.max_outer),
            repeats: value::<usize>(map, "repeats")?.unwrap_or(1).max(1),
            output_dir: value(map, "output_dir")?.unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    /// `name` inside the output directory.
    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BTreeMap<String, String> {
        parse_file("image = a.pgm\nc1 = 0.8\nc2 = 0.2\n").unwrap()
    }

    #[test]
    fn comments_blank_lines_and_dashes() {
        let map = parse_file("# run\n\nimage = x.pgm  # input\nmax-outer = 7\n").unwrap();
        assert_eq!(map["image"], "x.pgm");
        assert_eq!(map["max_outer"], "7");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(parse_file("lamda = 3"), Err(Failure::Usage(_))));
        assert!(matches!(parse_file("lambda 3"), Err(Failure::Usage(_))));
    }

    #[test]
    fn defaults_follow_solver_defaults() {
        let cfg = RunConfig::from_map(&base()).unwrap();
        assert_eq!(cfg.params, SolverParams::default());
        assert_eq!(cfg.q, 1.0);
        assert_eq!(cfg.q_list.len(), 11);
        assert_eq!(cfg.fitting_kind, FittingKind::ChanVese);
        assert_eq!(cfg.constants, Some((0.8, 0.2)));
    }

    #[test]
    fn validation() {
        let with = |k: &str, v: &str| {
            let mut m = base();
            m.insert(k.into(), v.into());
            RunConfig::from_map(&m)
        };
        assert!(with("fitting", "selective").is_err());
        assert!(with("tau", "0.5").is_err());
        assert!(with("q_list", "0.1,1.2").is_err());
        assert!(with("q_list", "0.1,x").is_err());
        assert!(with("stop_norm", "l1").is_err());
        assert!(with("normalize", "maybe").is_err());
        assert_eq!(
            with("q_list", "0, 0.5,1").unwrap().q_list,
            vec![0.0, 0.5, 1.0]
        );
        let mut m = base();
        m.remove("c2");
        assert!(RunConfig::from_map(&m).is_err());
        m.remove("c1");
        assert!(RunConfig::from_map(&m).is_err());
        m.insert("mask".into(), "m.pgm".into());
        assert!(RunConfig::from_map(&m).unwrap().constants.is_none());
    }
}
