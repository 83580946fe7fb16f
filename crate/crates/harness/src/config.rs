//! Experiment configuration.
//!
//! Configs are TOML with dotted keys; `channel.alpha = 2.5` and a
//! `[channel]` table with `alpha = 2.5` are the same thing. Every key is
//! listed in the README. Unknown keys are rejected with their full path and
//! all dBm values are converted to watts once, here.

use mcfl_core::fedlearn::{DlScheme, Scheme, UlScheme};
use mcfl_core::gapmodel::{GapProfile, TWO_CELL_KAPPA_BARS};
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Read { path: String, msg: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        msg: msg.into(),
    }
}

/// `10^((x − 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub cells: usize,
    pub devices_per_cell: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// BS coordinates in metres; defaults to the first `cells` sites of the
    /// four-cell layout.
    pub bs_positions: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub alpha: f64,
    pub beta_db: f64,
    pub shared_blocks: bool,
    pub redraw_each_round: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// BS budgets in watts.
    pub dl: Vec<f64>,
    /// Budget of the first `⌊K/2⌋` devices of every cell, watts.
    pub ul_low: f64,
    /// Budget of the remaining devices, watts.
    pub ul_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaPolicy {
    /// One learning rate per cell.
    Fixed(Vec<f64>),
    /// `η_m = scale / L` for every cell.
    Scale(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxCell {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    /// Raw labels `first_label .. first_label + classes` belong to the cell.
    pub first_label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        classes: usize,
        features: usize,
        train_per_label: usize,
        test_per_label: usize,
        spread: f64,
    },
    Idx {
        classes: usize,
        cells: Vec<IdxCell>,
        /// Keep at most this many training samples per cell (after label
        /// filtering), chosen at random.
        max_train: Option<usize>,
        max_test: Option<usize>,
    },
}

impl DataSource {
    pub fn classes(&self) -> usize {
        match self {
            DataSource::Synthetic { classes, .. } | DataSource::Idx { classes, .. } => *classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps_dl: f64,
    pub eps_ul: f64,
    pub tol: f64,
}

/// What a new repetition draws afresh; fixed items reuse the draw of the
/// base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RedrawConfig {
    pub topology: bool,
    pub data: bool,
    /// Channel and receiver-noise streams.
    pub channels: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoConfig {
    /// Benchmark rounds run before the sweep so models and gradients are
    /// not constant.
    pub warmup_rounds: usize,
    pub kappa_bars: Vec<f64>,
    pub baselines: Vec<Scheme>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub rounds: usize,
    pub repetitions: usize,
    pub schemes: Vec<Scheme>,
    pub topology: TopologyConfig,
    pub channel: ChannelConfig,
    pub power: PowerConfig,
    /// Device receiver noise, watts.
    pub noise_dl: f64,
    /// BS receiver noise, watts.
    pub noise_ul: f64,
    pub kappa: GapProfile<f64>,
    pub eta: EtaPolicy,
    pub batch_size: Option<usize>,
    pub data: DataSource,
    pub solver: SolverConfig,
    pub redraw: RedrawConfig,
    pub pareto: ParetoConfig,
}

impl ExperimentConfig {
    pub fn num_devices(&self) -> usize {
        self.topology.cells * self.topology.devices_per_cell
    }

    /// Device budgets in global device order.
    pub fn budget_ul(&self) -> Vec<f64> {
        let k = self.topology.devices_per_cell;
        (0..self.num_devices())
            .map(|i| if i % k < k / 2 { self.power.ul_low } else { self.power.ul_high })
            .collect()
    }
}

/// Tracks which keys of a table were read.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    known: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: Option<&'a Table>) -> Self {
        Self {
            path: path.to_string(),
            table,
            known: Vec::new(),
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn sub(&mut self, key: &'static str) -> Result<Section<'a>, ConfigError> {
        let path = self.key_path(key);
        match self.raw(key) {
            None => Ok(Section::new(&path, None)),
            Some(Value::Table(t)) => Ok(Section::new(&path, Some(t))),
            Some(_) => Err(invalid(path, "expected a table")),
        }
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(x)) => Ok(Some(*x as f64)),
            Some(_) => Err(invalid(self.key_path(key), "expected a number")),
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(invalid(self.key_path(key), "must be finite"));
        }
        Ok(v)
    }

    fn opt_usize(&mut self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(x)) if *x >= 0 => Ok(Some(*x as usize)),
            Some(_) => Err(invalid(self.key_path(key), "expected a nonnegative integer")),
        }
    }

    fn usize_or(&mut self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    fn bool_or(&mut self, key: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(invalid(self.key_path(key), "expected true or false")),
        }
    }

    fn opt_str(&mut self, key: &'static str) -> Result<Option<&'a str>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(invalid(self.key_path(key), "expected a string")),
        }
    }

    fn opt_f64_list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>, ConfigError> {
        let path = self.key_path(key);
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::Float(x) if x.is_finite() => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(invalid(format!("{path}[{i}]"), "expected a finite number")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(invalid(path, "expected an array of numbers")),
        }
    }

    fn opt_str_list(&mut self, key: &'static str) -> Result<Option<Vec<&'a str>>, ConfigError> {
        let path = self.key_path(key);
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::String(s) => Ok(s.as_str()),
                    _ => Err(invalid(format!("{path}[{i}]"), "expected a string")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(invalid(path, "expected an array of strings")),
        }
    }

    /// Rejects any key that was never asked for.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.known.contains(&k.as_str())) {
                return Err(invalid(self.key_path(k), "unknown key"));
            }
        }
        Ok(())
    }
}

fn positive(path: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(path, format!("must be positive, got {x}")))
    }
}

fn at_least_one(path: &str, x: usize) -> Result<usize, ConfigError> {
    if x >= 1 {
        Ok(x)
    } else {
        Err(invalid(path, "must be at least 1"))
    }
}

fn parse_schemes(path: &str, names: &[&str]) -> Result<Vec<Scheme>, ConfigError> {
    let mut out: Vec<Scheme> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let s: Scheme = name
            .parse()
            .map_err(|e: mcfl_core::Error| invalid(format!("{path}[{i}]"), e.to_string()))?;
        if out.contains(&s) {
            return Err(invalid(format!("{path}[{i}]"), format!("duplicate scheme {s}")));
        }
        out.push(s);
    }
    Ok(out)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses config text. Relative IDX paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let root: Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut top = Section::new("", Some(&root));

    let name = top.opt_str("name")?.unwrap_or("experiment").to_string();
    let seed = match top.raw("seed") {
        None => 1,
        Some(Value::Integer(x)) if *x >= 0 => *x as u64,
        Some(_) => return Err(invalid("seed", "expected a nonnegative integer")),
    };
    let rounds = at_least_one("rounds", top.usize_or("rounds", 100)?)?;
    let repetitions = at_least_one("repetitions", top.usize_or("repetitions", 10)?)?;
    let scheme_names = top
        .opt_str_list("schemes")?
        .unwrap_or_else(|| vec!["Benchmark", "DL-Opt & UL-Opt", "DL-Full & UL-Full"]);
    let schemes = parse_schemes("schemes", &scheme_names)?;
    if schemes.is_empty() {
        return Err(invalid("schemes", "at least one scheme is required"));
    }

    let mut t = top.sub("topology")?;
    let cells = at_least_one("topology.cells", t.usize_or("cells", 2)?)?;
    let devices_per_cell = at_least_one("topology.devices_per_cell", t.usize_or("devices_per_cell", 10)?)?;
    let radius_min = positive("topology.radius_min", t.f64_or("radius_min", 1.0)?)?;
    let radius_max = t.f64_or("radius_max", 20.0)?;
    if radius_max < radius_min {
        return Err(invalid("topology.radius_max", "must not be below topology.radius_min"));
    }
    let bs_positions = match t.raw("bs_positions") {
        None => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .enumerate()
                .map(|(i, v)| match v.as_array().map(|p| p.as_slice()) {
                    Some([x, y]) => {
                        let num = |v: &Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
                        match (num(x), num(y)) {
                            (Some(x), Some(y)) => Ok((x, y)),
                            _ => Err(invalid(format!("topology.bs_positions[{i}]"), "expected [x, y]")),
                        }
                    }
                    _ => Err(invalid(format!("topology.bs_positions[{i}]"), "expected [x, y]")),
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(_) => return Err(invalid("topology.bs_positions", "expected an array of [x, y] pairs")),
    };
    match &bs_positions {
        Some(p) if p.len() != cells => {
            return Err(invalid("topology.bs_positions", format!("{} positions for {cells} cells", p.len())))
        }
        None if cells > 4 => {
            return Err(invalid("topology.bs_positions", "required for more than four cells"));
        }
        _ => {}
    }
    t.finish()?;
    let topology = TopologyConfig {
        cells,
        devices_per_cell,
        radius_min,
        radius_max,
        bs_positions,
    };

    let mut c = top.sub("channel")?;
    let channel = ChannelConfig {
        alpha: positive("channel.alpha", c.f64_or("alpha", 2.5)?)?,
        beta_db: c.f64_or("beta_db", 5.0)?,
        shared_blocks: c.bool_or("shared_blocks", false)?,
        redraw_each_round: c.bool_or("redraw_each_round", true)?,
    };
    c.finish()?;

    let mut p = top.sub("power")?;
    let dl_dbm = p.opt_f64_list("dl_dbm")?.unwrap_or_else(|| {
        (0..cells).map(|m| if m == 0 || m == 3 { 40.0 } else { 30.0 }).collect()
    });
    if dl_dbm.len() != cells {
        return Err(invalid("power.dl_dbm", format!("{} values for {cells} cells", dl_dbm.len())));
    }
    let power = PowerConfig {
        dl: dl_dbm.into_iter().map(dbm_to_watts).collect(),
        ul_low: dbm_to_watts(p.f64_or("ul_low_dbm", 15.0)?),
        ul_high: dbm_to_watts(p.f64_or("ul_high_dbm", 30.0)?),
    };
    p.finish()?;

    let mut n = top.sub("noise")?;
    let noise_dl = dbm_to_watts(n.f64_or("dl_dbm", -110.0)?);
    let noise_ul = dbm_to_watts(n.f64_or("ul_dbm", -110.0)?);
    n.finish()?;

    let mut pr = top.sub("profile")?;
    let kappa_raw = pr
        .opt_f64_list("kappa")?
        .unwrap_or_else(|| vec![1.0 / cells as f64; cells]);
    if kappa_raw.len() != cells {
        return Err(invalid("profile.kappa", format!("{} weights for {cells} cells", kappa_raw.len())));
    }
    let kappa = GapProfile::new(kappa_raw).map_err(|e| invalid("profile.kappa", e.to_string()))?;
    pr.finish()?;

    let mut l = top.sub("learner")?;
    let eta = match (l.opt_f64_list("eta")?, l.opt_f64("eta_scale")?) {
        (Some(_), Some(_)) => return Err(invalid("learner.eta", "give either eta or eta_scale, not both")),
        (Some(v), None) => {
            if v.len() != cells {
                return Err(invalid("learner.eta", format!("{} rates for {cells} cells", v.len())));
            }
            for (i, &x) in v.iter().enumerate() {
                positive(&format!("learner.eta[{i}]"), x)?;
            }
            EtaPolicy::Fixed(v)
        }
        (None, s) => {
            let s = s.unwrap_or(0.9);
            if !(s > 0.0 && s < 1.0) {
                return Err(invalid("learner.eta_scale", "must lie in (0, 1) so that η < 1/L"));
            }
            EtaPolicy::Scale(s)
        }
    };
    let batch_size = match l.opt_usize("batch_size")? {
        Some(0) => return Err(invalid("learner.batch_size", "must be at least 1")),
        b => b,
    };
    l.finish()?;

    let mut d = top.sub("data")?;
    let source = d.opt_str("source")?.unwrap_or("synthetic");
    let classes = d.usize_or("classes", 5)?;
    if classes < 2 {
        return Err(invalid("data.classes", "at least two classes are required"));
    }
    let data = match source {
        "synthetic" => {
            let features = at_least_one("data.features", d.usize_or("features", 20)?)?;
            let train_per_label = at_least_one("data.train_per_label", d.usize_or("train_per_label", 40)?)?;
            let test_per_label = at_least_one("data.test_per_label", d.usize_or("test_per_label", 20)?)?;
            let spread = positive("data.spread", d.f64_or("spread", 0.3)?)?;
            if classes * train_per_label < devices_per_cell {
                return Err(invalid("data.train_per_label", "too few samples for one shard per device"));
            }
            DataSource::Synthetic {
                classes,
                features,
                train_per_label,
                test_per_label,
                spread,
            }
        }
        "idx" => {
            let mut idx_cells = Vec::new();
            match d.raw("cells") {
                Some(Value::Array(a)) => {
                    for (i, v) in a.iter().enumerate() {
                        let path = format!("data.cells[{i}]");
                        let Value::Table(tab) = v else {
                            return Err(invalid(path, "expected a table"));
                        };
                        let mut s = Section::new(&path, Some(tab));
                        let mut file = |key: &'static str| -> Result<PathBuf, ConfigError> {
                            let p = s.opt_str(key)?.ok_or_else(|| invalid(format!("{path}.{key}"), "missing"))?;
                            Ok(resolve(base, p))
                        };
                        let cell = IdxCell {
                            train_images: file("train_images")?,
                            train_labels: file("train_labels")?,
                            test_images: file("test_images")?,
                            test_labels: file("test_labels")?,
                            first_label: match s.opt_usize("first_label")? {
                                Some(x) if x + classes <= 256 => x as u8,
                                Some(_) => return Err(invalid(format!("{path}.first_label"), "out of byte range")),
                                None => 0,
                            },
                        };
                        s.finish()?;
                        idx_cells.push(cell);
                    }
                }
                _ => return Err(invalid("data.cells", "idx source needs one [[data.cells]] table per cell")),
            }
            if idx_cells.len() != cells {
                return Err(invalid("data.cells", format!("{} entries for {cells} cells", idx_cells.len())));
            }
            DataSource::Idx {
                classes,
                cells: idx_cells,
                max_train: d.opt_usize("max_train")?,
                max_test: d.opt_usize("max_test")?,
            }
        }
        other => return Err(invalid("data.source", format!("unknown source `{other}`, expected synthetic or idx"))),
    };
    d.finish()?;

    let mut s = top.sub("solver")?;
    let solver = SolverConfig {
        eps_dl: positive("solver.eps_dl", s.f64_or("eps_dl", 1e-9)?)?,
        eps_ul: positive("solver.eps_ul", s.f64_or("eps_ul", 1e-9)?)?,
        tol: positive("solver.tol", s.f64_or("tol", 1e-9)?)?,
    };
    s.finish()?;

    let mut r = top.sub("redraw")?;
    let redraw = RedrawConfig {
        topology: r.bool_or("topology", true)?,
        data: r.bool_or("data", true)?,
        channels: r.bool_or("channels", true)?,
    };
    r.finish()?;

    let mut pa = top.sub("pareto")?;
    let kappa_bars = pa.opt_f64_list("kappa_bars")?.unwrap_or_else(|| TWO_CELL_KAPPA_BARS.to_vec());
    for (i, &k) in kappa_bars.iter().enumerate() {
        if !(0.0..=1.0).contains(&k) {
            return Err(invalid(format!("pareto.kappa_bars[{i}]"), "must lie in [0, 1]"));
        }
    }
    let baseline_names = pa
        .opt_str_list("baselines")?
        .unwrap_or_else(|| vec!["DL-Full & UL-Full", "DL-Full & UL-IgnInter", "DL-Full & UL-MaxInter"]);
    let baselines = parse_schemes("pareto.baselines", &baseline_names)?;
    for (i, b) in baselines.iter().enumerate() {
        if matches!(b.dl, DlScheme::Free | DlScheme::Opt) || matches!(b.ul, UlScheme::Free | UlScheme::Opt) {
            return Err(invalid(
                format!("pareto.baselines[{i}]"),
                format!("`{b}` must transmit in both directions without the profile (Full, IgnInter or MaxInter)"),
            ));
        }
    }
    let pareto = ParetoConfig {
        warmup_rounds: pa.usize_or("warmup_rounds", 5)?,
        kappa_bars,
        baselines,
    };
    pa.finish()?;
    top.finish()?;

    Ok(ExperimentConfig {
        name,
        seed,
        rounds,
        repetitions,
        schemes,
        topology,
        channel,
        power,
        noise_dl,
        noise_ul,
        kappa,
        eta,
        batch_size,
        data,
        solver,
        redraw,
        pareto,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-110.0) - 1e-14).abs() < 1e-26);
    }

    #[test]
    fn four_cell_budgets() {
        let c = parse("topology.cells = 4\npower.dl_dbm = [40, 30, 30, 40]\nprofile.kappa = [0.25, 0.25, 0.25, 0.25]").unwrap();
        for (a, b) in c.power.dl.iter().zip([10.0, 1.0, 1.0, 10.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((c.noise_dl - 1e-14).abs() < 1e-26);
        let ul = c.budget_ul();
        assert_eq!(ul.len(), 40);
        assert!((ul[4] - dbm_to_watts(15.0)).abs() < 1e-15 && ul[5] == 1.0 && ul[10] < 0.1);
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = parse("channel.alpha = 3.0\nchannel.beta_db = 2").unwrap();
        let b = parse("[channel]\nalpha = 3.0\nbeta_db = 2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.channel.alpha, 3.0);
    }

    #[test]
    fn profile_must_sum_to_one() {
        let e = parse("profile.kappa = [0.6, 0.5]").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { ref path, .. } if path == "profile.kappa"), "{e}");
    }

    #[test]
    fn unknown_keys_report_their_path() {
        assert_eq!(
            parse("channel.alpah = 2.5").unwrap_err(),
            invalid("channel.alpah", "unknown key")
        );
        assert_eq!(parse("color = 1").unwrap_err(), invalid("color", "unknown key"));
    }

    #[test]
    fn type_and_range_errors() {
        assert!(matches!(parse("rounds = 0"), Err(ConfigError::Invalid { path, .. }) if path == "rounds"));
        assert!(matches!(parse("schemes = [\"UL-Best\"]"), Err(ConfigError::Invalid { path, .. }) if path == "schemes[0]"));
        assert!(matches!(parse("learner.eta_scale = 1.5"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(parse("topology.radius_min = 0"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(parse("rounds = [1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn idx_cells_resolve_relative_paths() {
        let text = r#"
            data.source = "idx"
            data.classes = 5
            [[data.cells]]
            train_images = "a"
            train_labels = "b"
            test_images = "c"
            test_labels = "d"
            [[data.cells]]
            train_images = "/x/a"
            train_labels = "b"
            test_images = "c"
            test_labels = "d"
            first_label = 5
        "#;
        let c = parse_config(text, Path::new("/base")).unwrap();
        let DataSource::Idx { cells, .. } = c.data else { panic!() };
        assert_eq!(cells[0].train_images, PathBuf::from("/base/a"));
        assert_eq!(cells[1].train_images, PathBuf::from("/x/a"));
        assert_eq!(cells[1].first_label, 5);
    }
}
