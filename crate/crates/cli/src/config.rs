//! Flat `key=value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use kamred::cocycle::Frequency;
use kamred::kam::{KamSchedule, RotClassParams};
use kamred::schrodinger::{Harmonic, InitialState, Potential};
use kamred::torus_fourier::Mode;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<kamred::Error> for ConfigError {
    fn from(e: kamred::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Res<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

const KEYS: &[&str] = &[
    "alpha", "kappa", "tau", "potential", "lambda", "coeffs", "harmonics", "potential_file", "sigma", "D",
    "D_tilde", "c", "s", "M", "k", "k0", "j_max", "gamma", "rot_tau", "n_max", "energies", "e_min", "e_max",
    "e_count", "n_iter", "seed", "source", "resolution", "spacing", "q_max", "phases", "intervals", "h_min",
    "h_max", "L", "T", "theta", "initial",
];

/// Raw `key → value` pairs; later insertions win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Res<()> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return err(format!("unknown config key '{key}'"));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Res<()> {
        match pair.split_once('=') {
            Some((k, v)) => self.set(k, v),
            None => err(format!("expected key=value, got '{pair}'")),
        }
    }

    /// Reads a config file, or the echoed config of a previous output: the
    /// `# config:` header of a CSV, or the `config` object of a JSON report.
    pub fn load(&mut self, path: &Path) -> Res<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let json: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            let Some(obj) = json.get("config").and_then(|c| c.as_object()) else {
                return err(format!("{}: JSON file has no config object", path.display()));
            };
            for (k, v) in obj {
                match v.as_str() {
                    Some(s) => self.set(k, s)?,
                    None => return err(format!("config value for '{k}' is not a string")),
                }
            }
            return Ok(());
        }
        let is_output = text.starts_with("# kamred");
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# config:") {
                self.set_pair(rest)?;
            } else if line.starts_with('#') {
                continue;
            } else if line.contains('=') {
                self.set_pair(line)?;
            } else if is_output {
                break;
            } else {
                return err(format!("{} line {}: expected key=value", path.display(), i + 1));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Res<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError(format!("cannot parse {key}={v}"))),
        }
    }
}

fn parse_list(key: &str, v: &str) -> Res<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| ConfigError(format!("cannot parse {key} entry '{s}'"))))
        .collect()
}

fn parse_mode(s: &str) -> Res<Mode> {
    s.split(',')
        .map(|x| x.trim().parse::<i32>().map_err(|_| ConfigError(format!("bad mode '{s}'"))))
        .collect::<Res<Vec<i32>>>()
        .map(Mode)
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f(x)).collect::<Vec<_>>().join(",")
}

fn fmt_mode(m: &Mode) -> String {
    m.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Amo,
    CosineSum(Vec<(Mode, f64)>),
    Harmonics(Vec<Harmonic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomSource {
    Approximant,
    Intervals,
    Scan,
}

#[derive(Debug, Clone)]
pub enum EnergySpec {
    List(Vec<f64>),
    Grid { min: f64, max: f64, count: usize },
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub freq: Frequency,
    pub spec: PotentialSpec,
    pub lambda: f64,
    pub potential: Potential,
    pub schedule: KamSchedule,
    pub rot: RotClassParams,
    pub energy_spec: EnergySpec,
    pub energies: Vec<f64>,
    pub n_iter: usize,
    pub seed: u64,
    pub source: HomSource,
    pub resolution: f64,
    pub spacing: f64,
    pub q_max: u64,
    pub phases: usize,
    pub intervals: Vec<(f64, f64)>,
    pub h_min: f64,
    pub h_max: f64,
    pub l: i64,
    pub t_list: Vec<f64>,
    pub theta: Vec<f64>,
    pub initial: InitialState,
}

fn read_potential_file(path: &str, dim: usize) -> Res<Vec<Harmonic>> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 2 {
            return err(format!("{path} line {}: expected {dim} mode entries then cos sin", i + 1));
        }
        let bad = || ConfigError(format!("{path} line {}: cannot parse", i + 1));
        let mode = fields[..dim]
            .iter()
            .map(|x| x.parse::<i32>().map_err(|_| bad()))
            .collect::<Res<Vec<i32>>>()?;
        let cos = fields[dim].parse().map_err(|_| bad())?;
        let sin = fields[dim + 1].parse().map_err(|_| bad())?;
        out.push(Harmonic { mode: Mode(mode), cos, sin });
    }
    Ok(out)
}

fn parse_initial(v: &str) -> Res<InitialState> {
    let parts: Vec<&str> = v.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| ConfigError(format!("cannot parse initial={v}")));
    match parts.as_slice() {
        ["site", n] => Ok(InitialState::Site {
            n: n.parse().map_err(|_| ConfigError(format!("cannot parse initial={v}")))?,
        }),
        ["packet", c, w, xi] => Ok(InitialState::Wavepacket { center: num(c)?, width: num(w)?, momentum: num(xi)? }),
        _ => err(format!("initial must be site:N or packet:CENTER:WIDTH:MOMENTUM (got '{v}')")),
    }
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> Res<Self> {
        let golden = Frequency::golden();
        let alpha = match raw.get("alpha") {
            Some(v) => parse_list("alpha", v)?,
            None => golden.alpha().to_vec(),
        };
        let kappa = raw.parse("kappa", golden.kappa())?;
        let tau = raw.parse("tau", golden.tau())?;
        let freq = Frequency::new(alpha, kappa, tau)?;
        let dim = freq.dim();

        let lambda: f64 = raw.parse("lambda", 0.05)?;
        let spec = match raw.get("potential").unwrap_or("amo") {
            "zero" => PotentialSpec::Zero,
            "amo" => PotentialSpec::Amo,
            "cosine-sum" => {
                let Some(v) = raw.get("coeffs") else {
                    return err("potential=cosine-sum needs coeffs=MODE:AMP;...");
                };
                let terms = v
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        let (m, a) = t.split_once(':').ok_or_else(|| ConfigError(format!("bad coeffs entry '{t}'")))?;
                        let a = a.trim().parse().map_err(|_| ConfigError(format!("bad coeffs entry '{t}'")))?;
                        Ok((parse_mode(m)?, a))
                    })
                    .collect::<Res<Vec<_>>>()?;
                PotentialSpec::CosineSum(terms)
            }
            "harmonics" => {
                let Some(v) = raw.get("harmonics") else {
                    return err("potential=harmonics needs harmonics=MODE:COS:SIN;...");
                };
                let hs = v
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        let p: Vec<&str> = t.split(':').collect();
                        let bad = || ConfigError(format!("bad harmonics entry '{t}'"));
                        if p.len() != 3 {
                            return Err(bad());
                        }
                        Ok(Harmonic {
                            mode: parse_mode(p[0])?,
                            cos: p[1].trim().parse().map_err(|_| bad())?,
                            sin: p[2].trim().parse().map_err(|_| bad())?,
                        })
                    })
                    .collect::<Res<Vec<_>>>()?;
                PotentialSpec::Harmonics(hs)
            }
            "file" => {
                let Some(path) = raw.get("potential_file") else {
                    return err("potential=file needs potential_file=PATH");
                };
                PotentialSpec::Harmonics(read_potential_file(path, dim)?)
            }
            other => return err(format!("unknown potential '{other}' (zero, amo, cosine-sum, harmonics, file)")),
        };
        let potential = match &spec {
            PotentialSpec::Zero => Potential::zero(dim),
            PotentialSpec::Amo => {
                if dim != 1 {
                    return err("potential=amo needs a one-dimensional frequency");
                }
                Potential::amo(lambda)
            }
            PotentialSpec::CosineSum(t) => Potential::cosine_sum(dim, t, lambda)?,
            PotentialSpec::Harmonics(h) => Potential::new(dim, h.clone(), lambda)?,
        };

        let mut schedule = KamSchedule::defaults(kappa, tau);
        schedule.sigma = raw.parse("sigma", schedule.sigma)?;
        schedule.d = raw.parse("D", schedule.d)?;
        schedule.d_tilde = raw.parse("D_tilde", schedule.d_tilde)?;
        schedule.c = raw.parse("c", schedule.c)?;
        schedule.s = raw.parse("s", schedule.s)?;
        schedule.k = raw.parse("k", schedule.k)?;
        schedule.k0 = raw.parse("k0", schedule.k0)?;
        schedule.j_max = raw.parse("j_max", schedule.j_max)?;
        schedule.m = match raw.get("M") {
            None | Some("auto") => None,
            Some(v) => Some(v.parse().map_err(|_| ConfigError(format!("cannot parse M={v}")))?),
        };
        schedule.validate()?;
        let rot = RotClassParams {
            gamma: raw.parse("gamma", 1e-3)?,
            tau: raw.parse("rot_tau", 2.0)?,
            n_max: raw.parse("n_max", 50)?,
        };

        let energy_spec = match raw.get("energies") {
            Some(v) => EnergySpec::List(parse_list("energies", v)?),
            None => EnergySpec::Grid {
                min: raw.parse("e_min", -2.5)?,
                max: raw.parse("e_max", 2.5)?,
                count: raw.parse("e_count", 101)?,
            },
        };
        let energies = match &energy_spec {
            EnergySpec::List(v) => v.clone(),
            EnergySpec::Grid { min, max, count } => {
                if !(max >= min) {
                    return err(format!("e_max >= e_min violated (e_min = {min}, e_max = {max})"));
                }
                match count {
                    0 => Vec::new(),
                    1 => vec![*min],
                    n => (0..*n).map(|i| min + (max - min) * i as f64 / (*n - 1) as f64).collect(),
                }
            }
        };
        if energies.iter().any(|e| !e.is_finite()) {
            return err("energies must be finite");
        }

        let n_iter = raw.parse("n_iter", 100_000usize)?;
        if n_iter < 1000 {
            return err(format!("n_iter >= 1000 violated (n_iter = {n_iter})"));
        }
        let resolution: f64 = raw.parse("resolution", 1e-4)?;
        let spacing = raw.parse("spacing", resolution / 10.0)?;
        let source = match raw.get("source").unwrap_or("approximant") {
            "approximant" => HomSource::Approximant,
            "intervals" => HomSource::Intervals,
            "scan" => HomSource::Scan,
            other => return err(format!("unknown source '{other}' (approximant, intervals, scan)")),
        };
        let intervals = match raw.get("intervals") {
            None => Vec::new(),
            Some(v) => v
                .split(';')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    let bad = || ConfigError(format!("bad interval '{t}'"));
                    let (a, b) = t.split_once(':').ok_or_else(bad)?;
                    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
                })
                .collect::<Res<Vec<(f64, f64)>>>()?,
        };
        let sup = 2.0 + potential.sup_bound();
        let theta = match raw.get("theta") {
            Some(v) => parse_list("theta", v)?,
            None => vec![0.0; dim],
        };
        if theta.len() != dim {
            return err(format!("theta needs {dim} entries"));
        }
        let t_list = parse_list("T", raw.get("T").unwrap_or("100,200"))?;
        let initial = parse_initial(raw.get("initial").unwrap_or("site:0"))?;
        Ok(RunConfig {
            freq,
            spec,
            lambda,
            potential,
            schedule,
            rot,
            energy_spec,
            energies,
            n_iter,
            seed: raw.parse("seed", 0)?,
            source,
            resolution,
            spacing,
            q_max: raw.parse("q_max", 1600)?,
            phases: raw.parse("phases", 2)?,
            intervals,
            h_min: raw.parse("h_min", -sup - 0.1)?,
            h_max: raw.parse("h_max", sup + 0.1)?,
            l: raw.parse("L", 1000)?,
            t_list,
            theta,
            initial,
        })
    }

    /// Every resolved key in a fixed order; feeding these back reproduces
    /// the same configuration.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let s = &self.schedule;
        let mut out = vec![
            ("alpha", fmt_list(self.freq.alpha())),
            ("kappa", fmt_f(self.freq.kappa())),
            ("tau", fmt_f(self.freq.tau())),
        ];
        match &self.spec {
            PotentialSpec::Zero => out.push(("potential", "zero".into())),
            PotentialSpec::Amo => out.push(("potential", "amo".into())),
            PotentialSpec::CosineSum(t) => {
                out.push(("potential", "cosine-sum".into()));
                let v = t.iter().map(|(m, a)| format!("{}:{}", fmt_mode(m), fmt_f(*a))).collect::<Vec<_>>();
                out.push(("coeffs", v.join(";")));
            }
            PotentialSpec::Harmonics(h) => {
                out.push(("potential", "harmonics".into()));
                let v = h
                    .iter()
                    .map(|h| format!("{}:{}:{}", fmt_mode(&h.mode), fmt_f(h.cos), fmt_f(h.sin)))
                    .collect::<Vec<_>>();
                out.push(("harmonics", v.join(";")));
            }
        }
        out.extend([
            ("lambda", fmt_f(self.lambda)),
            ("sigma", fmt_f(s.sigma)),
            ("D", s.d.to_string()),
            ("D_tilde", fmt_f(s.d_tilde)),
            ("c", fmt_f(s.c)),
            ("s", fmt_f(s.s)),
            ("M", s.m.map_or("auto".into(), |m| format!("{m:.0}"))),
            ("k", s.k.to_string()),
            ("k0", s.k0.to_string()),
            ("j_max", s.j_max.to_string()),
            ("gamma", fmt_f(self.rot.gamma)),
            ("rot_tau", fmt_f(self.rot.tau)),
            ("n_max", self.rot.n_max.to_string()),
        ]);
        match &self.energy_spec {
            EnergySpec::List(v) => out.push(("energies", fmt_list(v))),
            EnergySpec::Grid { min, max, count } => {
                out.extend([("e_min", fmt_f(*min)), ("e_max", fmt_f(*max)), ("e_count", count.to_string())])
            }
        }
        let source = match self.source {
            HomSource::Approximant => "approximant",
            HomSource::Intervals => "intervals",
            HomSource::Scan => "scan",
        };
        let intervals =
            self.intervals.iter().map(|(a, b)| format!("{}:{}", fmt_f(*a), fmt_f(*b))).collect::<Vec<_>>();
        let initial = match self.initial {
            InitialState::Site { n } => format!("site:{n}"),
            InitialState::Wavepacket { center, width, momentum } => {
                format!("packet:{}:{}:{}", fmt_f(center), fmt_f(width), fmt_f(momentum))
            }
        };
        out.extend([
            ("n_iter", self.n_iter.to_string()),
            ("seed", self.seed.to_string()),
            ("source", source.into()),
            ("resolution", fmt_f(self.resolution)),
            ("spacing", fmt_f(self.spacing)),
            ("q_max", self.q_max.to_string()),
            ("phases", self.phases.to_string()),
            ("intervals", intervals.join(";")),
            ("h_min", fmt_f(self.h_min)),
            ("h_max", fmt_f(self.h_max)),
            ("L", self.l.to_string()),
            ("T", fmt_list(&self.t_list)),
            ("theta", fmt_list(&self.theta)),
            ("initial", initial),
        ]);
        out
    }
}
