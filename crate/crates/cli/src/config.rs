//! Run parameters from flags and an optional `key = value` file. Flags win.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use qswitch_core::channels::MeasurementStrength;
use qswitch_core::circuit::TomographyOptions;
use qswitch_core::engine::Mode;
use qswitch_core::states::{ControlAngles, Family, GibbsParams, InitialStateSpec};

use crate::CliError;

pub const DEFAULT_BETA_EPS_INV: f64 = 1.65;
pub const DEFAULT_BETA_EPS_LIST: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_GRID_POINTS: usize = 51;
pub const DEFAULT_MAP_POINTS: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Definite,
    Incoherent,
    Coherent,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Definite => Mode::Definite,
            ModeArg::Incoherent => Mode::Incoherent,
            ModeArg::Coherent => Mode::Coherent,
        }
    }
}

/// `all` or one family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilySel(Option<Family>);

impl FromStr for FamilySel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(FamilySel(None))
        } else {
            s.parse().map(|f| FamilySel(Some(f)))
        }
    }
}

/// Either `lo:hi:n` (inclusive linspace) or a comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [lo, hi, n] => {
                let lo: f64 = parse_num(lo)?;
                let hi: f64 = parse_num(hi)?;
                let n: usize = n.trim().parse().map_err(|_| format!("bad point count `{n}`"))?;
                linspace(lo, hi, n)
            }
            [_] => parse_list(s)?,
            _ => return Err(format!("expected `lo:hi:n` or a comma list, got `{s}`")),
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        Ok(Grid(values))
    }
}

fn parse_num(s: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(parse_num).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct Params {
    /// Read parameters from a `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// uncorrelated, separable, entangled or all [default: all]
    #[arg(long, global = true)]
    pub family: Option<FamilySel>,
    /// Cycle mode for `cycle` [default: coherent]
    #[arg(long, global = true)]
    pub mode: Option<ModeArg>,
    /// Strength of the first measurement (`cycle`) [default: 0.5]
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Strength of the second measurement; without it a' = 1 - a
    #[arg(long, global = true)]
    pub a_prime: Option<f64>,
    /// Grid over a: `lo:hi:n` or a comma list [default: 0:1:51]
    #[arg(long, global = true)]
    pub a_grid: Option<Grid>,
    /// Force a' = 1 - a even when --a-prime is given
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub complement: Option<bool>,
    /// Medium temperature in units of the level splitting [default: 1.65]
    #[arg(long, global = true)]
    pub beta_eps_inv: Option<f64>,
    /// Comma list of beta*eps for `map` and `optimal-theta` [default: 0.1,1,10]
    #[arg(long, global = true, value_parser = parse_beta_list)]
    pub beta_eps: Option<BetaList>,
    /// Control polar angle [default: pi/2]
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Control azimuth [default: pi/4]
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    /// Readout phase of the control [default: 0]
    #[arg(long, global = true)]
    pub phi_prime: Option<f64>,
    /// Uncorrelated control purity weight [default: 1]
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    /// Control weight conditioned on the ground level [default: 1]
    #[arg(long, global = true)]
    pub zeta0: Option<f64>,
    /// Control weight conditioned on the excited level [default: 0]
    #[arg(long, global = true)]
    pub zeta1: Option<f64>,
    /// Entangled coherence as a fraction of sech(beta*eps)/2 [default: 1]
    #[arg(long, global = true)]
    pub xi_fraction: Option<f64>,
    /// Phase of the entangled coherence [default: 0]
    #[arg(long, global = true)]
    pub varphi: Option<f64>,
    /// Detector temperature for the erasure cost [default: 0]
    #[arg(long, global = true)]
    pub beta_d_inv: Option<f64>,
    /// Shots per tomography setting and repetition [default: 8000]
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Tomography repetitions [default: 10]
    #[arg(long, global = true)]
    pub reps: Option<u32>,
    /// Seed of the shot-noise generator [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bootstrap resamples per estimate [default: 200]
    #[arg(long, global = true)]
    pub resamples: Option<usize>,
    /// Points per axis of the `map` grid [default: 101]
    #[arg(long, global = true)]
    pub map_points: Option<usize>,
    /// Write here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// csv or json [default: csv for grids, json for cycle and circuit-compare]
    #[arg(long, global = true)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaList(pub Vec<f64>);

fn parse_beta_list(s: &str) -> Result<BetaList, String> {
    let v = parse_list(s)?;
    if v.is_empty() {
        return Err("list is empty".into());
    }
    Ok(BetaList(v))
}

macro_rules! merge_fields {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Params { $($f: $top.$f.or($base.$f),)* }
    };
}

impl Params {
    fn merge(self, base: Params) -> Params {
        merge_fields!(
            self,
            base,
            config,
            family,
            mode,
            a,
            a_prime,
            a_grid,
            complement,
            beta_eps_inv,
            beta_eps,
            theta,
            phi,
            phi_prime,
            zeta,
            zeta0,
            zeta1,
            xi_fraction,
            varphi,
            beta_d_inv,
            shots,
            reps,
            seed,
            resamples,
            map_points,
            out,
            format
        )
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", v.trim()))
        }
        match key {
            "family" => self.family = Some(p(value)?),
            "mode" => self.mode = Some(ModeArg::from_str(value.trim(), true)?),
            "a" => self.a = Some(p(value)?),
            "a_prime" => self.a_prime = Some(p(value)?),
            "a_grid" => self.a_grid = Some(p(value)?),
            "complement" => self.complement = Some(parse_bool(value)?),
            "beta_eps_inv" => self.beta_eps_inv = Some(p(value)?),
            "beta_eps" => self.beta_eps = Some(parse_beta_list(value)?),
            "theta" => self.theta = Some(p(value)?),
            "phi" => self.phi = Some(p(value)?),
            "phi_prime" => self.phi_prime = Some(p(value)?),
            "zeta" => self.zeta = Some(p(value)?),
            "zeta0" => self.zeta0 = Some(p(value)?),
            "zeta1" => self.zeta1 = Some(p(value)?),
            "xi_fraction" => self.xi_fraction = Some(p(value)?),
            "varphi" => self.varphi = Some(p(value)?),
            "beta_d_inv" => self.beta_d_inv = Some(p(value)?),
            "shots" => self.shots = Some(p(value)?),
            "reps" | "repetitions" => self.reps = Some(p(value)?),
            "seed" => self.seed = Some(p(value)?),
            "resamples" => self.resamples = Some(p(value)?),
            "map_points" => self.map_points = Some(p(value)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "format" => self.format = Some(Format::from_str(value.trim(), true)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

pub fn parse_config_text(text: &str) -> Result<Params, String> {
    let mut params = Params::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('-', "_");
        params
            .set(&key, value)
            .map_err(|e| format!("line {}: {key}: {e}", i + 1))?;
    }
    Ok(params)
}

fn load_config(path: &Path) -> Result<Params, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fully defaulted and validated parameters.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub families: Vec<Family>,
    pub mode: Mode,
    pub a: f64,
    pub a_prime: Option<f64>,
    pub a_grid: Vec<f64>,
    pub gibbs: GibbsParams,
    pub beta_eps_list: Vec<f64>,
    pub theta: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub zeta: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    pub xi_fraction: f64,
    pub varphi: f64,
    pub beta_d_inv: f64,
    pub tomography: TomographyOptions,
    pub map_points: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn check(name: &str, value: f64, lo: f64, hi: f64) -> Result<f64, CliError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{name} = {value} is outside [{lo}, {hi}]")))
    }
}

impl Resolved {
    pub fn from_flags(flags: Params) -> Result<Self, CliError> {
        let params = match &flags.config {
            Some(path) => flags.clone().merge(load_config(path)?),
            None => flags,
        };
        Self::from_params(params)
    }

    pub fn from_params(p: Params) -> Result<Self, CliError> {
        let families = match p.family.unwrap_or(FamilySel(None)).0 {
            Some(f) => vec![f],
            None => Family::ALL.to_vec(),
        };
        let beta_eps_inv = p.beta_eps_inv.unwrap_or(DEFAULT_BETA_EPS_INV);
        if !(beta_eps_inv.is_finite() && beta_eps_inv > 0.0) {
            return Err(CliError::Config(format!(
                "beta_eps_inv = {beta_eps_inv} must be positive"
            )));
        }
        let gibbs = GibbsParams::from_temperature(beta_eps_inv).map_err(config_err)?;
        let beta_eps_list = match (p.beta_eps, p.beta_eps_inv) {
            (Some(list), _) => list.0,
            (None, Some(_)) => vec![gibbs.beta_eps()],
            (None, None) => DEFAULT_BETA_EPS_LIST.to_vec(),
        };
        for &b in &beta_eps_list {
            check("beta_eps", b, 0.0, f64::MAX)?;
        }
        let a_grid = p
            .a_grid
            .map(|g| g.0)
            .unwrap_or_else(|| linspace(0.0, 1.0, DEFAULT_GRID_POINTS));
        for &a in &a_grid {
            check("a", a, 0.0, 1.0)?;
        }
        if let Some(x) = p.a_prime {
            check("a_prime", x, 0.0, 1.0)?;
        }
        let a_prime = if p.complement.unwrap_or(false) { None } else { p.a_prime };
        let tomography = TomographyOptions {
            shots: p.shots.unwrap_or(8000),
            repetitions: p.reps.unwrap_or(10),
            seed: p.seed.unwrap_or(1),
            resamples: p.resamples.unwrap_or(200),
        };
        if tomography.shots == 0 || tomography.repetitions == 0 {
            return Err(CliError::Config("shots and reps must be at least 1".into()));
        }
        let map_points = p.map_points.unwrap_or(DEFAULT_MAP_POINTS);
        if map_points == 0 {
            return Err(CliError::Config("map_points must be at least 1".into()));
        }
        let r = Resolved {
            families,
            mode: p.mode.unwrap_or(ModeArg::Coherent).into(),
            a: check("a", p.a.unwrap_or(0.5), 0.0, 1.0)?,
            a_prime,
            a_grid,
            gibbs,
            beta_eps_list,
            theta: check("theta", p.theta.unwrap_or(FRAC_PI_2), 0.0, std::f64::consts::PI)?,
            phi: check("phi", p.phi.unwrap_or(FRAC_PI_4), 0.0, 2.0 * std::f64::consts::PI)?,
            phi_prime: check("phi_prime", p.phi_prime.unwrap_or(0.0), -1e3, 1e3)?,
            zeta: check("zeta", p.zeta.unwrap_or(1.0), 0.0, 1.0)?,
            zeta0: check("zeta0", p.zeta0.unwrap_or(1.0), 0.0, 1.0)?,
            zeta1: check("zeta1", p.zeta1.unwrap_or(0.0), 0.0, 1.0)?,
            xi_fraction: check("xi_fraction", p.xi_fraction.unwrap_or(1.0), 0.0, 1.0)?,
            varphi: check("varphi", p.varphi.unwrap_or(0.0), 0.0, 2.0 * std::f64::consts::PI)?,
            beta_d_inv: check("beta_d_inv", p.beta_d_inv.unwrap_or(0.0), 0.0, f64::MAX)?,
            tomography,
            map_points,
            out: p.out,
            format: p.format,
        };
        // Catch invalid state parameters before any work starts.
        for &f in &r.families {
            r.spec(f, r.gibbs)?;
        }
        Ok(r)
    }

    pub fn spec(&self, family: Family, gibbs: GibbsParams) -> Result<InitialStateSpec, CliError> {
        let angles = ControlAngles::new(self.theta, self.phi).map_err(config_err)?;
        match family {
            Family::Uncorrelated => InitialStateSpec::uncorrelated(angles, self.zeta, gibbs),
            Family::Separable => InitialStateSpec::separable(angles, self.zeta0, self.zeta1, gibbs),
            Family::Entangled => InitialStateSpec::entangled(
                angles,
                self.zeta0,
                self.zeta1,
                self.xi_fraction * gibbs.xi_max(),
                self.varphi,
                gibbs,
            ),
        }
        .map_err(|e| CliError::Config(format!("{family} state: {e}")))
    }

    /// `a'` paired with `a`: the fixed value if given, else `1 − a`.
    pub fn partner(&self, a: f64) -> f64 {
        self.a_prime.unwrap_or(1.0 - a)
    }
}

pub fn strength(x: f64) -> Result<MeasurementStrength, CliError> {
    MeasurementStrength::new(x).map_err(config_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0:1:3".parse::<Grid>().unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!("0.1, 0.4".parse::<Grid>().unwrap().0, vec![0.1, 0.4]);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn config_text_and_errors() {
        let p = parse_config_text("# recipe\nfamily = separable\nxi-fraction = 0.5 # half\n\nseed=4\n").unwrap();
        assert_eq!(p.family, Some(FamilySel(Some(Family::Separable))));
        assert_eq!(p.xi_fraction, Some(0.5));
        assert_eq!(p.seed, Some(4));
        let e = parse_config_text("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(e.starts_with("line 2"), "{e}");
        assert!(parse_config_text("theta 1").unwrap_err().starts_with("line 1"));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("theta = 1.0\nphi = 0.5\n").unwrap();
        let flags = Params {
            theta: Some(0.2),
            ..Params::default()
        };
        let merged = flags.merge(file);
        assert_eq!((merged.theta, merged.phi), (Some(0.2), Some(0.5)));
    }

    #[test]
    fn defaults_and_validation() {
        let r = Resolved::from_params(Params::default()).unwrap();
        assert_eq!(r.a_grid.len(), 51);
        assert_eq!(r.families.len(), 3);
        assert_eq!(r.beta_eps_list, DEFAULT_BETA_EPS_LIST.to_vec());
        assert!((r.gibbs.beta_eps() - 1.0 / 1.65).abs() < 1e-15);
        let bad = Params {
            xi_fraction: Some(1.5),
            ..Params::default()
        };
        assert!(matches!(Resolved::from_params(bad), Err(CliError::Config(_))));
        let bad = Params {
            shots: Some(0),
            ..Params::default()
        };
        assert!(matches!(Resolved::from_params(bad), Err(CliError::Config(_))));
    }

    #[test]
    fn complement_overrides_fixed_partner() {
        let p = Params {
            a_prime: Some(0.3),
            ..Params::default()
        };
        assert_eq!(Resolved::from_params(p.clone()).unwrap().partner(0.1), 0.3);
        let p = Params {
            complement: Some(true),
            ..p
        };
        assert_eq!(Resolved::from_params(p).unwrap().partner(0.1), 0.9);
    }
}
