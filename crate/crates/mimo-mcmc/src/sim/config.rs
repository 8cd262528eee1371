//! Experiment configuration: the struct, its validation rules and the
//! flat key-value config file format.
//!
//! The file format is one `key = value` pair per line. `#` starts a
//! comment, blank lines are skipped, unknown keys are errors. Lists are
//! comma separated. An SNR grid is given either explicitly (`snr_db`)
//! or as an inclusive range (`snr_start`, `snr_stop`, `snr_step`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::baselines::ML_SEARCH_LIMIT;
use crate::constellation::Modulation;
use crate::hmc::HmcConfig;
use crate::mgs::MgsConfig;
use crate::{Error, Result};

/// How transmit power relates to the SNR definition.
///
/// Per-antenna unit power keeps every antenna at unit symbol energy, so
/// the received SNR per antenna is `N / sigma_w^2`. Total unit power
/// normalizes the whole transmit vector instead, which shifts BER curves
/// by `10 log10 N` dB but changes nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrConvention {
    PerAntennaUnitPower,
    TotalUnitPower,
}

impl SnrConvention {
    /// The antenna count that enters the noise variance formula.
    pub fn effective_n(&self, n: usize) -> usize {
        match self {
            SnrConvention::PerAntennaUnitPower => n,
            SnrConvention::TotalUnitPower => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SnrConvention::PerAntennaUnitPower => "per-antenna-unit-power",
            SnrConvention::TotalUnitPower => "total-unit-power",
        }
    }
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SnrConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "per-antenna-unit-power" => Ok(SnrConvention::PerAntennaUnitPower),
            "total-unit-power" => Ok(SnrConvention::TotalUnitPower),
            other => Err(Error::Config(format!(
                "snr_convention: unknown value {other:?} \
                 (expected per-antenna-unit-power or total-unit-power)"
            ))),
        }
    }
}

/// The detectors the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// HMC over the relaxed posterior with the mixture-t prior.
    HmcT,
    /// HMC with the mixture-normal prior.
    HmcNormal,
    /// Mixed Gibbs sampling on the lattice.
    Mgs,
    /// Linear MMSE with per-dimension quantization.
    Mmse,
    /// Exhaustive maximum likelihood (small systems only).
    Ml,
    /// Single-antenna AWGN reference curve; ignores the MIMO channel.
    SisoAwgn,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::HmcT,
        DetectorKind::HmcNormal,
        DetectorKind::Mgs,
        DetectorKind::Mmse,
        DetectorKind::Ml,
        DetectorKind::SisoAwgn,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            DetectorKind::HmcT => "hmc-t",
            DetectorKind::HmcNormal => "hmc-normal",
            DetectorKind::Mgs => "mgs",
            DetectorKind::Mmse => "mmse",
            DetectorKind::Ml => "ml",
            DetectorKind::SisoAwgn => "siso-awgn",
        }
    }

    pub fn is_hmc(&self) -> bool {
        matches!(self, DetectorKind::HmcT | DetectorKind::HmcNormal)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        DetectorKind::ALL
            .iter()
            .copied()
            .find(|d| d.id() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "detectors: unknown detector {s:?} (expected one of {})",
                    DetectorKind::ALL.map(|d| d.id()).join(", ")
                ))
            })
    }
}

/// Everything one experiment run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Transmit antennas.
    pub n: usize,
    /// Receive antennas.
    pub m: usize,
    pub modulation: Modulation,
    /// Exponential correlation coefficient, identical at both ends.
    pub rho: f64,
    pub detectors: Vec<DetectorKind>,
    /// SNR grid in dB.
    pub snr_db: Vec<f64>,
    /// Monte-Carlo trials per SNR point.
    pub trials: usize,
    pub master_seed: u64,
    pub snr_convention: SnrConvention,
    /// Worker threads; 0 uses the process-wide default pool.
    pub threads: usize,
    pub hmc: HmcConfig,
    pub mgs: MgsConfig,
    /// Include per-trial wall time in the CSV. Off for byte-stable output.
    pub emit_timing: bool,
    /// Optional JSON-lines per-trial debug log.
    pub trace: Option<PathBuf>,
    /// Optional CSV output path.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 4,
            m: 4,
            modulation: Modulation::Qpsk,
            rho: 0.0,
            detectors: vec![
                DetectorKind::HmcT,
                DetectorKind::HmcNormal,
                DetectorKind::Mgs,
                DetectorKind::Mmse,
            ],
            snr_db: vec![4.0, 6.0, 8.0, 10.0, 12.0],
            trials: 200,
            master_seed: 1729,
            snr_convention: SnrConvention::PerAntennaUnitPower,
            threads: 0,
            hmc: HmcConfig::default(),
            mgs: MgsConfig::default(),
            emit_timing: true,
            trace: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n: must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Config("m: must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!(
                "rho: must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("detectors: list is empty".into()));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if self.detectors[..i].contains(d) {
                return Err(Error::Config(format!(
                    "detectors: {d} listed more than once"
                )));
            }
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db: grid is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db: grid contains a non-finite value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        if self.detectors.contains(&DetectorKind::Ml) {
            let q = self.modulation.q() as u128;
            let feasible = q
                .checked_pow(2 * self.n as u32)
                .is_some_and(|c| c <= ML_SEARCH_LIMIT);
            if !feasible {
                return Err(Error::Config(format!(
                    "detectors: ml needs {}^{} candidates, over the {} limit",
                    q,
                    2 * self.n,
                    ML_SEARCH_LIMIT
                )));
            }
        }
        self.hmc.validate()?;
        self.mgs.validate()?;
        Ok(())
    }
}

/// Parses the key-value config format into a config, starting from
/// defaults. See the module docs for the grammar.
pub fn parse_config_file(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut explicit_grid: Option<Vec<f64>> = None;
    let mut range = SnrRange::default();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => cfg.n = parse_num(key, value)?,
            "m" => cfg.m = parse_num(key, value)?,
            "modulation" => cfg.modulation = value.parse()?,
            "rho" => cfg.rho = parse_num(key, value)?,
            "detectors" => {
                cfg.detectors = value
                    .split(',')
                    .map(|d| d.parse())
                    .collect::<Result<Vec<_>>>()?;
            }
            "snr_db" => {
                explicit_grid = Some(
                    value
                        .split(',')
                        .map(|v| parse_num("snr_db", v))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
            "snr_start" => range.start = Some(parse_num(key, value)?),
            "snr_stop" => range.stop = Some(parse_num(key, value)?),
            "snr_step" => range.step = Some(parse_num(key, value)?),
            "trials" => cfg.trials = parse_num(key, value)?,
            "master_seed" | "seed" => cfg.master_seed = parse_num(key, value)?,
            "snr_convention" => cfg.snr_convention = value.parse()?,
            "threads" => cfg.threads = parse_num(key, value)?,
            "emit_timing" => cfg.emit_timing = parse_bool(key, value)?,
            "trace" => cfg.trace = Some(PathBuf::from(value)),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "hmc_steps_per_chain" => {
                cfg.hmc.steps_per_chain = Some(parse_num(key, value)?)
            }
            "hmc_chains" => cfg.hmc.n_chains = Some(parse_num(key, value)?),
            "hmc_leapfrog_steps" => cfg.hmc.leapfrog_steps = parse_num(key, value)?,
            "hmc_step_size" => cfg.hmc.step_size = Some(parse_num(key, value)?),
            "hmc_init_box" => cfg.hmc.init_box = Some(parse_num(key, value)?),
            "mgs_total_steps" => cfg.mgs.total_steps = parse_num(key, value)?,
            "mgs_restarts" => cfg.mgs.restarts = parse_num(key, value)?,
            "mgs_mixing_alpha" => cfg.mgs.mixing_alpha = Some(parse_num(key, value)?),
            "mgs_temperature" => cfg.mgs.temperature = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }

    match (explicit_grid, range.any()) {
        (Some(_), true) => {
            return Err(Error::Config(
                "snr_db: give either an explicit grid or a range, not both".into(),
            ))
        }
        (Some(grid), false) => cfg.snr_db = grid,
        (None, true) => cfg.snr_db = range.build()?,
        (None, false) => {}
    }
    Ok(cfg)
}

#[derive(Default)]
struct SnrRange {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

impl SnrRange {
    fn any(&self) -> bool {
        self.start.is_some() || self.stop.is_some() || self.step.is_some()
    }

    fn build(&self) -> Result<Vec<f64>> {
        let (start, stop, step) = match (self.start, self.stop, self.step) {
            (Some(a), Some(b), Some(s)) => (a, b, s),
            _ => {
                return Err(Error::Config(
                    "snr_start/snr_stop/snr_step: all three are required for a range"
                        .into(),
                ))
            }
        };
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!(
                "snr_step: must be positive, got {step}"
            )));
        }
        if stop < start {
            return Err(Error::Config(format!(
                "snr_stop: {stop} is below snr_start {start}"
            )));
        }
        let mut grid = Vec::new();
        let mut i = 0u32;
        loop {
            let v = start + f64::from(i) * step;
            if v > stop + 1e-9 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        Ok(grid)
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| {
        Error::Config(format!("{key}: cannot parse {value:?} ({e})"))
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected a boolean, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_a_full_file() {
        let text = "\
# 4x4 sanity sweep
n = 4
m = 4            # receive antennas
modulation = 16qam
rho = 0.5
detectors = hmc-t, mgs, mmse
snr_start = 6
snr_stop = 14
snr_step = 4
trials = 50
master_seed = 42
snr_convention = total-unit-power
threads = 2
emit_timing = false
hmc_leapfrog_steps = 8
mgs_restarts = 3
";
        let cfg = parse_config_file(text).unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.modulation, Modulation::Qam16);
        assert_eq!(cfg.rho, 0.5);
        assert_eq!(
            cfg.detectors,
            vec![DetectorKind::HmcT, DetectorKind::Mgs, DetectorKind::Mmse]
        );
        assert_eq!(cfg.snr_db, vec![6.0, 10.0, 14.0]);
        assert_eq!(cfg.trials, 50);
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.snr_convention, SnrConvention::TotalUnitPower);
        assert_eq!(cfg.threads, 2);
        assert!(!cfg.emit_timing);
        assert_eq!(cfg.hmc.leapfrog_steps, 8);
        assert_eq!(cfg.mgs.restarts, 3);
        cfg.validate().unwrap();
    }

    #[test]
    fn explicit_grid_wins_over_default() {
        let cfg = parse_config_file("snr_db = 0, 5, 10.5").unwrap();
        assert_eq!(cfg.snr_db, vec![0.0, 5.0, 10.5]);
    }

    #[test]
    fn grid_and_range_together_is_an_error() {
        let err = parse_config_file("snr_db = 1\nsnr_start = 0\nsnr_stop = 2\nsnr_step = 1")
            .unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
    }

    #[test]
    fn partial_range_is_an_error() {
        assert!(parse_config_file("snr_start = 0").is_err());
    }

    #[test]
    fn unknown_key_is_an_error_with_line_number() {
        let err = parse_config_file("n = 4\nbogus = 1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn bad_value_names_the_field() {
        let err = parse_config_file("trials = many").unwrap_err();
        assert!(err.to_string().starts_with("invalid configuration: trials"));
    }

    #[test]
    fn range_endpoint_is_inclusive() {
        let cfg = parse_config_file("snr_start = 0\nsnr_stop = 12\nsnr_step = 4").unwrap();
        assert_eq!(cfg.snr_db, vec![0.0, 4.0, 8.0, 12.0]);
        let cfg = parse_config_file("snr_start = 0\nsnr_stop = 1\nsnr_step = 0.1").unwrap();
        assert_eq!(cfg.snr_db.len(), 11);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.n = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("n:"));

        let mut cfg = ExperimentConfig::default();
        cfg.rho = 1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("rho"));

        let mut cfg = ExperimentConfig::default();
        cfg.detectors.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.detectors.push(DetectorKind::HmcT);
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("more than once"));

        let mut cfg = ExperimentConfig::default();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.snr_db.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ml_guard_checks_search_space_at_validation_time() {
        let mut cfg = ExperimentConfig::default();
        cfg.detectors = vec![DetectorKind::Ml];
        cfg.n = 4;
        cfg.validate().unwrap();
        cfg.n = 16;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("ml"), "{err}");
        cfg.n = 16;
        cfg.modulation = Modulation::Qam64;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn detector_ids_round_trip() {
        for d in DetectorKind::ALL {
            assert_eq!(d.id().parse::<DetectorKind>().unwrap(), d);
        }
        assert!("sphere".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn convention_names_round_trip() {
        for c in [SnrConvention::PerAntennaUnitPower, SnrConvention::TotalUnitPower] {
            assert_eq!(c.name().parse::<SnrConvention>().unwrap(), c);
        }
        assert_eq!(SnrConvention::PerAntennaUnitPower.effective_n(16), 16);
        assert_eq!(SnrConvention::TotalUnitPower.effective_n(16), 1);
    }
}
