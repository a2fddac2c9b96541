use std::fmt;
use std::str::FromStr;

use crate::boolean::MAX_VARS;
use crate::error::{Error, Result};
use crate::geometry::AngleBudget;
use crate::polynomial::MAX_K_EFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    SharedSubspace,
    TwoLevel,
    AnchoredConjunctions,
    AnchorSet,
    Polynomials,
}

impl Scenario {
    pub const ALL: [Scenario; 5] =
        [Scenario::SharedSubspace, Scenario::TwoLevel, Scenario::AnchoredConjunctions, Scenario::AnchorSet, Scenario::Polynomials];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::SharedSubspace => "shared_subspace",
            Scenario::TwoLevel => "two_level",
            Scenario::AnchoredConjunctions => "anchored_conjunctions",
            Scenario::AnchorSet => "anchor_set",
            Scenario::Polynomials => "polynomials",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {s:?}")))
    }
}

/// Flat experiment configuration. Keys not used by a scenario are ignored
/// by its driver but still echoed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub tau: usize,
    pub c: usize,
    /// Planted dictionary size `|M|` for `anchor_set`.
    pub metafeatures: usize,
    pub b: f64,
    /// Maximum terms per planted polynomial.
    pub t: usize,
    pub eps: f64,
    pub delta: f64,
    /// Maximum off-subspace perturbation angle (radians) for linear targets.
    pub beta: f64,
    pub eps_acc: f64,
    pub eps_acc_tilde: f64,
    /// Fresh samples per task for the reported error; 0 disables it.
    pub eval_samples: usize,
    pub max_retries: u32,
    /// Deliberately break the scenario's structural assumption.
    pub plant_violation: bool,
    pub seed: u64,
    pub trials: usize,
}

pub const CONFIG_KEYS: &[&str] = &[
    "scenario", "n", "m", "k", "r", "tau", "c", "metafeatures", "B", "t", "eps", "delta", "beta", "eps_acc",
    "eps_acc_tilde", "eval_samples", "max_retries", "plant_violation", "seed", "trials",
];

impl ScenarioConfig {
    /// Small defaults for each scenario; every field can be overridden.
    pub fn defaults(scenario: Scenario) -> Self {
        let base = ScenarioConfig {
            scenario,
            n: 10,
            m: 20,
            k: 3,
            r: 2,
            tau: 2,
            c: 2,
            metafeatures: 4,
            b: 10.0,
            t: 4,
            eps: 0.1,
            delta: 0.05,
            beta: 0.0,
            eps_acc: 1e-3,
            eps_acc_tilde: 1e-2,
            eval_samples: 2000,
            max_retries: 16,
            plant_violation: false,
            seed: 0,
            trials: 1,
        };
        match scenario {
            Scenario::SharedSubspace | Scenario::TwoLevel => ScenarioConfig { n: 12, k: 4, ..base },
            Scenario::AnchoredConjunctions => base,
            Scenario::AnchorSet => ScenarioConfig { n: 12, m: 20, ..base },
            Scenario::Polynomials => ScenarioConfig { n: 8, ..base },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(i + 1, "expected key=value"))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = pairs
            .iter()
            .find(|(_, k, _)| k == "scenario")
            .ok_or_else(|| Error::parse(1, "missing scenario key"))?
            .2
            .parse::<Scenario>()?;
        let mut cfg = ScenarioConfig::defaults(scenario);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| Error::parse(*line, e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Applies one override; `scenario` resets nothing else.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
        }
        match key {
            "scenario" => self.scenario = value.parse()?,
            "n" => self.n = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "metafeatures" => self.metafeatures = num(key, value)?,
            "B" => self.b = num(key, value)?,
            "t" => self.t = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "eps_acc" => self.eps_acc = num(key, value)?,
            "eps_acc_tilde" => self.eps_acc_tilde = num(key, value)?,
            "eval_samples" => self.eval_samples = num(key, value)?,
            "max_retries" => self.max_retries = num(key, value)?,
            "plant_violation" => self.plant_violation = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let v: [(&str, String); 20] = [
            ("scenario", self.scenario.to_string()),
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("k", self.k.to_string()),
            ("r", self.r.to_string()),
            ("tau", self.tau.to_string()),
            ("c", self.c.to_string()),
            ("metafeatures", self.metafeatures.to_string()),
            ("B", self.b.to_string()),
            ("t", self.t.to_string()),
            ("eps", self.eps.to_string()),
            ("delta", self.delta.to_string()),
            ("beta", self.beta.to_string()),
            ("eps_acc", self.eps_acc.to_string()),
            ("eps_acc_tilde", self.eps_acc_tilde.to_string()),
            ("eval_samples", self.eval_samples.to_string()),
            ("max_retries", self.max_retries.to_string()),
            ("plant_violation", self.plant_violation.to_string()),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
        ];
        v.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn one_level_budget(&self) -> Result<AngleBudget> {
        AngleBudget::one_level_with_accuracy(self.eps, self.k, self.eps_acc)
    }

    pub fn two_level_budget(&self) -> Result<AngleBudget> {
        AngleBudget::two_level_with_accuracy(self.eps, self.k, self.tau, self.eps_acc_tilde, self.eps_acc)
    }

    /// Checks every parameter relation the scenario's driver relies on.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 || self.m == 0 || self.k == 0 || self.trials == 0 {
            return bad("n, m, k and trials must be positive".into());
        }
        if self.n > MAX_VARS {
            return bad(format!("n={} exceeds {MAX_VARS}", self.n));
        }
        if !(self.eps > 0.0 && self.eps < 1.0 && self.delta > 0.0 && self.delta < 1.0) {
            return bad("eps and delta must lie in (0,1)".into());
        }
        if self.eval_samples != 0 && self.eval_samples < 100 {
            return bad("eval_samples must be 0 or at least 100".into());
        }
        match self.scenario {
            Scenario::SharedSubspace => {
                if self.k > self.n {
                    return bad(format!("k={} exceeds n={}", self.k, self.n));
                }
                let b = self.one_level_budget()?;
                self.check_beta(b.gamma)?;
            }
            Scenario::TwoLevel => {
                if self.k > self.n || self.tau > self.k || self.tau == 0 || self.r == 0 {
                    return bad("two_level needs 1 ≤ tau ≤ k ≤ n and r ≥ 1".into());
                }
                let b = self.two_level_budget()?;
                self.check_beta(b.gamma)?;
            }
            Scenario::AnchoredConjunctions => {
                if self.k > self.n {
                    return bad("each of the k metafeatures needs its own anchor variable: k ≤ n".into());
                }
            }
            Scenario::AnchorSet => {
                if !(1..=3).contains(&self.c) || self.metafeatures == 0 || self.n < self.c + 1 {
                    return bad("anchor_set needs 1 ≤ c ≤ 3, metafeatures ≥ 1 and n > c".into());
                }
            }
            Scenario::Polynomials => {
                if self.k > self.n || self.k > MAX_K_EFF || self.t == 0 || !(self.b > 0.0) {
                    return bad(format!("polynomials needs k ≤ min(n, {MAX_K_EFF}), t ≥ 1 and B > 0"));
                }
            }
        }
        if self.plant_violation && !matches!(self.scenario, Scenario::AnchoredConjunctions | Scenario::AnchorSet) {
            return bad("plant_violation is only supported for anchored_conjunctions and anchor_set".into());
        }
        if self.plant_violation && self.scenario == Scenario::AnchoredConjunctions && self.k < 2 {
            return bad("plant_violation needs k ≥ 2".into());
        }
        Ok(())
    }

    fn check_beta(&self, gamma: f64) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta <= gamma / 2.0) {
            return Err(Error::InvalidArgument(format!("beta={} must lie in [0, gamma/2 = {}]", self.beta, gamma / 2.0)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_echo() {
        let c = ScenarioConfig::parse("# demo\nscenario = two_level\nn=60\nk = 6\nr=4\ntau=2\nB=2.5\n").unwrap();
        assert_eq!((c.scenario, c.n, c.k, c.r, c.tau, c.b), (Scenario::TwoLevel, 60, 6, 4, 2, 2.5));
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.to_text().lines().count(), CONFIG_KEYS.len());
        assert!(ScenarioConfig::parse("n=3\n").is_err());
        assert!(ScenarioConfig::parse("scenario=polynomials\nbogus=1\n").is_err());
        match ScenarioConfig::parse("scenario=polynomials\nn=x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        for s in Scenario::ALL {
            ScenarioConfig::defaults(s).validate().unwrap();
        }
        let mut c = ScenarioConfig::defaults(Scenario::TwoLevel);
        c.tau = c.k + 1;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::defaults(Scenario::SharedSubspace);
        c.beta = 1.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::defaults(Scenario::AnchorSet);
        c.c = 4;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::defaults(Scenario::Polynomials);
        c.plant_violation = true;
        assert!(c.validate().is_err());
    }
}
