use crate::error::ModelError;
use crate::model::{Risk, Sex, Stratum};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Unit costs in pounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub screen: f64,
    pub vac: f64,
    pub test: f64,
    pub blood: f64,
    pub treat: f64,
    pub dis: f64,
    pub gp: f64,
}

/// QALY weights per health state. Dead is always 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utilities {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl Utilities {
    pub fn by_state(&self) -> [f64; 5] {
        [self.u1, self.u2, self.u3, self.u4, 0.0]
    }
}

/// All epidemiological, intervention, cost and utility parameters.
///
/// The four transition parameters are per-cycle probabilities when fed to
/// the Markov engine and per-year rates when fed to the ODE engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    /// Partner acquisition rate per stratum, indexed by [`Stratum::index`].
    pub omega: [f64; 4],
    pub chi: f64,
    pub beta: f64,
    pub trans_2_3: f64,
    pub trans_3_4: f64,
    pub trans_4_5: f64,
    /// All-cause mortality, shared by states 1-4.
    pub trans_1_5: f64,
    pub eta: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub costs: Costs,
    pub utilities: Utilities,
}

impl ParameterSet {
    /// Reference means of the case study.
    pub fn reference() -> Self {
        let mut omega = [0.0; 4];
        omega[Stratum::MALE_HIGH.index()] = 9.10;
        omega[Stratum::MALE_LOW.index()] = 2.98;
        omega[Stratum::FEMALE_HIGH.index()] = 9.00;
        omega[Stratum::FEMALE_LOW.index()] = 1.96;
        ParameterSet {
            omega,
            chi: 0.01,
            beta: 0.16,
            trans_2_3: 0.80,
            trans_3_4: 0.09,
            trans_4_5: 0.04,
            trans_1_5: 0.0005,
            eta: 0.90,
            sigma: 0.90,
            alpha: 0.90,
            gamma: 0.90,
            costs: Costs {
                screen: 25.39,
                vac: 150.02,
                test: 20.01,
                blood: 30.0,
                treat: 4999.78,
                dis: 9999.95,
                gp: 50.01,
            },
            utilities: Utilities { u1: 1.0, u2: 0.70, u3: 0.60, u4: 0.30 },
        }
    }

    pub fn omega(&self, stratum: Stratum) -> f64 {
        self.omega[stratum.index()]
    }

    pub fn get(&self, id: ParamId) -> f64 {
        use ParamId::*;
        match id {
            OmegaMH => self.omega[Stratum::MALE_HIGH.index()],
            OmegaML => self.omega[Stratum::MALE_LOW.index()],
            OmegaFH => self.omega[Stratum::FEMALE_HIGH.index()],
            OmegaFL => self.omega[Stratum::FEMALE_LOW.index()],
            Chi => self.chi,
            Beta => self.beta,
            Trans23 => self.trans_2_3,
            Trans34 => self.trans_3_4,
            Trans45 => self.trans_4_5,
            Trans15 => self.trans_1_5,
            Eta => self.eta,
            Sigma => self.sigma,
            Alpha => self.alpha,
            Gamma => self.gamma,
            CScreen => self.costs.screen,
            CVac => self.costs.vac,
            CTest => self.costs.test,
            CBlood => self.costs.blood,
            CTreat => self.costs.treat,
            CDis => self.costs.dis,
            CGp => self.costs.gp,
            U1 => self.utilities.u1,
            U2 => self.utilities.u2,
            U3 => self.utilities.u3,
            U4 => self.utilities.u4,
        }
    }

    pub fn set(&mut self, id: ParamId, v: f64) {
        use ParamId::*;
        let slot = match id {
            OmegaMH => &mut self.omega[Stratum::MALE_HIGH.index()],
            OmegaML => &mut self.omega[Stratum::MALE_LOW.index()],
            OmegaFH => &mut self.omega[Stratum::FEMALE_HIGH.index()],
            OmegaFL => &mut self.omega[Stratum::FEMALE_LOW.index()],
            Chi => &mut self.chi,
            Beta => &mut self.beta,
            Trans23 => &mut self.trans_2_3,
            Trans34 => &mut self.trans_3_4,
            Trans45 => &mut self.trans_4_5,
            Trans15 => &mut self.trans_1_5,
            Eta => &mut self.eta,
            Sigma => &mut self.sigma,
            Alpha => &mut self.alpha,
            Gamma => &mut self.gamma,
            CScreen => &mut self.costs.screen,
            CVac => &mut self.costs.vac,
            CTest => &mut self.costs.test,
            CBlood => &mut self.costs.blood,
            CTreat => &mut self.costs.treat,
            CDis => &mut self.costs.dis,
            CGp => &mut self.costs.gp,
            U1 => &mut self.utilities.u1,
            U2 => &mut self.utilities.u2,
            U3 => &mut self.utilities.u3,
            U4 => &mut self.utilities.u4,
        };
        *slot = v;
    }

    /// Checks the engine-independent invariants: probabilities in [0, 1],
    /// rates and costs nonnegative, everything finite.
    pub fn validate(&self) -> Result<(), ModelError> {
        for id in ParamId::ALL {
            let v = self.get(id);
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter { name: id.name(), value: v });
            }
            let ok = match id.kind() {
                ParamKind::Probability => (0.0..=1.0).contains(&v),
                ParamKind::Rate | ParamKind::Cost | ParamKind::Transition => v >= 0.0,
            };
            if !ok {
                return Err(ModelError::InvalidParameter { name: id.name(), value: v });
            }
        }
        Ok(())
    }

    /// Builds a parameter set from `(name, value)` pairs on top of `self`.
    pub fn with_values<'a, I>(mut self, values: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        for (name, v) in values {
            let id = ParamId::parse(name).ok_or_else(|| ModelError::UnknownParameter(name.to_string()))?;
            self.set(id, v);
        }
        Ok(self)
    }
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self::reference()
    }
}

/// What a parameter measures, which fixes its support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Per-year rate, nonnegative.
    Rate,
    /// Probability in [0, 1].
    Probability,
    /// Probability in the Markov engine, rate in the ODE engine.
    Transition,
    Cost,
}

/// Identifier for every scalar in a [`ParameterSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamId {
    OmegaMH,
    OmegaML,
    OmegaFH,
    OmegaFL,
    Chi,
    Beta,
    Trans23,
    Trans34,
    Trans45,
    Trans15,
    Eta,
    Sigma,
    Alpha,
    Gamma,
    CScreen,
    CVac,
    CTest,
    CBlood,
    CTreat,
    CDis,
    CGp,
    U1,
    U2,
    U3,
    U4,
}

impl ParamId {
    pub const ALL: [ParamId; 25] = [
        ParamId::OmegaMH,
        ParamId::OmegaML,
        ParamId::OmegaFH,
        ParamId::OmegaFL,
        ParamId::Chi,
        ParamId::Beta,
        ParamId::Trans23,
        ParamId::Trans34,
        ParamId::Trans45,
        ParamId::Trans15,
        ParamId::Eta,
        ParamId::Sigma,
        ParamId::Alpha,
        ParamId::Gamma,
        ParamId::CScreen,
        ParamId::CVac,
        ParamId::CTest,
        ParamId::CBlood,
        ParamId::CTreat,
        ParamId::CDis,
        ParamId::CGp,
        ParamId::U1,
        ParamId::U2,
        ParamId::U3,
        ParamId::U4,
    ];

    /// Parameters that shape the natural history under the status quo and
    /// are therefore informed by the calibration series.
    pub const NATURAL_HISTORY: [ParamId; 10] = [
        ParamId::OmegaMH,
        ParamId::OmegaML,
        ParamId::OmegaFH,
        ParamId::OmegaFL,
        ParamId::Chi,
        ParamId::Beta,
        ParamId::Trans23,
        ParamId::Trans34,
        ParamId::Trans45,
        ParamId::Trans15,
    ];

    pub fn omega_for(stratum: Stratum) -> ParamId {
        match (stratum.sex, stratum.risk) {
            (Sex::Male, Risk::High) => ParamId::OmegaMH,
            (Sex::Male, Risk::Low) => ParamId::OmegaML,
            (Sex::Female, Risk::High) => ParamId::OmegaFH,
            (Sex::Female, Risk::Low) => ParamId::OmegaFL,
        }
    }

    /// Config / CSV key.
    pub fn name(self) -> &'static str {
        use ParamId::*;
        match self {
            OmegaMH => "omega_mh",
            OmegaML => "omega_ml",
            OmegaFH => "omega_fh",
            OmegaFL => "omega_fl",
            Chi => "chi",
            Beta => "beta",
            Trans23 => "trans_2_3",
            Trans34 => "trans_3_4",
            Trans45 => "trans_4_5",
            Trans15 => "trans_1_5",
            Eta => "eta",
            Sigma => "sigma",
            Alpha => "alpha",
            Gamma => "gamma",
            CScreen => "c_screen",
            CVac => "c_vac",
            CTest => "c_test",
            CBlood => "c_blood",
            CTreat => "c_treat",
            CDis => "c_dis",
            CGp => "c_gp",
            U1 => "u_1",
            U2 => "u_2",
            U3 => "u_3",
            U4 => "u_4",
        }
    }

    pub fn description(self) -> &'static str {
        use ParamId::*;
        match self {
            OmegaMH => "Partner acquisition rate (high-risk males)",
            OmegaML => "Partner acquisition rate (low-risk males)",
            OmegaFH => "Partner acquisition rate (high-risk females)",
            OmegaFL => "Partner acquisition rate (low-risk females)",
            Chi => "Proliferation parameter",
            Beta => "STI transmission probability per partnership",
            Trans23 => "Transition parameter from state 2 to state 3",
            Trans34 => "Transition parameter from state 3 to state 4",
            Trans45 => "Transition parameter from state 4 to state 5",
            Trans15 => "Transition parameter from state 1 to state 5",
            Eta => "Probability of STI diagnosis",
            Sigma => "Screening probability",
            Alpha => "Vaccine coverage parameter",
            Gamma => "Vaccine efficacy parameter",
            CScreen => "Unit cost of screening",
            CVac => "Unit cost of vaccination",
            CTest => "Unit cost of STI test",
            CBlood => "Unit cost of blood test",
            CTreat => "Unit cost of treatment",
            CDis => "Unit cost of disease treatment",
            CGp => "Unit cost of visit to general practitioner",
            U1 => "Health utility of susceptible",
            U2 => "Health utility of infected",
            U3 => "Health utility of asymptomatic",
            U4 => "Health utility of morbid",
        }
    }

    pub fn parse(s: &str) -> Option<ParamId> {
        let s = s.trim();
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }

    pub fn kind(self) -> ParamKind {
        use ParamId::*;
        match self {
            OmegaMH | OmegaML | OmegaFH | OmegaFL | Chi => ParamKind::Rate,
            Trans23 | Trans34 | Trans45 | Trans15 => ParamKind::Transition,
            Beta | Eta | Sigma | Alpha | Gamma | U1 | U2 | U3 | U4 => ParamKind::Probability,
            CScreen | CVac | CTest | CBlood | CTreat | CDis | CGp => ParamKind::Cost,
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_set_roundtrip_every_id() {
        let mut p = ParameterSet::reference();
        for (k, id) in ParamId::ALL.into_iter().enumerate() {
            p.set(id, k as f64 + 0.5);
        }
        for (k, id) in ParamId::ALL.into_iter().enumerate() {
            assert_eq!(p.get(id), k as f64 + 0.5, "{id}");
            assert_eq!(ParamId::parse(id.name()), Some(id));
        }
    }

    #[test]
    fn reference_is_valid() {
        ParameterSet::reference().validate().unwrap();
        assert_eq!(ParameterSet::reference().utilities.by_state()[4], 0.0);
    }

    #[test]
    fn invalid_probability_rejected() {
        let mut p = ParameterSet::reference();
        p.beta = -0.1;
        assert!(matches!(p.validate(), Err(ModelError::InvalidParameter { name: "beta", .. })));
        let mut p = ParameterSet::reference();
        p.costs.treat = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn with_values_rejects_unknown() {
        let p = ParameterSet::reference().with_values([("beta", 0.2)]).unwrap();
        assert_eq!(p.beta, 0.2);
        assert!(ParameterSet::reference().with_values([("bogus", 1.0)]).is_err());
    }
}
