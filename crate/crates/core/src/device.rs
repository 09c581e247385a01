use serde::{Deserialize, Serialize};

/// Recording hardware. Channel counts are fixed per device; sample rates
/// are nominal defaults and can be overridden by dataset manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Myo,
    Delsys,
}

impl Device {
    pub fn channels(&self) -> usize {
        match self {
            Device::Myo => 8,
            Device::Delsys => 5,
        }
    }

    pub fn default_sample_rate_hz(&self) -> f64 {
        match self {
            Device::Myo => 200.0,
            Device::Delsys => 2000.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Device::Myo => "myo",
            Device::Delsys => "delsys",
        }
    }
}

impl std::fmt::Display for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Device {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "myo" => Ok(Device::Myo),
            "delsys" => Ok(Device::Delsys),
            other => Err(crate::Error::Usage(format!("unknown device '{other}' (expected myo or delsys)"))),
        }
    }
}
