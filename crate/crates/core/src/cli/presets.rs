//! Built-in scenarios for the standard parameter sets. All use an Ohmic
//! bath with `g = 0.05`, `ω_c = 5`, `β = 1`.

use super::scenario::Scenario;
use crate::error::{Error, Result};

struct Preset {
    name: &'static str,
    summary: &'static str,
    body: &'static str,
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1",
        summary: "N=1, pure dephasing (eps=0, delta=4): master equation vs exact, jz",
        body: "[system]\nepsilon = 0\ndelta = 4\nn_atoms = 1\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\nexact_dephasing = true\n[output]\nobservables = jz, jy\n",
    },
    Preset {
        name: "fig2",
        summary: "N=10, pure dephasing (eps=0, delta=4): master equation vs exact, jz",
        body: "[system]\nepsilon = 0\ndelta = 4\nn_atoms = 10\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\nexact_dephasing = true\n[output]\nobservables = jz, jy\n",
    },
    Preset {
        name: "fig3",
        summary: "N=2, eps=0.5, delta=3.5: master equation, jz",
        body: "[system]\nepsilon = 0.5\ndelta = 3.5\nn_atoms = 2\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\n[output]\nobservables = jz\n",
    },
    Preset {
        name: "fig4",
        summary: "N=10, eps=0.5, delta=3.5: master equation, jz",
        body: "[system]\nepsilon = 0.5\ndelta = 3.5\nn_atoms = 10\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\n[output]\nobservables = jz\n",
    },
    Preset {
        name: "fig5",
        summary: "N=10, eps=1.5, delta=2.5: master equation, jz",
        body: "[system]\nepsilon = 1.5\ndelta = 2.5\nn_atoms = 10\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\n[output]\nobservables = jz\n",
    },
    Preset {
        name: "fig6",
        summary: "N=2, eps=0.5, delta=3.5: master equation, jz2",
        body: "[system]\nepsilon = 0.5\ndelta = 3.5\nn_atoms = 2\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\n[output]\nobservables = jz2\n",
    },
    Preset {
        name: "fig7",
        summary: "N=10, eps=0.5, delta=3.5: master equation, jz2",
        body: "[system]\nepsilon = 0.5\ndelta = 3.5\nn_atoms = 10\n[simulation]\nt_max = 2\n\
               [engines]\nmaster_equation = true\n[output]\nobservables = jz2\n",
    },
    Preset {
        name: "fig8",
        summary: "N=1000, pure dephasing (eps=0, delta=4): exact vs short-time, jz",
        body: "[system]\nepsilon = 0\ndelta = 4\nn_atoms = 1000\n[simulation]\nt_max = 0.05\ndt = 0.0005\n\
               [engines]\nexact_dephasing = true\nshort_time = true\n[output]\nobservables = jz, jy\n",
    },
    Preset {
        name: "fig9",
        summary: "N=1000, eps=0.5, delta=3.5: short-time expansion, jz",
        body: "[system]\nepsilon = 0.5\ndelta = 3.5\nn_atoms = 1000\n[simulation]\nt_max = 0.05\ndt = 0.0005\n\
               [engines]\nshort_time = true\n[output]\nobservables = jz, jy\n",
    },
    Preset {
        name: "fig10",
        summary: "N=10, eps=1, delta=3, prepared along +x: master equation, jx",
        body: "[system]\nepsilon = 1\ndelta = 3\nn_atoms = 10\n[preparation]\nstate = plus_x\n\
               [simulation]\nt_max = 2\n[engines]\nmaster_equation = true\n[output]\nobservables = jx, jz\n",
    },
    Preset {
        name: "upstate",
        summary: "N=10, eps=1.5, delta=2.5, prepared in the up state: master equation, jz",
        body: "[system]\nepsilon = 1.5\ndelta = 2.5\nn_atoms = 10\n[preparation]\nstate = up_z\n\
               [simulation]\nt_max = 2\n[engines]\nmaster_equation = true\n[output]\nobservables = jz\n",
    },
];

const BATH: &str = "[bath]\ng = 0.05\nomega_c = 5\nbeta = 1\n";

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// `(name, one-line summary)` for every preset.
pub fn catalogue() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.name, p.summary)).collect()
}

/// Scenario text of a preset.
pub fn text(name: &str) -> Result<String> {
    let p = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}' (known: {})", names().join(", "))))?;
    Ok(format!("name = {}\n{}{}", p.name, BATH, p.body))
}

pub fn load(name: &str) -> Result<Scenario> {
    Scenario::parse(&text(name)?)
}
