//! Bundled experiment sets, one per figure tag.

use serde::Serialize;

pub struct Bundle {
    pub tag: &'static str,
    pub configs: &'static [(&'static str, &'static str)],
    /// Qualitative outcomes the run set should show.
    pub expected: &'static [&'static str],
}

macro_rules! configs {
    ($tag:literal: $($name:literal),+ $(,)?) => {
        &[$(($name, include_str!(concat!("../configs/", $tag, "/", $name, ".toml")))),+]
    };
}

pub const BUNDLES: &[Bundle] = &[
    Bundle {
        tag: "fig2",
        configs: configs!("fig2": "tfim14_time", "tfim14_variance"),
        expected: &[
            "time-mode ERR ≥ 0.7",
            "variance-mode ERR ≥ 0.8",
            "E_res falls roughly as t_a⁻² across the sweep",
        ],
    },
    Bundle {
        tag: "fig3",
        configs: configs!("fig3": "tfim14_time", "tfim14_variance"),
        expected: &[
            "pixels at zero noise reproduce the noiseless ERR",
            "mean ERR stays high while every σ is well below its quantity",
            "mean ERR degrades toward 0 once σ is comparable to its quantity",
        ],
    },
    Bundle {
        tag: "fig4",
        configs: configs!("fig4": "hva14_p3", "hva14_p4", "hva14_p5", "hva14_p6", "hva8_p3_noisy"),
        expected: &[
            "best energy decreases with depth",
            "variance-extrapolation ERR grows with depth",
            "depth-3 extrapolated energy is competitive with the raw depth-5 best",
            "noisy depth-3 extrapolation lands within a few tenths of E_gs",
        ],
    },
    Bundle {
        tag: "fig5sim",
        configs: configs!("fig5sim": "xyz4_eps006", "xyz4_eps009", "xyz4_eps012"),
        expected: &[
            "measured energies sit above E_gs by the noise floor",
            "extrapolation moves the estimate toward E_gs",
        ],
    },
    Bundle {
        tag: "fig6",
        configs: configs!("fig6": "rfim4"),
        expected: &[
            "quadrature and evolved transition probabilities approach each other as t_a grows",
            "E_res·t_a² oscillates around the boundary-term coefficient",
        ],
    },
    Bundle {
        tag: "fig7",
        configs: configs!("fig7": "tfim4_noiseless", "tfim8_noiseless", "tfim8_noisy"),
        expected: &[
            "noiseless energies decrease monotonically over the steps",
            "noisy energies decrease, then rise as noise accumulates",
            "variance extrapolation improves on the lowest measured energy",
        ],
    },
];

pub fn find(tag: &str) -> Option<&'static Bundle> {
    BUNDLES.iter().find(|b| b.tag == tag)
}

pub fn tags() -> Vec<&'static str> {
    BUNDLES.iter().map(|b| b.tag).collect()
}

#[derive(Debug, Serialize)]
pub struct ManifestRun {
    pub name: String,
    pub config_hash: String,
    pub exit_code: u8,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tag: String,
    pub seed: u64,
    pub expected: Vec<String>,
    pub runs: Vec<ManifestRun>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn bundled_configs_are_valid() {
        for b in BUNDLES {
            for (name, text) in b.configs {
                ExperimentConfig::parse(text).unwrap_or_else(|e| panic!("{}/{name}: {e}", b.tag));
            }
        }
    }

    #[test]
    fn tags_are_unique() {
        let mut t = tags();
        t.sort_unstable();
        t.dedup();
        assert_eq!(t.len(), BUNDLES.len());
    }
}
