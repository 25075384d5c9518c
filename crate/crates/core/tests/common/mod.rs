#![allow(dead_code)]

use proptest::prelude::*;
use qdiode::model::{validate_config, DiodeConfig, RawConfig};

/// Random valid bath-free device with up to three auxiliary atoms.
pub fn device(n_aux: usize) -> impl Strategy<Value = DiodeConfig> {
    (
        1.5..6.0f64,
        1.0..6.0f64,
        -0.3..0.3f64,
        prop::collection::vec((0.5..5.0f64, -0.1..0.1f64), n_aux),
        1e-4..1e-2f64,
        0.2..2.0f64,
        0.2..2.0f64,
    )
        .prop_map(move |(wl, wr, g, aux, gamma, tl, tr)| {
            let raw = RawConfig {
                n_aux,
                omega_left: wl,
                omega_right: wr,
                omega_aux: aux.iter().map(|a| a.0).collect(),
                g_lr: g,
                g_la: aux.iter().map(|a| a.1).collect(),
                gamma,
                temp_left: tl,
                temp_right: tr,
                aux_bath: None,
            };
            validate_config(raw).expect("strategy draws valid devices")
        })
}

pub fn raw_pair(omega_left: f64, omega_right: f64, g_lr: f64, temp_left: f64) -> RawConfig {
    RawConfig::pair(omega_left, omega_right, g_lr, 0.001, temp_left, 0.5)
}
