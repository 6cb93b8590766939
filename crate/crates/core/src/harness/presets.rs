//! Named coefficient scenarios used by the verification suites and the CLI.

use crate::coefficients::ProfileSpec;

/// `(name, profile)`; every entry parses.
pub const PRESETS: [(&str, &str); 5] = [
    ("interval", "interval:mu0=0.3,t0=0,t1=1"),
    ("algebraic", "algebraic:p=2,mu0=1"),
    ("gaussian", "gaussian:mu0=1,sigma=1"),
    ("bump", "gaussian:mu0=1,sigma=1*bump:center=3.141592653589793,width=0.5,height=1"),
    // negative coefficient: energy can grow
    ("antidamped", "interval:mu0=-0.25,t0=0,t1=1"),
];

pub fn preset(name: &str) -> Option<ProfileSpec> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s.parse().expect("preset parses"))
}

pub fn presets() -> Vec<(&'static str, ProfileSpec)> {
    PRESETS.iter().map(|(n, s)| (*n, s.parse().expect("preset parses"))).collect()
}

/// Presets with `b >= 0` everywhere.
pub fn dissipative_presets() -> Vec<(&'static str, ProfileSpec)> {
    presets().into_iter().filter(|(n, _)| *n != "antidamped").collect()
}
