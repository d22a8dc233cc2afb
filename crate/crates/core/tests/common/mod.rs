//! Synthetic UJIIndoorLoc-format files for tests. Std only, so the CLI tests
//! can include this module too.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

pub struct Synth {
    pub users: u32,
    pub rows_per_user: usize,
    /// Fraction of rows (per mille) whose floor label is replaced with noise.
    pub label_noise_permille: u64,
    pub seed: u64,
}

impl Default for Synth {
    fn default() -> Self {
        Synth {
            users: 3,
            rows_per_user: 40,
            label_noise_permille: 50,
            seed: 1,
        }
    }
}

/// splitmix64 step; a tiny deterministic generator.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

pub fn header() -> String {
    let mut cols: Vec<String> = (1..=520).map(|i| format!("WAP{i:03}")).collect();
    for c in [
        "LONGITUDE",
        "LATITUDE",
        "FLOOR",
        "BUILDINGID",
        "SPACEID",
        "RELATIVEPOSITION",
        "USERID",
        "PHONEID",
        "TIMESTAMP",
    ] {
        cols.push(c.to_string());
    }
    cols.join(",")
}

/// Each user visits a subset of floors. Floor `f` lights up WAPs
/// `10f+1..=10f+4`; inside/outside lights up WAP 300 or 301.
pub fn render(s: &Synth) -> String {
    let mut rng = Mix(s.seed);
    let mut out = header();
    out.push('\n');
    for user in 1..=s.users {
        let floors: Vec<i64> = (0..5).filter(|f| (f + user as i64) % 4 != 0).collect();
        for _ in 0..s.rows_per_user {
            let floor = floors[rng.below(floors.len() as u64) as usize];
            let rel = 1 + rng.below(2) as i64;
            let mut rssi = vec![100i64; 520];
            for j in 1..=4 {
                rssi[(10 * floor + j) as usize - 1] = -40 - rng.below(30) as i64;
            }
            rssi[298 + rel as usize] = -50 - rng.below(20) as i64;
            for _ in 0..5 {
                rssi[400 + rng.below(100) as usize] = -60 - rng.below(44) as i64;
            }
            let label = if rng.below(1000) < s.label_noise_permille {
                rng.below(5) as i64
            } else {
                floor
            };
            let line = rssi
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "{line},{:.4},{:.4},{label},{},{},{rel},{user},{},{}",
                -7600.0 - rng.below(100) as f64,
                4_864_900.0 + rng.below(100) as f64,
                floor % 3,
                100 + rng.below(150),
                user % 7,
                1_371_700_000 + rng.below(10_000)
            );
        }
    }
    out
}

pub fn write(path: &Path, s: &Synth) {
    std::fs::write(path, render(s)).expect("write synthetic file");
}
