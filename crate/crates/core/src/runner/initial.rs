//! Initial-data generators.
//!
//! Every generator samples at cell centres and is built from constants,
//! Gaussians or Neumann cosine modes, so the discrete boundary flux of the
//! resulting fields is zero.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, State};

/// Highest wavenumber a random mode may carry along each axis.
pub const MAX_WAVENUMBER: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    GaussianBump {
        /// Defaults to the centre of the domain.
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        floor: f64,
    },
    /// `offset + amplitude * sum_m c_m cos(k_m pi x / L)` with `c_m` uniform
    /// in `[-1, 1]` and `k_m` in `1..=4`.
    RandomFourier {
        seed: u64,
        modes: usize,
        offset: f64,
        amplitude: f64,
    },
}

impl FieldSpec {
    pub fn random_fourier(seed: u64, modes: usize, offset: f64, amplitude: f64) -> Self {
        FieldSpec::RandomFourier {
            seed,
            modes,
            offset,
            amplitude,
        }
    }

    /// Lower bound on the generated values that holds for every seed.
    pub fn guaranteed_min(&self) -> f64 {
        match *self {
            FieldSpec::Constant { value } => value,
            FieldSpec::GaussianBump {
                amplitude, floor, ..
            } => floor + amplitude.min(0.0),
            FieldSpec::RandomFourier {
                modes,
                offset,
                amplitude,
                ..
            } => offset - amplitude.abs() * modes as f64,
        }
    }

    pub fn generate(&self, grid: &Grid) -> Result<Field> {
        match self {
            FieldSpec::Constant { value } => Field::new(*grid, vec![*value; grid.len()]),
            FieldSpec::GaussianBump {
                center,
                width,
                amplitude,
                floor,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InitialData(format!(
                        "bump width {width} must be > 0"
                    )));
                }
                let centre: Vec<f64> = match center {
                    Some(c) if c.len() == grid.dim() => c.clone(),
                    Some(c) => {
                        return Err(Error::InitialData(format!(
                            "bump centre has {} coordinates for a {}D grid",
                            c.len(),
                            grid.dim()
                        )))
                    }
                    None => grid.extents().iter().map(|l| 0.5 * l).collect(),
                };
                let field = grid.sample(|x| {
                    let r2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
                    floor + amplitude * (-r2 / (2.0 * width * width)).exp()
                });
                Field::new(*grid, field.values)
            }
            FieldSpec::RandomFourier {
                seed,
                modes,
                offset,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let terms: Vec<(f64, [u32; 2])> = (0..*modes)
                    .map(|_| {
                        let coef = rng.gen_range(-1.0..=1.0);
                        let kx = rng.gen_range(1..=MAX_WAVENUMBER);
                        let ky = rng.gen_range(0..=MAX_WAVENUMBER);
                        (coef, [kx, ky])
                    })
                    .collect();
                let ext = grid.extents().to_vec();
                let field = grid.sample(|x| {
                    let sum: f64 = terms
                        .iter()
                        .map(|(c, k)| {
                            let mut m = c * (k[0] as f64 * PI * x[0] / ext[0]).cos();
                            if x.len() == 2 {
                                m *= (k[1] as f64 * PI * x[1] / ext[1]).cos();
                            }
                            m
                        })
                        .sum();
                    offset + amplitude * sum
                });
                Field::new(*grid, field.values)
            }
        }
    }
}

/// Generators for both components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub u: FieldSpec,
    pub v: FieldSpec,
}

impl InitialSpec {
    pub fn constant(u: f64, v: f64) -> Self {
        InitialSpec {
            u: FieldSpec::Constant { value: u },
            v: FieldSpec::Constant { value: v },
        }
    }

    /// Random cosine perturbations of `(u_level, v_level)` with relative
    /// amplitude `rel` split over three modes.
    pub fn perturbed(seed: u64, u_level: f64, v_level: f64, rel: f64) -> Self {
        const MODES: usize = 3;
        InitialSpec {
            u: FieldSpec::random_fourier(seed, MODES, u_level, rel * u_level / MODES as f64),
            v: FieldSpec::random_fourier(
                seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
                MODES,
                v_level,
                rel * v_level / MODES as f64,
            ),
        }
    }
}

/// Builds the initial state and checks `u >= 0`, `int u > 0`, `v > 0`.
pub fn generate_initial_data(spec: &InitialSpec, grid: &Grid) -> Result<State> {
    let u = spec.u.generate(grid)?;
    let v = spec.v.generate(grid)?;
    if u.min() < 0.0 {
        return Err(Error::InitialData(format!("min(u0) = {} < 0", u.min())));
    }
    if !(u.integral()? > 0.0) {
        return Err(Error::InitialData("u0 vanishes identically".into()));
    }
    if !(v.min() > 0.0) {
        return Err(Error::InitialData(format!("min(v0) = {} <= 0", v.min())));
    }
    State::new(0.0, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian, Grid};
    use proptest::prelude::*;

    #[test]
    fn constant_fields() {
        let g = Grid::new_1d(1.0, 16).unwrap();
        let s = generate_initial_data(&InitialSpec::constant(0.2, 0.2), &g).unwrap();
        assert!(s.u.values.iter().chain(&s.v.values).all(|&x| x == 0.2));
    }

    #[test]
    fn gaussian_bump_is_nonnegative_and_nonzero() {
        let g = Grid::new_2d(2.0, 2.0, 16, 16).unwrap();
        let spec = InitialSpec {
            u: FieldSpec::GaussianBump {
                center: Some(vec![0.5, 1.5]),
                width: 0.2,
                amplitude: 3.0,
                floor: 0.0,
            },
            v: FieldSpec::Constant { value: 1.0 },
        };
        let s = generate_initial_data(&spec, &g).unwrap();
        assert!(s.u.min() >= 0.0);
        assert!(s.u.integral().unwrap() > 0.0);
    }

    #[test]
    fn random_fourier_respects_offset_bound() {
        let g = Grid::new_1d(4.0, 64).unwrap();
        let spec = FieldSpec::random_fourier(7, 3, 1.0, 0.3);
        assert!((spec.guaranteed_min() - 0.1).abs() < 1e-15);
        let f = spec.generate(&g).unwrap();
        assert!(f.min() >= 0.1);
        assert!(f.max() > f.min());
    }

    #[test]
    fn nonpositive_v_is_rejected() {
        let g = Grid::new_1d(1.0, 16).unwrap();
        let spec = InitialSpec {
            u: FieldSpec::Constant { value: 1.0 },
            v: FieldSpec::random_fourier(1, 3, 0.1, 1.0),
        };
        assert!(matches!(
            generate_initial_data(&spec, &g),
            Err(Error::InitialData(_))
        ));
        let zero_u = InitialSpec::constant(0.0, 1.0);
        assert!(generate_initial_data(&zero_u, &g).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = InitialSpec {
            u: FieldSpec::GaussianBump {
                center: None,
                width: 0.5,
                amplitude: 1.0,
                floor: 0.1,
            },
            v: FieldSpec::random_fourier(3, 2, 1.0, 0.2),
        };
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("kind = \"gaussian-bump\""));
        let back: InitialSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #[test]
        fn random_fourier_deterministic_and_bounded(seed in any::<u64>(), modes in 1usize..6, two_d in any::<bool>()) {
            let g = if two_d { Grid::new_2d(3.0, 2.0, 12, 10).unwrap() } else { Grid::new_1d(3.0, 40).unwrap() };
            let spec = FieldSpec::random_fourier(seed, modes, 1.0, 0.9 / modes as f64);
            let a = spec.generate(&g).unwrap();
            prop_assert_eq!(&a, &spec.generate(&g).unwrap());
            prop_assert!(a.min() >= spec.guaranteed_min() - 1e-12);
            // smooth Neumann data: discrete Laplacian integrates to zero
            prop_assert!(laplacian(&a).integral().unwrap().abs() < 1e-9);
        }
    }
}
