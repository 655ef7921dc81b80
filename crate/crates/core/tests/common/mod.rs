#![allow(dead_code)]

use qswitch_core::channels::MeasurementStrength;
use qswitch_core::qmat::{c, ComplexMatrix, DensityOperator, C64};
use qswitch_core::states::{ControlAngles, Family, GibbsParams, InitialStateSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn s(x: f64) -> MeasurementStrength {
    MeasurementStrength::new(x).unwrap()
}

/// Ginibre-distributed mixed state of dimension `dim`.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let entries: Vec<C64> = (0..dim * dim)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let g = ComplexMatrix::from_vec(dim, entries).unwrap();
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityOperator::try_new(m.scale_real(1.0 / tr)).unwrap()
}

pub fn random_spec(rng: &mut impl Rng, family: Family) -> InitialStateSpec {
    let g = GibbsParams::new(rng.gen_range(0.0..5.0)).unwrap();
    let angles = ControlAngles::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..2.0 * PI)).unwrap();
    match family {
        Family::Uncorrelated => InitialStateSpec::uncorrelated(angles, rng.gen_range(0.0..=1.0), g),
        Family::Separable => {
            let z0 = rng.gen_range(0.5..=1.0);
            InitialStateSpec::separable(angles, z0, rng.gen_range(0.0..=z0), g)
        }
        Family::Entangled => {
            let z0 = rng.gen_range(0.5..=1.0);
            let z1 = rng.gen_range(0.0..=z0);
            let [p0, p1] = g.populations();
            let bound = (p0 * p1 * z0 * (1.0 - z1)).sqrt().min(g.xi_max());
            let xi = rng.gen_range(0.0..=1.0) * bound * (1.0 - 1e-9);
            InitialStateSpec::entangled(angles, z0, z1, xi, rng.gen_range(0.0..2.0 * PI), g)
        }
    }
    .unwrap()
}

/// Any family, chosen uniformly.
pub fn random_any_spec(rng: &mut impl Rng) -> InitialStateSpec {
    let family = Family::ALL[rng.gen_range(0..3)];
    random_spec(rng, family)
}

pub fn experiment(family: Family) -> InitialStateSpec {
    let g = GibbsParams::from_temperature(1.65).unwrap();
    let angles = ControlAngles::new(PI / 2.0, PI / 4.0).unwrap();
    match family {
        Family::Uncorrelated => InitialStateSpec::uncorrelated(angles, 1.0, g),
        Family::Separable => InitialStateSpec::separable(angles, 1.0, 0.0, g),
        Family::Entangled => InitialStateSpec::entangled(angles, 1.0, 0.0, g.xi_max(), 0.0, g),
    }
    .unwrap()
}

pub fn a_grid() -> Vec<f64> {
    (0..51).map(|i| i as f64 / 50.0).collect()
}
