//! Reproducible random smooth fields, used for sampled diagnostics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, PairField, RealField};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of `bumps` Gaussians with random signed amplitudes, centers in
/// `|x| < L/4` and widths in `[0.5, 3]`. With `even` each bump is mirrored.
pub fn random_bumps<R: Rng>(grid: Grid, rng: &mut R, bumps: usize, even: bool) -> RealField {
    let quarter = 0.25 * grid.half_width();
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-quarter..quarter),
                rng.gen_range(0.5..3.0),
            )
        })
        .collect();
    let field = RealField::from_fn(grid, |x| {
        params
            .iter()
            .map(|&(a, c, s)| {
                let bump = |y: f64| (-((y - c) / s).powi(2)).exp();
                if even {
                    0.5 * a * (bump(x) + bump(-x))
                } else {
                    a * bump(x)
                }
            })
            .sum()
    });
    if even {
        field.symmetrized()
    } else {
        field
    }
}

/// Like [`random_bumps`] with positive amplitudes.
pub fn random_positive_bumps<R: Rng>(
    grid: Grid,
    rng: &mut R,
    bumps: usize,
    even: bool,
) -> RealField {
    let f = random_bumps(grid, rng, bumps, even);
    let base = random_bumps(grid, rng, 1, even).map(f64::abs);
    f.map(f64::abs).add_scaled(1.0, &base)
}

pub fn random_pair<R: Rng>(grid: Grid, rng: &mut R, even: bool) -> PairField {
    PairField {
        u: random_bumps(grid, rng, 3, even),
        v: random_bumps(grid, rng, 3, even),
    }
}
