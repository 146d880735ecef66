//! The two spline multiresolution analyses: piecewise linear (`Deg1`, spaces V⁰)
//! and piecewise quadratic (`Deg2`, spaces V¹), linked by φ₁′ = φ₀ − φ₀(·−1).

use std::f64::consts::SQRT_2;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplineDegree {
    /// Hat function φ₀, supported on [−1, 1].
    Deg1,
    /// Quadratic B-spline φ₁, supported on [−1, 2].
    Deg2,
}

/// A finite filter: `taps[i]` is the coefficient at index `start + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    pub taps: Vec<f64>,
    pub start: i32,
}

impl Filter {
    fn scaled(table: &[f64], start: i32) -> Self {
        Filter {
            taps: table.iter().map(|t| t * SQRT_2).collect(),
            start,
        }
    }

    pub fn end(&self) -> i32 {
        self.start + self.taps.len() as i32 - 1
    }

    /// Coefficient at index `k`, zero outside the support.
    pub fn at(&self, k: i32) -> f64 {
        if k < self.start || k > self.end() {
            0.0
        } else {
            self.taps[(k - self.start) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.taps
            .iter()
            .enumerate()
            .map(move |(i, &t)| (self.start + i as i32, t))
    }
}

/// Biorthogonal filter quadruple. Taps include the √2 factor so that
/// `c_{j,k} = Σ h*_ℓ c_{j+1,ℓ+2k}` holds literally.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub degree: SplineDegree,
    pub h: Filter,
    pub g: Filter,
    pub h_star: Filter,
    pub g_star: Filter,
    /// Factor between the stored taps and the tabulated rationals.
    pub normalization: f64,
}

pub fn filter_bank(degree: SplineDegree) -> FilterBank {
    match degree {
        SplineDegree::Deg1 => FilterBank {
            degree,
            h_star: Filter::scaled(&[-0.125, 0.25, 0.75, 0.25, -0.125], -2),
            g_star: Filter::scaled(&[-0.25, 0.5, -0.25], 0),
            h: Filter::scaled(&[0.25, 0.5, 0.25], -1),
            g: Filter::scaled(&[-0.125, -0.25, 0.75, -0.25, -0.125], -1),
            normalization: SQRT_2,
        },
        SplineDegree::Deg2 => FilterBank {
            degree,
            h_star: Filter::scaled(&[-0.25, 0.75, 0.75, -0.25], -1),
            g_star: Filter::scaled(&[0.125, -0.375, 0.375, -0.125], -1),
            h: Filter::scaled(&[0.125, 0.375, 0.375, 0.125], -1),
            g: Filter::scaled(&[-0.25, -0.75, 0.75, 0.25], -1),
            normalization: SQRT_2,
        },
    }
}

/// Support of the scaling function as a closed interval.
pub fn scaling_support(degree: SplineDegree) -> (f64, f64) {
    match degree {
        SplineDegree::Deg1 => (-1.0, 1.0),
        SplineDegree::Deg2 => (-1.0, 2.0),
    }
}

/// Support of the wavelet, from the two-scale relation ψ(x) = √2 Σ g_k φ(2x − k).
pub fn wavelet_support(degree: SplineDegree) -> (f64, f64) {
    let bank = filter_bank(degree);
    let (a, b) = scaling_support(degree);
    (
        (a + bank.g.start as f64) / 2.0,
        (b + bank.g.end() as f64) / 2.0,
    )
}

pub fn eval_scaling(degree: SplineDegree, x: f64) -> f64 {
    match degree {
        SplineDegree::Deg1 => (1.0 - x.abs()).max(0.0),
        SplineDegree::Deg2 => {
            let t = x + 1.0;
            if !(0.0..3.0).contains(&t) {
                0.0
            } else if t < 1.0 {
                0.5 * t * t
            } else if t < 2.0 {
                0.5 * (-2.0 * t * t + 6.0 * t - 3.0)
            } else {
                0.5 * (3.0 - t) * (3.0 - t)
            }
        }
    }
}

/// Derivative of the piecewise polynomial, taken from the right at breakpoints.
pub fn eval_scaling_derivative(degree: SplineDegree, x: f64) -> f64 {
    match degree {
        SplineDegree::Deg1 => {
            if (-1.0..0.0).contains(&x) {
                1.0
            } else if (0.0..1.0).contains(&x) {
                -1.0
            } else {
                0.0
            }
        }
        SplineDegree::Deg2 => {
            let t = x + 1.0;
            if !(0.0..3.0).contains(&t) {
                0.0
            } else if t < 1.0 {
                t
            } else if t < 2.0 {
                3.0 - 2.0 * t
            } else {
                t - 3.0
            }
        }
    }
}

pub fn eval_wavelet(degree: SplineDegree, x: f64) -> f64 {
    let bank = filter_bank(degree);
    SQRT_2
        * bank
            .g
            .iter()
            .map(|(k, gk)| gk * eval_scaling(degree, 2.0 * x - k as f64))
            .sum::<f64>()
}

pub fn eval_wavelet_derivative(degree: SplineDegree, x: f64) -> f64 {
    let bank = filter_bank(degree);
    2.0 * SQRT_2
        * bank
            .g
            .iter()
            .map(|(k, gk)| gk * eval_scaling_derivative(degree, 2.0 * x - k as f64))
            .sum::<f64>()
}

/// Simpson's rule on pieces of length `1/breaks_per_unit`; exact for continuous
/// piecewise quadratics whose breakpoints fall on the piece boundaries.
pub fn integrate_piecewise(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks_per_unit: usize) -> f64 {
    let n = ((b - a) * breaks_per_unit as f64).round() as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let x0 = a + i as f64 * h;
            h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h))
        })
        .sum()
}
