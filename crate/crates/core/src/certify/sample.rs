//! Deterministic quasi-random sample sets: Halton points mapped onto the
//! unit sphere and into a centered box. Fixed bases, no seeds, so every run
//! sees the same points.

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// The `index`-th element of the van der Corput sequence in the given base.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= b;
        r += f * (index % base as u64) as f64;
        index /= base as u64;
    }
    r
}

fn halton_point(index: u64, n: usize) -> Vec<f64> {
    (0..n).map(|d| halton(index, PRIMES[d % PRIMES.len()])).collect()
}

/// `count` points on the unit sphere, no two equal, none at the origin.
pub fn sphere_points(n_vars: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let u = halton_point(index, n_vars);
        index += 1;
        let x: Vec<f64> = u.iter().map(|&v| 2.0 * v - 1.0).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        out.push(x.iter().map(|v| v / norm).collect());
    }
    out
}

/// `count` points in `[-half, half]^n`, skipping a small ball around the
/// origin.
pub fn box_points(n_vars: usize, count: usize, half: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let u = halton_point(index, n_vars);
        index += 1;
        let x: Vec<f64> = u.iter().map(|&v| (2.0 * v - 1.0) * half).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        for x in sphere_points(3, 50) {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sphere_points(2, 100), sphere_points(2, 100));
        assert_eq!(box_points(2, 100, 3.0), box_points(2, 100, 3.0));
    }
}
