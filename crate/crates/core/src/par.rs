//! Reductions with a fixed chunk layout.
//!
//! Every reduction splits its input into `CHUNK`-sized pieces, sums each
//! piece left to right and then adds the partial sums in chunk order. The
//! result therefore depends only on the input length, never on how many
//! worker threads happened to pick up the chunks.

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 2048;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return serial_dot(a, b);
    }
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| serial_dot(x, y))
        .collect();
    partials.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖a - b‖` and `‖a + b‖` in one pass.
pub(crate) fn distance_pair(a: &[f64], b: &[f64]) -> (f64, f64) {
    let chunk = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).fold((0.0, 0.0), |(d, s), (p, q)| {
            (d + (p - q) * (p - q), s + (p + q) * (p + q))
        })
    };
    let (d, s) = if a.len() <= CHUNK {
        chunk(a, b)
    } else {
        let partials: Vec<(f64, f64)> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| chunk(x, y))
            .collect();
        partials
            .iter()
            .fold((0.0, 0.0), |(d, s), (p, q)| (d + p, s + q))
    };
    (d.sqrt(), s.sqrt())
}

pub(crate) fn scale(a: &mut [f64], factor: f64) {
    if a.len() <= CHUNK {
        a.iter_mut().for_each(|x| *x *= factor);
    } else {
        a.par_chunks_mut(CHUNK)
            .for_each(|c| c.iter_mut().for_each(|x| *x *= factor));
    }
}

#[inline]
fn serial_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
