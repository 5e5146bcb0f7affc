//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use mirage_core::codec::{AffineMap, VqVae, VqVaeGrads};
use mirage_core::selector::FrameScore;

/// `(x, erfc(x))` pairs from the high-precision reference grid.
pub fn erfc_grid() -> Vec<(f64, f64)> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/erfc_grid.csv");
    let text = std::fs::read_to_string(path).expect("reference grid present");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (x, y) = l.split_once(',').expect("two columns");
            (x.trim().parse().unwrap(), y.trim().parse().unwrap())
        })
        .collect()
}

/// Best additive-utility subset of size `n` by exhaustive search. Ties go to
/// the lexicographically smallest index set.
pub fn exhaustive_top_n(scores: &[FrameScore], n: usize) -> Vec<usize> {
    fn rec(scores: &[FrameScore], n: usize, start: usize, cur: &mut Vec<usize>, best: &mut Option<(f64, Vec<usize>)>) {
        if cur.len() == n {
            let total: f64 = cur.iter().map(|&i| scores[i].score).sum();
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                *best = Some((total, cur.clone()));
            }
            return;
        }
        for i in start..scores.len() {
            cur.push(i);
            rec(scores, n, i + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = None;
    rec(scores, n, 0, &mut Vec::new(), &mut best);
    best.expect("n <= len").1
}

/// Loss terms recomputed with plain loops: `(total, reconstruction, codebook, commitment)`.
pub fn scalar_loop_loss(m: &VqVae<f64>, patches: &[Vec<f64>]) -> (f64, f64, f64, f64) {
    let enc = &m.encoder.map;
    let dec = &m.decoder.map;
    let d = enc.out_dim;
    let k_count = m.codebook.size();
    let cw = m.codebook.codewords();
    let mut rec_sum = 0.0;
    let mut vq_sum = 0.0;
    let mut elems = 0usize;
    for x in patches {
        let mut z = vec![0.0; d];
        for o in 0..d {
            let mut acc = enc.bias[o];
            for i in 0..enc.in_dim {
                acc += enc.weights[o * enc.in_dim + i] * x[i];
            }
            z[o] = acc;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..k_count {
            let mut dist = 0.0;
            for j in 0..d {
                let t = z[j] - cw[k * d + j];
                dist += t * t;
            }
            if dist < best_d {
                best_d = dist;
                best = k;
            }
        }
        let e = &cw[best * d..(best + 1) * d];
        for o in 0..dec.out_dim {
            let mut r = dec.bias[o];
            for j in 0..d {
                r += dec.weights[o * d + j] * e[j];
            }
            rec_sum += (r - x[o]) * (r - x[o]);
            elems += 1;
        }
        vq_sum += best_d;
    }
    let rec = rec_sum / elems as f64;
    let vq = vq_sum / patches.len() as f64;
    let commit = m.beta * vq;
    (rec + vq + commit, rec, vq, commit)
}

/// Squared-distance gap between the nearest and second-nearest codeword.
pub fn assignment_margin(m: &VqVae<f64>, x: &[f64]) -> f64 {
    let z = m.encoder.map.apply(x);
    let mut d: Vec<f64> =
        m.codebook.codewords().chunks(m.codebook.dim()).map(|e| e.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
    d.sort_by(f64::total_cmp);
    d[1] - d[0]
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-9 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn params(map: &mut AffineMap<f64>) -> Vec<&mut f64> {
    map.weights.iter_mut().chain(map.bias.iter_mut()).collect()
}

fn flat(map: &AffineMap<f64>) -> Vec<f64> {
    map.weights.iter().chain(&map.bias).copied().collect()
}

/// Central-difference check of every analytic gradient. Returns the worst
/// relative error per group: decoder, codebook, commitment, straight-through.
pub fn gradient_check(m: &VqVae<f64>, patches: &[Vec<f64>], h: f64) -> [f64; 4] {
    let refs: Vec<&[f64]> = patches.iter().map(Vec::as_slice).collect();
    let (_, g): (_, VqVaeGrads<f64>) = m.gradients(&refs).unwrap();
    let mut worst = [0.0f64; 4];

    // Decoder: full loss; assignments do not depend on the decoder.
    let dec_grad = flat(&g.decoder);
    for idx in 0..dec_grad.len() {
        let eval = |delta: f64| {
            let mut mm = m.clone();
            *params(&mut mm.decoder.map)[idx] += delta;
            scalar_loop_loss(&mm, patches).0
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        worst[0] = worst[0].max(rel_err(fd, dec_grad[idx]));
    }

    // Codebook: reconstruction plus codebook term; the commitment term treats
    // codewords as constants.
    for idx in 0..g.codebook.len() {
        let eval = |delta: f64| {
            let mut mm = m.clone();
            let mut cw = mm.codebook.codewords().to_vec();
            cw[idx] += delta;
            mm.codebook = mirage_core::codec::Codebook::new(cw.len() / mm.codebook.dim(), mm.codebook.dim(), cw).unwrap();
            let (_, rec, vq, _) = scalar_loop_loss(&mm, patches);
            rec + vq
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        worst[1] = worst[1].max(rel_err(fd, g.codebook[idx]));
    }

    // Encoder, commitment term only.
    let commit_grad = flat(&g.encoder_commitment);
    for idx in 0..commit_grad.len() {
        let eval = |delta: f64| {
            let mut mm = m.clone();
            *params(&mut mm.encoder.map)[idx] += delta;
            scalar_loop_loss(&mm, patches).3
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        worst[2] = worst[2].max(rel_err(fd, commit_grad[idx]));
    }

    // Encoder, straight-through: the decoder sees e + (z(theta) - z(theta_0)).
    let st_grad = flat(&g.encoder_straight_through);
    let base_z: Vec<Vec<f64>> = patches.iter().map(|x| m.encoder.map.apply(x)).collect();
    let chosen: Vec<Vec<f64>> = base_z.iter().map(|z| m.codebook.codeword(m.codebook.nearest(z).0).to_vec()).collect();
    for idx in 0..st_grad.len() {
        let eval = |delta: f64| {
            let mut enc = m.encoder.map.clone();
            *params(&mut enc)[idx] += delta;
            let mut sum = 0.0;
            let mut count = 0usize;
            for ((x, z0), e) in patches.iter().zip(&base_z).zip(&chosen) {
                let z = enc.apply(x);
                let q: Vec<f64> = e.iter().zip(z.iter().zip(z0)).map(|(e, (z, z0))| e + (z - z0)).collect();
                let r = m.decoder.map.apply(&q);
                sum += r.iter().zip(x).map(|(r, x)| (r - x) * (r - x)).sum::<f64>();
                count += x.len();
            }
            sum / count as f64
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        worst[3] = worst[3].max(rel_err(fd, st_grad[idx]));
    }
    worst
}
