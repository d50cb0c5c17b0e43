//! Independent routes to the Dice loss derivative: forward-mode dual
//! numbers over the loss definition, and central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
    fn div(self, o: Dual) -> Dual {
        Dual { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
    fn c(v: f64) -> Dual {
        Dual { v, d: 0.0 }
    }
}

/// Dice loss written directly from its definition, in dual numbers.
fn dice_dual(p: &[f64], g: &[f64], wrt: usize) -> Dual {
    let mut num = Dual::c(0.0);
    let mut den = Dual::c(0.0);
    for (i, (&pi, &gi)) in p.iter().zip(g).enumerate() {
        let pd = Dual { v: pi, d: if i == wrt { 1.0 } else { 0.0 } };
        let gd = Dual::c(gi);
        num = num.add(pd.mul(gd));
        den = den.add(pd.mul(pd)).add(gd.mul(gd));
    }
    Dual::c(1.0).add(Dual::c(-2.0).mul(num.div(den)))
}

pub fn autodiff_dice_gradient(p: &[f64], g: &[f64]) -> Vec<f64> {
    (0..p.len()).map(|i| dice_dual(p, g, i).d).collect()
}

fn dice_plain(p: &[f64], g: &[f64]) -> f64 {
    let num: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    let den: f64 = p.iter().map(|a| a * a).sum::<f64>() + g.iter().map(|b| b * b).sum::<f64>();
    1.0 - 2.0 * num / den
}

pub fn finite_difference_dice_gradient(p: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = q[i];
            q[i] = orig + h;
            let up = dice_plain(&q, g);
            q[i] = orig - h;
            let down = dice_plain(&q, g);
            q[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Random `(p, g)` instance with at least one positive truth pixel.
pub fn random_instance(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, Vec<f64>) {
    let p: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut g: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect();
    g[rng.random_range(0..len)] = 1.0;
    (p, g)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
