//! Central finite-difference oracle for the tensor primitives.

use fundus_screen::tensor::{Graph, Parameter, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;

/// Relative error with a small absolute floor so that exact zeros compare
/// cleanly.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn projected_loss<F>(inputs: &[Tensor<f64>], params: &[Parameter<f64>], weights: &[f64], build: &F) -> f64
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Var,
{
    let mut g = Graph::new(params);
    let vars: Vec<Var> = inputs.iter().map(|t| g.variable(t.clone())).collect();
    let out = build(&mut g, &vars);
    g.value(out).data().iter().zip(weights).map(|(a, b)| a * b).sum()
}

/// Max relative error between the analytic gradient of `sum(c * f(x))` and
/// its central finite difference, over every input and parameter entry.
#[allow(clippy::needless_range_loop)]
pub fn max_gradient_error<F>(inputs: Vec<Tensor<f64>>, mut params: Vec<Parameter<f64>>, seed: u64, build: F) -> f64
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Var,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (analytic_in, analytic_params, weights) = {
        let mut g = Graph::new(&params);
        let vars: Vec<Var> = inputs.iter().map(|t| g.variable(t.clone())).collect();
        let out = build(&mut g, &vars);
        let weights: Vec<f64> = (0..g.value(out).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grads = g.backward(out, &weights).unwrap();
        let ins: Vec<Vec<f64>> = vars
            .iter()
            .zip(&inputs)
            .map(|(v, t)| grads.wrt(*v).map(|s| s.to_vec()).unwrap_or(vec![0.0; t.len()]))
            .collect();
        let mut ps: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.tensor.len()]).collect();
        for (i, gr) in grads.params() {
            ps[i].iter_mut().zip(gr).for_each(|(a, b)| *a += b);
        }
        (ins, ps, weights)
    };

    let mut worst = 0.0f64;
    let mut inputs = inputs;
    for t in 0..inputs.len() {
        for j in 0..inputs[t].len() {
            let orig = inputs[t].data()[j];
            inputs[t].data_mut()[j] = orig + STEP;
            let up = projected_loss(&inputs, &params, &weights, &build);
            inputs[t].data_mut()[j] = orig - STEP;
            let down = projected_loss(&inputs, &params, &weights, &build);
            inputs[t].data_mut()[j] = orig;
            worst = worst.max(rel_err(analytic_in[t][j], (up - down) / (2.0 * STEP)));
        }
    }
    for p in 0..params.len() {
        for j in 0..params[p].tensor.len() {
            let orig = params[p].tensor.data()[j];
            params[p].tensor.data_mut()[j] = orig + STEP;
            let up = projected_loss(&inputs, &params, &weights, &build);
            params[p].tensor.data_mut()[j] = orig - STEP;
            let down = projected_loss(&inputs, &params, &weights, &build);
            params[p].tensor.data_mut()[j] = orig;
            worst = worst.max(rel_err(analytic_params[p][j], (up - down) / (2.0 * STEP)));
        }
    }
    worst
}

fn away_from_zero(mut t: Tensor<f64>) -> Tensor<f64> {
    for v in t.data_mut() {
        if v.abs() < 0.05 {
            *v += 0.1f64.copysign(*v);
        }
    }
    t
}

/// Well-separated values so that max-pool argmaxes are stable under the
/// finite-difference step.
fn distinct(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.013 - 0.5).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    Tensor::new(shape, vals).unwrap()
}

fn param(name: &str, t: Tensor<f64>) -> Parameter<f64> {
    Parameter::new(name, t)
}

/// Runs every primitive on at least five random shapes; returns
/// `(primitive, shapes checked, worst relative error)`.
pub fn primitive_suite(seed: u64) -> Vec<(&'static str, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Vec::new();

    // conv2d: (c_in, c_out, k, stride, padding, h, w)
    let conv_shapes = [
        (2, 3, 3, 1, 0, 5, 5),
        (1, 2, 3, 1, 1, 4, 6),
        (3, 2, 3, 2, 1, 6, 6),
        (2, 2, 1, 2, 0, 4, 4),
        (1, 1, 5, 1, 2, 5, 5),
        (4, 3, 3, 2, 1, 8, 4),
    ];
    let mut worst = 0.0f64;
    for (i, &(ci, co, k, s, p, h, w)) in conv_shapes.iter().enumerate() {
        let x = random_tensor(&mut rng, &[ci, h, w], -1.0, 1.0);
        let wt = random_tensor(&mut rng, &[co, ci, k, k], -0.5, 0.5);
        let e = max_gradient_error(vec![x], vec![param("w", wt)], seed + i as u64, |g, v| {
            let wv = g.param(0);
            g.conv2d(v[0], wv, s, p).unwrap()
        });
        worst = worst.max(e);
    }
    report.push(("conv2d", conv_shapes.len(), worst));

    let shapes: [&[usize]; 5] = [&[1, 3, 3], &[2, 4, 4], &[3, 2, 6], &[7], &[2, 5, 3]];
    for (name, kind) in [
        ("relu", fundus_screen::tensor::Activation::Relu),
        ("sigmoid", fundus_screen::tensor::Activation::Sigmoid),
    ] {
        let mut worst = 0.0f64;
        for (i, shape) in shapes.iter().enumerate() {
            let x = away_from_zero(random_tensor(&mut rng, shape, -3.0, 3.0));
            let e = max_gradient_error(vec![x], vec![], seed + i as u64, |g, v| g.activate(v[0], kind));
            worst = worst.max(e);
        }
        report.push((name, shapes.len(), worst));
    }

    let pool_shapes: [(&[usize], usize); 5] = [
        (&[1, 2, 2], 2),
        (&[2, 4, 4], 2),
        (&[3, 6, 6], 3),
        (&[1, 8, 4], 4),
        (&[2, 6, 4], 2),
    ];
    use fundus_screen::tensor::PoolKind;
    for (name, kind) in [
        ("max_pool", PoolKind::Max),
        ("average_pool", PoolKind::Average),
        ("global_max_pool", PoolKind::GlobalMax),
        ("global_average_pool", PoolKind::GlobalAverage),
    ] {
        let mut worst = 0.0f64;
        for (i, &(shape, window)) in pool_shapes.iter().enumerate() {
            let x = distinct(&mut rng, shape);
            let e = max_gradient_error(vec![x], vec![], seed + i as u64, |g, v| {
                g.pool(v[0], kind, window).unwrap()
            });
            worst = worst.max(e);
        }
        report.push((name, pool_shapes.len(), worst));
    }

    let dense_shapes: [(&[usize], usize); 5] = [(&[4], 2), (&[3], 1), (&[2, 2, 2], 3), (&[6, 1, 1], 4), (&[10], 5)];
    let mut worst = 0.0f64;
    for (i, &(shape, d_out)) in dense_shapes.iter().enumerate() {
        let d_in: usize = shape.iter().product();
        let x = random_tensor(&mut rng, shape, -1.0, 1.0);
        let w = random_tensor(&mut rng, &[d_out, d_in], -1.0, 1.0);
        let b = random_tensor(&mut rng, &[d_out], -1.0, 1.0);
        let e = max_gradient_error(vec![x], vec![param("w", w), param("b", b)], seed + i as u64, |g, v| {
            let (w, b) = (g.param(0), g.param(1));
            g.dense(v[0], w, b).unwrap()
        });
        worst = worst.max(e);
    }
    report.push(("dense", dense_shapes.len(), worst));

    let up_shapes = [(1, 1, 1, 1), (2, 3, 2, 2), (1, 2, 3, 1), (3, 1, 2, 3), (2, 2, 4, 2)];
    let mut worst = 0.0f64;
    for (i, &(c1, c2, h, w)) in up_shapes.iter().enumerate() {
        let d = random_tensor(&mut rng, &[c1, h, w], -1.0, 1.0);
        let s = random_tensor(&mut rng, &[c2, 2 * h, 2 * w], -1.0, 1.0);
        let e = max_gradient_error(vec![d, s], vec![], seed + i as u64, |g, v| {
            g.upsample_concat(v[0], v[1]).unwrap()
        });
        worst = worst.max(e);
    }
    report.push(("upsample_concat", up_shapes.len(), worst));

    let mut worst_affine = 0.0f64;
    let mut worst_add = 0.0f64;
    for (i, shape) in [[1, 2, 2], [2, 3, 3], [3, 1, 4], [4, 2, 1], [2, 5, 5]].iter().enumerate() {
        let x = random_tensor(&mut rng, shape, -1.0, 1.0);
        let y = random_tensor(&mut rng, shape, -1.0, 1.0);
        let a = random_tensor(&mut rng, &[shape[0]], 0.5, 1.5);
        let b = random_tensor(&mut rng, &[shape[0]], -1.0, 1.0);
        let with_scale = i % 2 == 0;
        let e = max_gradient_error(vec![x.clone()], vec![param("b", b), param("a", a)], seed + i as u64, |g, v| {
            let shift = g.param(0);
            let scale = with_scale.then(|| g.param(1));
            g.channel_affine(v[0], scale, shift).unwrap()
        });
        worst_affine = worst_affine.max(e);
        let e = max_gradient_error(vec![x, y], vec![], seed + i as u64, |g, v| g.add(v[0], v[1]).unwrap());
        worst_add = worst_add.max(e);
    }
    report.push(("channel_affine", 5, worst_affine));
    report.push(("add", 5, worst_add));
    report
}
