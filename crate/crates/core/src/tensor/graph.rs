use super::{Parameter, Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Average,
    GlobalMax,
    GlobalAverage,
}

enum Op<T> {
    Leaf,
    Param(usize),
    Conv2d {
        input: Var,
        weight: Var,
        stride: usize,
        padding: usize,
        cols: Vec<T>,
    },
    ChannelAffine {
        input: Var,
        scale: Option<Var>,
        shift: Var,
    },
    Activate {
        input: Var,
        kind: Activation,
    },
    Add(Var, Var),
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    AvgPool {
        input: Var,
        window_h: usize,
        window_w: usize,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Var,
    },
    UpsampleConcat {
        decoder: Var,
        skip: Var,
    },
}

struct Node<T> {
    value: Option<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records a forward computation over borrowed parameters so that its
/// gradients can be computed by a reverse sweep.
///
/// Parameters are never copied into the graph; a graph over a finalized
/// model is therefore cheap to build and any number of graphs may share the
/// same parameter slice concurrently.
pub struct Graph<'p, T: Scalar = f32> {
    params: &'p [Parameter<T>],
    nodes: Vec<Node<T>>,
}

fn dims3(shape: &[usize], what: &str) -> Result<(usize, usize, usize)> {
    match *shape {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(Error::Dimension(format!(
            "{what} expects a [C, H, W] tensor, got {shape:?}"
        ))),
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p [Parameter<T>]) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, value: Option<Tensor<T>>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Constant input; no gradient is tracked for it.
    pub fn input(&mut self, tensor: Tensor<T>) -> Var {
        self.push(Some(tensor), Op::Leaf, false)
    }

    /// Input whose gradient is wanted (used for gradient checks).
    pub fn variable(&mut self, tensor: Tensor<T>) -> Var {
        self.push(Some(tensor), Op::Leaf, true)
    }

    pub fn param(&mut self, index: usize) -> Var {
        let trainable = self.params[index].trainable;
        self.push(None, Op::Param(index), trainable)
    }

    pub fn value(&self, var: Var) -> &Tensor<T> {
        let node = &self.nodes[var.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(i)) => &self.params[*i].tensor,
            (None, _) => unreachable!("every non-parameter node stores its value"),
        }
    }

    pub fn conv2d(&mut self, input: Var, weight: Var, stride: usize, padding: usize) -> Result<Var> {
        let (cin, h, w) = dims3(self.value(input).shape(), "conv2d")?;
        let (cout, wcin, k) = match *self.value(weight).shape() {
            [co, ci, kh, kw] if kh == kw => (co, ci, kh),
            ref s => {
                return Err(Error::Dimension(format!(
                    "conv2d weights must be [C_out, C_in, k, k], got {s:?}"
                )))
            }
        };
        if wcin != cin {
            return Err(Error::Dimension(format!(
                "conv2d input has {cin} channels but weights expect {wcin}"
            )));
        }
        if k % 2 == 0 || stride == 0 {
            return Err(Error::Dimension(format!(
                "conv2d needs an odd kernel and positive stride (k={k}, stride={stride})"
            )));
        }
        if h + 2 * padding < k || w + 2 * padding < k {
            return Err(Error::Dimension(format!(
                "conv2d kernel {k} larger than padded input {h}x{w}"
            )));
        }
        let ho = (h + 2 * padding - k) / stride + 1;
        let wo = (w + 2 * padding - k) / stride + 1;
        let n = ho * wo;
        let kk = cin * k * k;
        let x = self.value(input).data();
        let mut cols = vec![T::zero(); kk * n];
        for c in 0..cin {
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut cols[((c * k + ky) * k + kx) * n..][..n];
                    for oy in 0..ho {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src = &x[(c * h + iy as usize) * w..][..w];
                        let dst = &mut row[oy * wo..][..wo];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - padding as isize;
                            if ix >= 0 && ix < w as isize {
                                *d = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        let mut out = vec![T::zero(); cout * n];
        T::gemm(
            cout,
            kk,
            n,
            self.value(weight).data(),
            false,
            &cols,
            false,
            T::zero(),
            &mut out,
        );
        let value = Tensor::new(&[cout, ho, wo], out)?;
        let rg = self.any_grad(&[input, weight]);
        Ok(self.push(
            Some(value),
            Op::Conv2d {
                input,
                weight,
                stride,
                padding,
                cols,
            },
            rg,
        ))
    }

    /// Per-channel `x * scale[c] + shift[c]`; with no scale this is a bias.
    pub fn channel_affine(&mut self, input: Var, scale: Option<Var>, shift: Var) -> Result<Var> {
        let x = self.value(input);
        let c = x.shape()[0];
        let plane = x.len() / c;
        let check = |v: Var, g: &Self| {
            if g.value(v).len() != c {
                Err(Error::Dimension(format!(
                    "channel affine needs {c} coefficients, got {}",
                    g.value(v).len()
                )))
            } else {
                Ok(())
            }
        };
        check(shift, self)?;
        if let Some(s) = scale {
            check(s, self)?;
        }
        let b = self.value(shift).data();
        let mut out = x.data().to_vec();
        for (ch, chunk) in out.chunks_mut(plane).enumerate() {
            let a = scale.map_or(T::one(), |s| self.value(s).data()[ch]);
            chunk.iter_mut().for_each(|v| *v = *v * a + b[ch]);
        }
        let value = Tensor::new(x.shape(), out)?;
        let mut deps = vec![input, shift];
        deps.extend(scale);
        let rg = self.any_grad(&deps);
        Ok(self.push(Some(value), Op::ChannelAffine { input, scale, shift }, rg))
    }

    pub fn activate(&mut self, input: Var, kind: Activation) -> Var {
        let x = self.value(input);
        let data = x
            .data()
            .iter()
            .map(|&v| match kind {
                Activation::Relu => v.max(T::zero()),
                Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
            })
            .collect();
        let value = Tensor::new(x.shape(), data).expect("same shape");
        let rg = self.any_grad(&[input]);
        self.push(Some(value), Op::Activate { input, kind }, rg)
    }

    pub fn relu(&mut self, input: Var) -> Var {
        self.activate(input, Activation::Relu)
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        self.activate(input, Activation::Sigmoid)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::Dimension(format!(
                "cannot add {:?} and {:?}",
                x.shape(),
                y.shape()
            )));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p + q).collect();
        let value = Tensor::new(x.shape(), data)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Some(value), Op::Add(a, b), rg))
    }

    /// Windowed (non-overlapping) or global pooling over a `[C, H, W]` input.
    pub fn pool(&mut self, input: Var, kind: PoolKind, window: usize) -> Result<Var> {
        let (c, h, w) = dims3(self.value(input).shape(), "pool")?;
        let (wh, ww) = match kind {
            PoolKind::GlobalMax | PoolKind::GlobalAverage => (h, w),
            PoolKind::Max | PoolKind::Average => {
                if window == 0 || h % window != 0 || w % window != 0 {
                    return Err(Error::Dimension(format!(
                        "pool window {window} does not divide {h}x{w}"
                    )));
                }
                (window, window)
            }
        };
        let (oh, ow) = (h / wh, w / ww);
        let x = self.value(input).data();
        let rg = self.any_grad(&[input]);
        match kind {
            PoolKind::Max | PoolKind::GlobalMax => {
                let mut out = Vec::with_capacity(c * oh * ow);
                let mut argmax = Vec::with_capacity(c * oh * ow);
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut best = (ch * h + oy * wh) * w + ox * ww;
                            for dy in 0..wh {
                                for dx in 0..ww {
                                    let idx = (ch * h + oy * wh + dy) * w + ox * ww + dx;
                                    if x[idx] > x[best] {
                                        best = idx;
                                    }
                                }
                            }
                            out.push(x[best]);
                            argmax.push(best);
                        }
                    }
                }
                let value = Tensor::new(&[c, oh, ow], out)?;
                Ok(self.push(Some(value), Op::MaxPool { input, argmax }, rg))
            }
            PoolKind::Average | PoolKind::GlobalAverage => {
                let norm = T::from_usize(wh * ww).expect("window fits");
                let mut out = vec![T::zero(); c * oh * ow];
                for ch in 0..c {
                    for y in 0..h {
                        for xx in 0..w {
                            out[(ch * oh + y / wh) * ow + xx / ww] += x[(ch * h + y) * w + xx];
                        }
                    }
                }
                out.iter_mut().for_each(|v| *v = *v / norm);
                let value = Tensor::new(&[c, oh, ow], out)?;
                Ok(self.push(
                    Some(value),
                    Op::AvgPool {
                        input,
                        window_h: wh,
                        window_w: ww,
                    },
                    rg,
                ))
            }
        }
    }

    /// Affine map `W x + b`; the input is flattened.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let d_in = self.value(input).len();
        let (d_out, wd_in) = match *self.value(weight).shape() {
            [o, i] => (o, i),
            ref s => {
                return Err(Error::Dimension(format!(
                    "dense weights must be [D_out, D_in], got {s:?}"
                )))
            }
        };
        if wd_in != d_in || self.value(bias).len() != d_out {
            return Err(Error::Dimension(format!(
                "dense layer {wd_in}->{d_out} applied to {d_in} inputs with {} biases",
                self.value(bias).len()
            )));
        }
        let mut out = self.value(bias).data().to_vec();
        T::gemm(
            d_out,
            d_in,
            1,
            self.value(weight).data(),
            false,
            self.value(input).data(),
            false,
            T::one(),
            &mut out,
        );
        let value = Tensor::new(&[d_out], out)?;
        let rg = self.any_grad(&[input, weight, bias]);
        Ok(self.push(Some(value), Op::Dense { input, weight, bias }, rg))
    }

    /// Nearest-neighbour ×2 upsampling of `decoder`, then channel
    /// concatenation with `skip` (decoder channels first).
    pub fn upsample_concat(&mut self, decoder: Var, skip: Var) -> Result<Var> {
        let (c1, h, w) = dims3(self.value(decoder).shape(), "upsample_concat")?;
        let (c2, sh, sw) = dims3(self.value(skip).shape(), "upsample_concat")?;
        if sh != 2 * h || sw != 2 * w {
            return Err(Error::Dimension(format!(
                "skip {sh}x{sw} is not twice the decoder {h}x{w}"
            )));
        }
        let d = self.value(decoder).data();
        let mut out = Vec::with_capacity((c1 + c2) * sh * sw);
        for ch in 0..c1 {
            for y in 0..sh {
                let row = &d[(ch * h + y / 2) * w..][..w];
                out.extend((0..sw).map(|x| row[x / 2]));
            }
        }
        out.extend_from_slice(self.value(skip).data());
        let value = Tensor::new(&[c1 + c2, sh, sw], out)?;
        let rg = self.any_grad(&[decoder, skip]);
        Ok(self.push(Some(value), Op::UpsampleConcat { decoder, skip }, rg))
    }

    /// Reverse sweep from `root`, seeded with `dL/d(root)`.
    pub fn backward(&self, root: Var, seed: &[T]) -> Result<Gradients<T>> {
        if seed.len() != self.value(root).len() {
            return Err(Error::Dimension(format!(
                "seed gradient of length {} for output of length {}",
                seed.len(),
                self.value(root).len()
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(seed.to_vec());
        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = None;
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            if matches!(node.op, Op::Leaf | Op::Param(_)) {
                grads[i] = Some(g);
            }
        }
        let param_of = self
            .nodes
            .iter()
            .map(|n| match n.op {
                Op::Param(i) => Some(i),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, param_of })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<T>>], v: Var) -> Option<&'g mut Vec<T>> {
        if !self.nodes[v.0].requires_grad {
            return None;
        }
        let len = self.value(v).len();
        Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); len]))
    }

    fn propagate(&self, node: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        match &self.nodes[node].op {
            Op::Leaf | Op::Param(_) => {}
            Op::Conv2d {
                input,
                weight,
                stride,
                padding,
                cols,
            } => {
                let wt = self.value(*weight);
                let (cout, cin, k) = (wt.shape()[0], wt.shape()[1], wt.shape()[2]);
                let kk = cin * k * k;
                let n = g.len() / cout;
                if let Some(dw) = self.slot(grads, *weight) {
                    T::gemm(cout, n, kk, g, false, cols, true, T::one(), dw);
                }
                if self.nodes[input.0].requires_grad {
                    let mut dcols = vec![T::zero(); kk * n];
                    T::gemm(kk, cout, n, wt.data(), true, g, false, T::zero(), &mut dcols);
                    let (_, h, w) = dims3(self.value(*input).shape(), "conv2d").expect("checked");
                    let ho = (h + 2 * padding - k) / stride + 1;
                    let wo = n / ho;
                    let dx = self.slot(grads, *input).expect("requires grad");
                    for c in 0..cin {
                        for ky in 0..k {
                            for kx in 0..k {
                                let row = &dcols[((c * k + ky) * k + kx) * n..][..n];
                                for oy in 0..ho {
                                    let iy = (oy * stride + ky) as isize - *padding as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let dst = &mut dx[(c * h + iy as usize) * w..][..w];
                                    for ox in 0..wo {
                                        let ix = (ox * stride + kx) as isize - *padding as isize;
                                        if ix >= 0 && ix < w as isize {
                                            dst[ix as usize] += row[oy * wo + ox];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Op::ChannelAffine { input, scale, shift } => {
                let x = self.value(*input).data();
                let c = self.value(*shift).len();
                let plane = x.len() / c;
                if let Some(ds) = self.slot(grads, *shift) {
                    for (ch, chunk) in g.chunks(plane).enumerate() {
                        ds[ch] += chunk.iter().copied().sum::<T>();
                    }
                }
                if let Some(s) = scale {
                    if let Some(da) = self.slot(grads, *s) {
                        for (ch, (gc, xc)) in g.chunks(plane).zip(x.chunks(plane)).enumerate() {
                            da[ch] += gc.iter().zip(xc).map(|(&a, &b)| a * b).sum::<T>();
                        }
                    }
                }
                let coeffs: Vec<T> = match scale {
                    Some(s) => self.value(*s).data().to_vec(),
                    None => vec![T::one(); c],
                };
                if let Some(dx) = self.slot(grads, *input) {
                    for (ch, (dc, gc)) in dx.chunks_mut(plane).zip(g.chunks(plane)).enumerate() {
                        dc.iter_mut().zip(gc).for_each(|(d, &v)| *d += v * coeffs[ch]);
                    }
                }
            }
            Op::Activate { input, kind } => {
                let x = self.value(*input).data();
                let y = self.nodes[node].value.as_ref().expect("stored output").data();
                if let Some(dx) = self.slot(grads, *input) {
                    match kind {
                        Activation::Relu => {
                            for ((d, &v), &xi) in dx.iter_mut().zip(g).zip(x) {
                                if xi > T::zero() {
                                    *d += v;
                                }
                            }
                        }
                        Activation::Sigmoid => {
                            for ((d, &v), &s) in dx.iter_mut().zip(g).zip(y) {
                                *d += v * s * (T::one() - s);
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(d) = self.slot(grads, *v) {
                        d.iter_mut().zip(g).for_each(|(d, &x)| *d += x);
                    }
                }
            }
            Op::MaxPool { input, argmax } => {
                if let Some(dx) = self.slot(grads, *input) {
                    for (&idx, &v) in argmax.iter().zip(g) {
                        dx[idx] += v;
                    }
                }
            }
            Op::AvgPool {
                input,
                window_h,
                window_w,
            } => {
                let (c, h, w) = dims3(self.value(*input).shape(), "pool").expect("checked");
                let (oh, ow) = (h / window_h, w / window_w);
                let norm = T::from_usize(window_h * window_w).expect("window fits");
                if let Some(dx) = self.slot(grads, *input) {
                    for ch in 0..c {
                        for y in 0..h {
                            for x in 0..w {
                                dx[(ch * h + y) * w + x] +=
                                    g[(ch * oh + y / window_h) * ow + x / window_w] / norm;
                            }
                        }
                    }
                }
            }
            Op::Dense {
                input,
                weight,
                bias,
            } => {
                let x = self.value(*input).data();
                let wt = self.value(*weight).data();
                let (d_out, d_in) = (g.len(), x.len());
                if let Some(db) = self.slot(grads, *bias) {
                    db.iter_mut().zip(g).for_each(|(d, &v)| *d += v);
                }
                if let Some(dw) = self.slot(grads, *weight) {
                    T::gemm(d_out, 1, d_in, g, false, x, false, T::one(), dw);
                }
                if let Some(dx) = self.slot(grads, *input) {
                    T::gemm(d_in, d_out, 1, wt, true, g, false, T::one(), dx);
                }
            }
            Op::UpsampleConcat { decoder, skip } => {
                let (c1, h, w) = dims3(self.value(*decoder).shape(), "upsample").expect("checked");
                let (sh, sw) = (2 * h, 2 * w);
                let split = c1 * sh * sw;
                if let Some(dd) = self.slot(grads, *decoder) {
                    for ch in 0..c1 {
                        for y in 0..sh {
                            for x in 0..sw {
                                dd[(ch * h + y / 2) * w + x / 2] += g[(ch * sh + y) * sw + x];
                            }
                        }
                    }
                }
                if let Some(ds) = self.slot(grads, *skip) {
                    ds.iter_mut().zip(&g[split..]).for_each(|(d, &v)| *d += v);
                }
            }
        }
    }
}

/// Result of [`Graph::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    param_of: Vec<Option<usize>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to a leaf created by [`Graph::variable`] or
    /// [`Graph::param`].
    pub fn wrt(&self, var: Var) -> Option<&[T]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// `(parameter index, gradient)` for every parameter reached.
    pub fn params(&self) -> impl Iterator<Item = (usize, &[T])> {
        self.param_of
            .iter()
            .zip(&self.grads)
            .filter_map(|(p, g)| Some(((*p)?, g.as_deref()?)))
    }

    /// Adds `scale * grad` into each reached parameter's gradient buffer.
    pub fn accumulate_into(&self, params: &mut [Parameter<T>], scale: T) -> Result<()> {
        for (idx, g) in self.params() {
            let scaled: Vec<T> = g.iter().map(|&v| v * scale).collect();
            params[idx].tensor.accumulate_grad(&scaled)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel_copies_input() {
        let params = vec![Parameter::new("w", t(&[1, 1, 1, 1], &[1.0]))];
        let mut g = Graph::new(&params);
        let data: Vec<f64> = (0..9).map(|i| i as f64 * 0.1).collect();
        let x = g.input(t(&[1, 3, 3], &data));
        let w = g.param(0);
        let y = g.conv2d(x, w, 1, 0).unwrap();
        assert_eq!(g.value(y).data(), &data[..]);
    }

    #[test]
    fn zero_input_gives_zero_conv() {
        let params = vec![Parameter::new("w", t(&[2, 1, 3, 3], &[0.7; 18]))];
        let mut g = Graph::new(&params);
        let x = g.input(Tensor::zeros(&[1, 4, 4]));
        let w = g.param(0);
        let y = g.conv2d(x, w, 1, 1).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 4, 4]);
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_output_shape_and_channel_mismatch() {
        let params = vec![Parameter::new("w", Tensor::<f64>::zeros(&[4, 2, 3, 3]))];
        let mut g = Graph::new(&params);
        let x = g.input(Tensor::zeros(&[2, 8, 8]));
        let w = g.param(0);
        let y = g.conv2d(x, w, 2, 1).unwrap();
        assert_eq!(g.value(y).shape(), &[4, 4, 4]);
        let bad = g.input(Tensor::zeros(&[3, 8, 8]));
        assert!(matches!(g.conv2d(bad, w, 1, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn activations() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let x = g.input(t(&[2], &[-2.0, 0.0]));
        let r = g.relu(x);
        let s = g.sigmoid(x);
        assert_eq!(g.value(r).data()[0], 0.0);
        assert_eq!(g.value(s).data()[1], 0.5);
    }

    #[test]
    fn global_pools() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let x = g.input(t(&[1, 1, 3], &[0.1, 0.9, 0.4]));
        let m = g.pool(x, PoolKind::GlobalMax, 0).unwrap();
        assert_eq!(g.value(m).data(), &[0.9]);
        assert_eq!(g.value(m).shape(), &[1, 1, 1]);
        let y = g.input(t(&[1, 1, 2], &[0.0, 1.0]));
        let a = g.pool(y, PoolKind::GlobalAverage, 0).unwrap();
        assert_eq!(g.value(a).data(), &[0.5]);
    }

    #[test]
    fn windowed_pool_requires_divisibility() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let x = g.input(Tensor::zeros(&[1, 5, 4]));
        assert!(matches!(
            g.pool(x, PoolKind::Max, 2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn max_pool_routes_gradient_to_argmax() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let x = g.variable(t(&[1, 2, 2], &[0.1, 0.8, 0.3, 0.2]));
        let y = g.pool(x, PoolKind::Max, 2).unwrap();
        let grads = g.backward(y, &[1.0]).unwrap();
        assert_eq!(grads.wrt(x).unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_identity_and_bias_only() {
        let params = vec![
            Parameter::new("w", t(&[2, 2], &[1.0, 0.0, 0.0, 1.0])),
            Parameter::new("b", Tensor::zeros(&[2])),
            Parameter::new("z", Tensor::zeros(&[2, 2])),
            Parameter::new("c", t(&[2], &[0.3, -0.4])),
        ];
        let mut g = Graph::new(&params);
        let x = g.input(t(&[2], &[5.0, -1.5]));
        let (w, b, z, c) = (g.param(0), g.param(1), g.param(2), g.param(3));
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[5.0, -1.5]);
        let y = g.dense(x, z, c).unwrap();
        assert_eq!(g.value(y).data(), &[0.3, -0.4]);
        let short = g.input(Tensor::zeros(&[3]));
        assert!(matches!(g.dense(short, w, b), Err(Error::Dimension(_))));
    }

    #[test]
    fn upsample_concat_replicates_and_stacks() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let d = g.input(t(&[1, 1, 1], &[3.0]));
        let s = g.input(Tensor::zeros(&[1, 2, 2]));
        let y = g.upsample_concat(d, s).unwrap();
        assert_eq!(g.value(y).data(), &[3.0, 3.0, 3.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let d = g.input(Tensor::zeros(&[2, 2, 2]));
        let s = g.input(Tensor::zeros(&[3, 4, 4]));
        let y = g.upsample_concat(d, s).unwrap();
        assert_eq!(g.value(y).shape()[0], 5);
        let bad = g.input(Tensor::zeros(&[3, 3, 4]));
        assert!(g.upsample_concat(d, bad).is_err());
    }

    #[test]
    fn upsample_backward_sums_blocks() {
        let params: Vec<Parameter<f64>> = vec![];
        let mut g = Graph::new(&params);
        let d = g.variable(t(&[1, 1, 1], &[1.0]));
        let s = g.input(Tensor::zeros(&[1, 2, 2]));
        let y = g.upsample_concat(d, s).unwrap();
        let grads = g.backward(y, &[1.0, 2.0, 3.0, 4.0, 9.0, 9.0, 9.0, 9.0]).unwrap();
        assert_eq!(grads.wrt(d).unwrap(), &[10.0]);
    }

    #[test]
    fn frozen_parameters_receive_no_gradient() {
        let params = vec![
            Parameter::new("w", t(&[1, 2], &[1.0, 2.0])).frozen(),
            Parameter::new("b", Tensor::zeros(&[1])),
        ];
        let mut g = Graph::new(&params);
        let x = g.input(t(&[2], &[1.0, 1.0]));
        let (w, b) = (g.param(0), g.param(1));
        let y = g.dense(x, w, b).unwrap();
        let grads = g.backward(y, &[1.0]).unwrap();
        let reached: Vec<usize> = grads.params().map(|(i, _)| i).collect();
        assert_eq!(reached, vec![1]);
    }
}
