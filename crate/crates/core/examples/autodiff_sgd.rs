//! Fits a tiny convolution + dense model with the tape autodiff and SGD.

use fundus_screen::tensor::{sgd_step, Graph, Parameter, SgdConfig, Tensor};

fn main() -> fundus_screen::Result<()> {
    let mut params = vec![
        Parameter::new("conv", Tensor::new(&[2, 1, 3, 3], vec![0.1f32; 18])?),
        Parameter::new("fc.weight", Tensor::new(&[1, 2 * 4 * 4], vec![0.05; 32])?),
        Parameter::new("fc.bias", Tensor::zeros(&[1])),
    ];
    let bright = Tensor::new(&[1, 4, 4], vec![1.0f32; 16])?;
    let dark = Tensor::new(&[1, 4, 4], vec![0.0f32; 16])?;
    let sgd = SgdConfig { learning_rate: 0.1, momentum: 0.9, decay: 1.0 };

    for step in 0..30 {
        let mut total = 0.0;
        for (x, y) in [(&bright, 1.0f32), (&dark, 0.0)] {
            let grads = {
                let mut g = Graph::new(&params);
                let input = g.input(x.clone());
                let w = g.param(0);
                let h = g.conv2d(input, w, 1, 1)?;
                let h = g.relu(h);
                let (fw, fb) = (g.param(1), g.param(2));
                let logit = g.dense(h, fw, fb)?;
                let p = g.sigmoid(logit);
                let prob = g.value(p).data()[0];
                total += (prob - y).powi(2);
                g.backward(p, &[2.0 * (prob - y)])?
            };
            grads.accumulate_into(&mut params, 0.5)?;
        }
        sgd_step(&mut params, &sgd)?;
        if step % 5 == 0 {
            println!("step {step:>2}: squared error {total:.5}");
        }
    }
    Ok(())
}
