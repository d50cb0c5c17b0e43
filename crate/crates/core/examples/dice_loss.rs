//! Dice loss of a soft map against a binary mask and its closed-form gradient
//! compared with central differences.

use fundus_screen::losses::{dice_gradient, dice_loss, dice_overlap, SegPair};

fn main() -> fundus_screen::Result<()> {
    let truth: Vec<f64> = (0..16).map(|i| if (4..12).contains(&i) { 1.0 } else { 0.0 }).collect();
    let predicted: Vec<f64> = (0..16).map(|i| 0.5 + 0.4 * ((i as f64 - 7.5) / 4.0).cos()).collect();
    let pair = SegPair::new(&predicted, &truth)?;
    println!("loss    {:.6}", dice_loss(&pair)?);
    println!("overlap {:.6}", dice_overlap(&pair)?);

    let grad = dice_gradient(&pair)?;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..predicted.len() {
        let mut plus = predicted.clone();
        let mut minus = predicted.clone();
        plus[i] += h;
        minus[i] -= h;
        let numeric = (dice_loss(&SegPair::new(&plus, &truth)?)? - dice_loss(&SegPair::new(&minus, &truth)?)?) / (2.0 * h);
        worst = worst.max((numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-12));
    }
    println!("largest relative gap to central differences: {worst:.2e}");
    Ok(())
}
