//! ROC curve, AUC, best balanced-accuracy threshold and specificity at a
//! sensitivity floor for a small labelled score set.

use fundus_screen::metrics::{auc, best_bacc_point, roc_curve, spe_at_sensitivity, summarize, report_line};

fn main() -> fundus_screen::Result<()> {
    let scores = [0.95, 0.9, 0.85, 0.8, 0.7, 0.7, 0.6, 0.55, 0.4, 0.35, 0.3, 0.2, 0.1];
    let labels = [true, true, false, true, true, false, true, false, false, true, false, false, false];

    let curve = roc_curve(&scores, &labels)?;
    print!("{}", curve.to_csv());
    println!("auc {:.4}", auc(&curve));

    let best = best_bacc_point(&curve);
    println!("best bacc {:.4} at threshold {} (sen {:.4}, spe {:.4})", best.bacc, best.threshold, best.sensitivity, best.specificity);
    let floor = spe_at_sensitivity(&curve, 0.95)?;
    println!("spe {:.4} at sen {:.4} >= 0.95", floor.specificity, floor.sensitivity);
    println!("{}", report_line("example", &summarize(&scores, &labels)?));
    Ok(())
}
