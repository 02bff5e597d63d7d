//! CSV output for training records.

use crate::types::TrainRecord;
use std::fmt::Write;

/// Shortest round-trip decimal, switching to exponent form for very large or
/// very small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_header(k: usize) -> String {
    let mut cols = vec!["step".to_string(), "total_loss".into(), "tilted_loss".into()];
    for prefix in ["loss", "w", "gnorm2", "var"] {
        cols.extend((0..k).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(["c_under", "c_over", "beta", "gamma"].map(String::from));
    cols.join(",")
}

pub fn csv_row(r: &TrainRecord) -> String {
    let mut s = String::new();
    write!(s, "{},{},", r.step, fmt_f64(r.total_loss)).unwrap();
    if let Some(t) = r.tilted_loss {
        s.push_str(&fmt_f64(t));
    }
    let cols = r
        .per_task_loss
        .iter()
        .chain(r.weights.iter())
        .copied()
        .chain(r.stats.iter().map(|x| x.grad_norm_sq_hat))
        .chain(r.stats.iter().map(|x| x.var_hat))
        .chain([r.conflict.c_under, r.conflict.c_over, r.conflict.beta, r.conflict.gamma]);
    for v in cols {
        s.push(',');
        s.push_str(&fmt_f64(v));
    }
    s
}

pub fn records_to_csv(records: &[TrainRecord]) -> String {
    let k = records.first().map_or(0, |r| r.per_task_loss.len());
    let mut out = csv_header(k);
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_shape() {
        assert_eq!(
            csv_header(2),
            "step,total_loss,tilted_loss,loss_0,loss_1,w_0,w_1,gnorm2_0,gnorm2_1,var_0,var_1,c_under,c_over,beta,gamma"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.5, -2.25e-9, 3.0e20, 0.1 + 0.2, 1e-4, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }
}
