use intcorr::num::compensated_sum;

/// Mean and standard error of the mean; the error is zero below two values.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// 17 significant digits, empty for missing values.
pub fn fmt_f(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_nan() => "nan".into(),
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}
