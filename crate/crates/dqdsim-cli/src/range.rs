/// `start:stop:count` with both endpoints included. A count of 1 gives `[start]`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("`{text}` is not of the form start:stop:count"));
    };
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("`{s}` is not a finite number"));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a count"))?;
    match n {
        0 => Err("count must be at least 1".into()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()),
    }
}

/// Same endpoints and count, spaced geometrically. Both endpoints must be positive.
pub fn parse_log_range(text: &str) -> Result<Vec<f64>, String> {
    let lin = parse_range(text)?;
    let (a, b) = (lin[0], lin[lin.len() - 1]);
    if !(a > 0.0 && b > 0.0) {
        return Err("logarithmic ranges need positive endpoints".into());
    }
    let n = lin.len();
    Ok((0..n)
        .map(|k| if n == 1 || k == 0 { a } else if k == n - 1 { b } else { a * (b / a).powf(k as f64 / (n - 1) as f64) })
        .collect())
}
