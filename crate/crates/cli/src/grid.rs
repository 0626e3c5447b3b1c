//! Defect-probability grids: `log:a:b:k`, `lin:a:b:k` or a comma list.

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let grid = if let Some(rest) = spec.strip_prefix("log:") {
        let (a, b, k) = range(rest)?;
        if a <= 0.0 {
            return Err(format!("log grid needs a positive start, got {a}"));
        }
        spaced(a.ln(), b.ln(), k).into_iter().map(f64::exp).collect()
    } else if let Some(rest) = spec.strip_prefix("lin:") {
        let (a, b, k) = range(rest)?;
        spaced(a, b, k)
    } else {
        spec.split(',')
            .filter(|v| !v.trim().is_empty())
            .map(number)
            .collect::<Result<Vec<f64>, String>>()?
    };
    if grid.is_empty() {
        return Err("epsilon grid is empty".into());
    }
    Ok(grid)
}

fn number(v: &str) -> Result<f64, String> {
    v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}"))
}

fn range(rest: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = rest.split(':').collect();
    let [a, b, k] = parts[..] else {
        return Err(format!("expected start:stop:count, got {rest:?}"));
    };
    let (a, b) = (number(a)?, number(b)?);
    let k = k.trim().parse::<usize>().map_err(|_| format!("not a count: {k:?}"))?;
    if a > b {
        return Err(format!("grid start {a} exceeds stop {b}"));
    }
    Ok((a, b, k))
}

fn spaced(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}
