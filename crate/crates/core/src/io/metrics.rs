use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::filters::StepDiagnostics;
use crate::ops::SurfaceField;

use super::IoError;

/// Band-mean squared error over points and channels after clamping both to `[0, 1]`.
pub fn mse(u: &SurfaceField, reference: &SurfaceField) -> Result<f64, IoError> {
    if u.len() != reference.len() || u.channels() != reference.channels() {
        return Err(IoError::Mismatch(format!(
            "{}x{} vs {}x{} (points x channels)",
            u.len(),
            u.channels(),
            reference.len(),
            reference.channels()
        )));
    }
    if u.values().is_empty() {
        return Err(IoError::Mismatch("empty fields".into()));
    }
    let sum: f64 =
        u.values().iter().zip(reference.values()).map(|(a, b)| (a.clamp(0.0, 1.0) - b.clamp(0.0, 1.0)).powi(2)).sum();
    Ok(sum / u.values().len() as f64)
}

/// `10 log10(1 / MSE)` in decibels; identical fields give `f64::INFINITY`.
pub fn psnr(u: &SurfaceField, reference: &SurfaceField) -> Result<f64, IoError> {
    let e = mse(u, reference)?;
    Ok(if e == 0.0 { f64::INFINITY } else { -10.0 * e.log10() })
}

const FIELD_MAGIC: &str = "cpdiff-field";

/// Text dump: a header line `cpdiff-field points=N channels=K`, then one line
/// per band point with the channel values in round-trip precision.
pub fn write_field(path: &Path, field: &SurfaceField) -> Result<(), IoError> {
    let file = File::create(path).map_err(IoError::file(path))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{FIELD_MAGIC} points={} channels={}", field.len(), field.channels())?;
        for i in 0..field.len() {
            let line: Vec<String> = field.point(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()
    };
    write().map_err(IoError::file(path))
}

pub fn read_field(path: &Path) -> Result<SurfaceField, IoError> {
    let text = std::fs::read_to_string(path).map_err(IoError::file(path))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let mut parts = header.split_whitespace();
    if parts.next() != Some(FIELD_MAGIC) {
        return Err(IoError::format(path, "not a field dump"));
    }
    let mut get = |key: &str| -> Result<usize, IoError> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .and_then(|p| p.strip_prefix('='))
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| IoError::format(path, format!("bad header, expected `{key}=<n>`")))
    };
    let (points, channels) = (get("points")?, get("channels")?);
    let mut values = Vec::with_capacity(points * channels);
    for (n, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::format(path, format!("line {}: {e}", n + 2)))?;
        if row.len() != channels {
            return Err(IoError::format(path, format!("line {}: {} values, expected {channels}", n + 2, row.len())));
        }
        values.extend(row);
    }
    if values.len() != points * channels {
        return Err(IoError::format(path, format!("{} rows, expected {points}", values.len() / channels.max(1))));
    }
    Ok(SurfaceField::new(values, channels))
}

/// Per-step diagnostics as CSV.
pub fn write_diagnostics(path: &Path, rows: &[StepDiagnostics]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| IoError::format(path, e.to_string()))?;
    let mut write = || -> csv::Result<()> {
        w.write_record(["step", "time", "min", "max", "mean", "max_coherence"])?;
        for r in rows {
            w.write_record([
                r.step.to_string(),
                format!("{:e}", r.time),
                format!("{:e}", r.min),
                format!("{:e}", r.max),
                format!("{:e}", r.mean),
                format!("{:e}", r.max_coherence),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| IoError::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psnr_sentinels_and_exact_values() {
        let u = SurfaceField::new(vec![0.2, 0.5, 0.7, 0.1], 2);
        assert_eq!(psnr(&u, &u).unwrap(), f64::INFINITY);
        let shifted = u.map(|v| v + 0.1);
        assert!((psnr(&shifted, &u).unwrap() - 20.0).abs() < 1e-12);
        assert!(psnr(&u, &SurfaceField::new(vec![0.0; 4], 1)).is_err());
    }

    #[test]
    fn psnr_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..300).map(|_| rng.gen_range(-0.2..1.2)).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut acc = 0.0;
        for k in 0..300 {
            let x = a[k].clamp(0.0, 1.0);
            acc += (x - b[k]) * (x - b[k]);
        }
        let expected = 10.0 * (1.0 / (acc / 300.0)).log10();
        let got = psnr(&SurfaceField::new(a, 3), &SurfaceField::new(b, 3)).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn field_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        let f = SurfaceField::new(vec![0.1, 1.0 / 3.0, -2.5e-17, 7.0, f64::MIN_POSITIVE, 0.0], 3);
        write_field(&path, &f).unwrap();
        assert_eq!(read_field(&path).unwrap().values(), f.values());
        std::fs::write(&path, "cpdiff-field points=2 channels=1\n0.5\n").unwrap();
        assert!(read_field(&path).is_err());
    }
}
