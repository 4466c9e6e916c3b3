//! Plain-text and image file formats.
//!
//! Matrices are comma-separated rows. Observed cells are `row,col` pairs.
//! Images are binary 8-bit PGM (P5) with values mapped to `[0, 1]`; writing
//! quantizes to the nearest multiple of 1/255, so exactly those values survive
//! a round trip.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generators::{ImageInstance, L1Instance, McInstance};
use crate::certificates::{ProtocolAccumulator, ResolutionDomain};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::prox_core::Layout;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn write_matrix_csv<W: Write>(mut out: W, data: &[f64], rows: usize, cols: usize) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Input(format!("{} values do not form a {rows}×{cols} matrix", data.len())));
    }
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Returns `(row-major data, rows, cols)`.
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<(Vec<f64>, usize, usize)> {
    let mut data = Vec::new();
    let (mut rows, mut cols) = (0, None);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for f in line.split(',') {
            let v: f64 = f.trim().parse().map_err(|e| parse_err(format!("bad number {f:?}: {e}")))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => return Err(parse_err(format!("row {} has {width} entries, expected {c}", rows + 1))),
            _ => {}
        }
        rows += 1;
    }
    Ok((data, rows, cols.unwrap_or(0)))
}

pub fn write_pairs_csv<W: Write>(mut out: W, pairs: &[(usize, usize)]) -> Result<()> {
    writeln!(out, "row,col")?;
    for (i, j) in pairs {
        writeln!(out, "{i},{j}")?;
    }
    Ok(())
}

pub fn read_pairs_csv<R: BufRead>(input: R) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (k == 0 && t == "row,col") {
            continue;
        }
        let (a, b) = t.split_once(',').ok_or_else(|| parse_err(format!("expected `row,col`, got {t:?}")))?;
        let p = |s: &str| s.trim().parse::<usize>().map_err(|e| parse_err(format!("bad index {s:?}: {e}")));
        out.push((p(a)?, p(b)?));
    }
    Ok(out)
}

/// Quantize `[0, 1]` values (clamped) to 8 bits.
pub fn write_pgm<W: Write>(mut out: W, data: &[f64], rows: usize, cols: usize) -> Result<()> {
    if data.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::Input(format!("{} values do not form a {rows}×{cols} image", data.len())));
    }
    write!(out, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Read a binary PGM; returns values scaled by `1/maxval` with the image
/// dimensions `(rows, cols)`.
pub fn read_pgm<R: Read>(mut input: R) -> Result<(Vec<f64>, usize, usize)> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < buf.len() && buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(parse_err("only binary PGM (P5) is supported"));
    }
    let num = |s: String| s.parse::<usize>().map_err(|e| parse_err(format!("bad PGM header field {s:?}: {e}")));
    let cols = num(token()?)?;
    let rows = num(token()?)?;
    let maxval = num(token()?)?;
    if !(1..=65535).contains(&maxval) {
        return Err(parse_err(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let width = if maxval < 256 { 1 } else { 2 };
    let raster = buf.get(pos..).unwrap_or_default();
    if raster.len() < rows * cols * width {
        return Err(parse_err(format!("PGM raster has {} bytes, expected {}", raster.len(), rows * cols * width)));
    }
    let data = (0..rows * cols)
        .map(|k| {
            let v = if width == 1 { raster[k] as usize } else { (raster[2 * k] as usize) << 8 | raster[2 * k + 1] as usize };
            v as f64 / maxval as f64
        })
        .collect();
    Ok((data, rows, cols))
}

/// Read a square image from a PGM or CSV file (by extension).
pub fn read_image(path: &Path) -> Result<(Vec<f64>, usize)> {
    let file = fs::File::open(path)?;
    let (data, rows, cols) = match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(BufReader::new(file))?,
        Some("csv") => read_matrix_csv(BufReader::new(file))?,
        _ => return Err(Error::Input(format!("{}: expected a .pgm or .csv image", path.display()))),
    };
    if rows != cols || rows < 2 {
        return Err(Error::Input(format!("{}: image must be square with side ≥ 2, got {rows}×{cols}", path.display())));
    }
    Ok((data, rows))
}

fn create(dir: &Path, name: &str) -> Result<std::io::BufWriter<fs::File>> {
    Ok(std::io::BufWriter::new(fs::File::create(dir.join(name))?))
}

fn open(dir: &Path, name: &str) -> Result<BufReader<fs::File>> {
    fs::File::open(dir.join(name))
        .map(BufReader::new)
        .map_err(|e| Error::Input(format!("{}: {e}", dir.join(name).display())))
}

fn read_vector(dir: &Path, name: &str) -> Result<Vec<f64>> {
    Ok(read_matrix_csv(open(dir, name)?)?.0)
}

fn write_vector(dir: &Path, name: &str, v: &[f64]) -> Result<()> {
    write_matrix_csv(create(dir, name)?, v, v.len(), 1)
}

/// Scalars stored next to the CSV files of a dumped instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceMeta {
    MatrixCompletion { n: usize, sigma: f64, lambda: f64, mu: f64, d: f64, opt: Option<f64> },
    L1Planted { n: usize, m: usize, r_star: f64, l_bound: f64 },
    Image { n: usize, mu1: f64, mu2: f64, mu3: f64 },
}

/// A loaded instance of any family.
#[derive(Clone, Debug)]
pub enum Instance {
    MatrixCompletion(McInstance),
    L1Planted(L1Instance),
    Image(ImageInstance),
}

impl Instance {
    /// Re-check a planted optimum; instances without one have nothing to verify.
    pub fn verify(&self) -> Result<Option<f64>> {
        match self {
            Instance::MatrixCompletion(i) if i.certificate.is_some() => i.verify().map(Some),
            Instance::L1Planted(i) => i.verify().map(Some),
            _ => Ok(None),
        }
    }
}

/// Write `meta.json` plus one CSV per array into `dir`.
pub fn dump_instance(dir: &Path, inst: &Instance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = match inst {
        Instance::MatrixCompletion(i) => {
            let n = i.n;
            write_matrix_csv(create(dir, "y_sharp.csv")?, &i.y_sharp, n, n)?;
            write_vector(dir, "b.csv", &i.b)?;
            let pairs: Vec<(usize, usize)> = i.mask.iter().map(|&k| (k / n, k % n)).collect();
            write_pairs_csv(create(dir, "omega.csv")?, &pairs)?;
            if let Some((g1, g2)) = &i.certificate {
                write_matrix_csv(create(dir, "g1.csv")?, g1, n, n)?;
                write_matrix_csv(create(dir, "g2.csv")?, g2, n, n)?;
            }
            InstanceMeta::MatrixCompletion { n, sigma: i.sigma, lambda: i.lambda, mu: i.mu, d: i.d, opt: i.opt }
        }
        Instance::L1Planted(i) => {
            write_matrix_csv(create(dir, "a.csv")?, &i.a.data, i.m(), i.n())?;
            write_vector(dir, "b.csv", &i.b)?;
            write_vector(dir, "x_star.csv", &i.x_star)?;
            write_vector(dir, "lambda_star.csv", &i.lambda_star)?;
            InstanceMeta::L1Planted { n: i.n(), m: i.m(), r_star: i.r_star, l_bound: i.l_bound }
        }
        Instance::Image(i) => {
            write_matrix_csv(create(dir, "b.csv")?, &i.b, i.n, i.n)?;
            InstanceMeta::Image { n: i.n, mu1: i.mu1, mu2: i.mu2, mu3: i.mu3 }
        }
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("meta.json"), json)?;
    Ok(())
}

pub fn load_instance(dir: &Path) -> Result<Instance> {
    let mut text = String::new();
    open(dir, "meta.json")?.read_to_string(&mut text)?;
    let meta: InstanceMeta = serde_json::from_str(&text).map_err(|e| parse_err(format!("meta.json: {e}")))?;
    let check = |name: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(parse_err(format!("{name}: {got} values, expected {want}")))
        }
    };
    Ok(match meta {
        InstanceMeta::MatrixCompletion { n, sigma, lambda, mu, d, opt } => {
            let y_sharp = read_vector(dir, "y_sharp.csv")?;
            check("y_sharp.csv", y_sharp.len(), n * n)?;
            let mask: Vec<usize> = read_pairs_csv(open(dir, "omega.csv")?)?
                .into_iter()
                .map(|(i, j)| if i < n && j < n { Ok(i * n + j) } else { Err(parse_err(format!("cell ({i},{j}) outside {n}×{n}"))) })
                .collect::<Result<_>>()?;
            let b = read_vector(dir, "b.csv")?;
            check("b.csv", b.len(), mask.len())?;
            let certificate = if dir.join("g1.csv").exists() {
                let (g1, g2) = (read_vector(dir, "g1.csv")?, read_vector(dir, "g2.csv")?);
                check("g1.csv", g1.len(), n * n)?;
                check("g2.csv", g2.len(), n * n)?;
                Some((g1, g2))
            } else {
                None
            };
            Instance::MatrixCompletion(McInstance { n, mask, b, sigma, lambda, mu, d, y_sharp, opt, certificate })
        }
        InstanceMeta::L1Planted { n, m, r_star, l_bound } => {
            let a = read_vector(dir, "a.csv")?;
            check("a.csv", a.len(), m * n)?;
            let inst = L1Instance {
                a: DenseMatrix::new(m, n, a)?,
                b: read_vector(dir, "b.csv")?,
                x_star: read_vector(dir, "x_star.csv")?,
                lambda_star: read_vector(dir, "lambda_star.csv")?,
                r_star,
                l_bound,
            };
            check("b.csv", inst.b.len(), m)?;
            check("x_star.csv", inst.x_star.len(), n)?;
            check("lambda_star.csv", inst.lambda_star.len(), m)?;
            Instance::L1Planted(inst)
        }
        InstanceMeta::Image { n, mu1, mu2, mu3 } => {
            let b = read_vector(dir, "b.csv")?;
            check("b.csv", b.len(), n * n)?;
            Instance::Image(ImageInstance { n, b, mu1, mu2, mu3 })
        }
    })
}

/// Everything needed to recompute a certificate lower bound offline:
/// `Φ̄(x̄) − Res(domain | protocol, certificate)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolDump {
    pub layout: Layout,
    pub domain: ResolutionDomain,
    pub sums: ProtocolAccumulator,
    pub phi_bar_avg: f64,
    /// Best objective value seen, for reporting the gap.
    pub upper: f64,
}

impl ProtocolDump {
    pub fn lower_bound(&self) -> Result<f64> {
        Ok(self.phi_bar_avg - self.sums.resolution(&self.domain, &self.layout)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{gen_l1_planted, gen_mc_known_opt, McParams};

    #[test]
    fn matrix_csv_round_trip() {
        let m = [1.0, -2.5, 1.0 / 3.0, 4e-300, 5.0, 6.0];
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, 2, 3).unwrap();
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), (m.to_vec(), 2, 3));
        assert!(read_matrix_csv("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn pairs_round_trip() {
        let p = vec![(0, 3), (7, 1)];
        let mut buf = Vec::new();
        write_pairs_csv(&mut buf, &p).unwrap();
        assert_eq!(read_pairs_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn pgm_round_trip_on_quantized_values() {
        let (rows, cols) = (3, 5);
        let img: Vec<f64> = (0..rows * cols).map(|k| ((k * 37) % 256) as f64 / 255.0).collect();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &img, rows, cols).unwrap();
        let (back, r, c) = read_pgm(buf.as_slice()).unwrap();
        assert_eq!((r, c), (rows, cols));
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let mut bytes = b"P5\n# comment\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        assert_eq!(read_pgm(bytes.as_slice()).unwrap(), (vec![0.0, 1.0], 1, 2));
        assert!(read_pgm(&b"P2\n2 1\n255\n0 1"[..]).is_err());
        assert!(read_pgm(&b"P5\n2 2\n255\n\x00"[..]).is_err());
    }

    #[test]
    fn instance_dumps_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (mc, _) = gen_mc_known_opt(6, 2, &McParams::default()).unwrap();
        dump_instance(dir.path(), &Instance::MatrixCompletion(mc.clone())).unwrap();
        let Instance::MatrixCompletion(back) = load_instance(dir.path()).unwrap() else { panic!("wrong family") };
        assert_eq!(back.mask, mc.mask);
        assert_eq!(back.b, mc.b);
        assert_eq!(back.certificate, mc.certificate);
        assert!(back.verify().is_ok());

        let dir = tempfile::tempdir().unwrap();
        let l1 = gen_l1_planted(16, 8, 1.0, 0.2, 3).unwrap();
        dump_instance(dir.path(), &Instance::L1Planted(l1.clone())).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert!(back.verify().unwrap().is_some());
        let Instance::L1Planted(back) = back else { panic!("wrong family") };
        assert_eq!(back.a, l1.a);
    }
}
