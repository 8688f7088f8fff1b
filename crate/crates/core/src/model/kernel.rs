//! The anti-damping operator `Ψ(v)(x) = ∫ K(x,y) v(y) dy` in modal form.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::expr::ScalarExpr;
use crate::basis::{dot, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::registry::Registry;

/// Magic header of the binary kernel matrix layout.
pub const KERNEL_MAGIC: &[u8; 8] = b"NLWKERN1";

/// `K̂_{jl} = ∫∫ K(x,y) φ_j(x) φ_l(y)`. With an orthonormal basis the
/// Frobenius norm of `K̂` equals `‖K‖_{L²(Ω×Ω)}` of the projected kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n: usize,
    matrix: Vec<f64>,
    hs_norm: f64,
    is_zero: bool,
}

impl Kernel {
    pub fn zero(n: usize) -> Self {
        Kernel {
            n,
            matrix: vec![0.0; n * n],
            hs_norm: 0.0,
            is_zero: true,
        }
    }

    /// Wraps a row-major `n×n` modal matrix.
    pub fn from_modal_matrix(n: usize, matrix: Vec<f64>) -> Result<Self> {
        check_len("kernel modal matrix", n * n, matrix.len())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("kernel matrix has non-finite entries"));
        }
        let hs_norm = dot(&matrix, &matrix).sqrt();
        Ok(Kernel {
            n,
            is_zero: hs_norm == 0.0,
            matrix,
            hs_norm,
        })
    }

    /// Projects `Σ_i w_i g_i(x) h_i(y)` onto the basis. Each factor is given
    /// by its samples on the basis grid.
    pub fn separable(basis: &SpectralBasis, terms: &[SeparableTerm]) -> Result<Self> {
        let n = basis.mode_count();
        let mut matrix = vec![0.0; n * n];
        for term in terms {
            let left = basis.to_modal(&term.left)?;
            let right = basis.to_modal(&term.right)?;
            for (j, lj) in left.iter().enumerate() {
                for (l, rl) in right.iter().enumerate() {
                    matrix[j * n + l] += term.weight * lj * rl;
                }
            }
        }
        Kernel::from_modal_matrix(n, matrix)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("anti-damping input", self.n, v.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        if self.is_zero {
            out.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(&self.matrix[j * self.n..(j + 1) * self.n], v);
        }
    }
}

/// One term `w·g(x)·h(y)` of a separable kernel, sampled on the grid.
#[derive(Debug, Clone)]
pub struct SeparableTerm {
    pub weight: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(rename = "type")]
    pub kind: String,
    /// `separable`: terms whose factors are expressions in the coordinates
    /// `x` (and `y` in 2D) of a single point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<SeparableTermSpec>,
    /// `matrix_file`: path relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// `matrix_file`: overall factor applied after loading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            kind: "zero".into(),
            terms: Vec::new(),
            path: None,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableTermSpec {
    #[serde(default = "one")]
    pub weight: f64,
    pub left: String,
    pub right: String,
}

fn one() -> f64 {
    1.0
}

pub struct KernelContext<'a> {
    pub basis: &'a SpectralBasis,
    pub base_dir: &'a Path,
}

pub type KernelFactory = fn(&KernelSpec, &KernelContext<'_>) -> Result<Kernel>;
pub type KernelRegistry = Registry<KernelFactory>;

pub fn builtin_registry() -> KernelRegistry {
    KernelRegistry::new("kernel")
        .with("zero", |_, ctx| Ok(Kernel::zero(ctx.basis.mode_count())))
        .with("separable", build_separable)
        .with("matrix_file", build_from_file)
}

fn build_separable(spec: &KernelSpec, ctx: &KernelContext<'_>) -> Result<Kernel> {
    if spec.terms.is_empty() {
        return Err(Error::config("separable kernel needs at least one term"));
    }
    let sample = |src: &str| -> Result<Vec<f64>> {
        let e = ScalarExpr::parse(src, ["x", "y"])?;
        Ok(ctx.basis.sample(|x, y| e.eval(x, y)))
    };
    let terms = spec
        .terms
        .iter()
        .map(|t| {
            Ok(SeparableTerm {
                weight: t.weight,
                left: sample(&t.left)?,
                right: sample(&t.right)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Kernel::separable(ctx.basis, &terms)
}

fn build_from_file(spec: &KernelSpec, ctx: &KernelContext<'_>) -> Result<Kernel> {
    let rel = spec
        .path
        .as_ref()
        .ok_or_else(|| Error::config("matrix_file kernel needs 'path'"))?;
    let path = ctx.base_dir.join(rel);
    let (rows, cols, mut data) = read_kernel_matrix(&path)?;
    let n = ctx.basis.mode_count();
    if rows != n || cols != n {
        return Err(Error::config(format!(
            "{}: kernel matrix is {rows}x{cols}, basis has {n} modes",
            path.display()
        )));
    }
    if let Some(s) = spec.scale {
        data.iter_mut().for_each(|v| *v *= s);
    }
    Kernel::from_modal_matrix(n, data)
}

/// Reads a modal matrix in either layout, sniffing the binary magic.
///
/// Text layout: one row per line, entries separated by whitespace or commas,
/// `#` starts a comment. Binary layout: the 8 magic bytes `NLWKERN1`, then
/// rows and cols as little-endian u64, then `rows·cols` little-endian f64 in
/// row-major order.
pub fn read_kernel_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(KERNEL_MAGIC) {
        return parse_binary(&bytes).map_err(|msg| Error::config(format!("{}: {msg}", path.display())));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::config(format!("{}: neither NLWKERN1 binary nor UTF-8 text", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::config(format!("{}:{}: bad number '{t}'", path.display(), lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::config(format!(
                    "{}:{}: row has {} entries, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok((rows.len(), cols, rows.concat()))
}

fn parse_binary(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    let word = |at: usize| -> std::result::Result<[u8; 8], String> {
        bytes
            .get(at..at + 8)
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| "truncated kernel file".to_string())
    };
    let rows = u64::from_le_bytes(word(8)?) as usize;
    let cols = u64::from_le_bytes(word(16)?) as usize;
    let count = rows.checked_mul(cols).ok_or("kernel dimensions overflow")?;
    if bytes.len() != 24 + 8 * count {
        return Err(format!(
            "expected {} bytes for a {rows}x{cols} kernel, found {}",
            24 + 8 * count,
            bytes.len()
        ));
    }
    let data = (0..count)
        .map(|i| word(24 + 8 * i).map(f64::from_le_bytes))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((rows, cols, data))
}

pub fn write_kernel_binary(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    check_len("kernel matrix", rows * cols, data.len())?;
    let mut buf = Vec::with_capacity(24 + 8 * data.len());
    buf.extend_from_slice(KERNEL_MAGIC);
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_kernel_text(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    check_len("kernel matrix", rows * cols, data.len())?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols].iter().map(f64::to_string).collect();
        writeln!(f, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
