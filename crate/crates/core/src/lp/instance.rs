use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility problem `A x >= b` over the box `lower <= x <= upper`, with
/// `|A_i x - b_i| <= rho` everywhere on the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rho: f64,
}

/// `(min, max)` of `row . x - b` over the box, by interval arithmetic.
fn row_range(row: &[f64], b: f64, lower: &[f64], upper: &[f64]) -> (f64, f64) {
    let mut lo = -b;
    let mut hi = -b;
    for ((a, l), u) in row.iter().zip(lower).zip(upper) {
        let (p, q) = (a * l, a * u);
        lo += p.min(q);
        hi += p.max(q);
    }
    (lo, hi)
}

impl LpInstance {
    /// Validates shapes and the box. Without `rho` the tight interval bound
    /// is used; a supplied `rho` must not be below it.
    pub fn new(
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        rho: Option<f64>,
    ) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let m = a[0].len();
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: m,
                    found: row.len(),
                });
            }
        }
        if b.len() != n {
            return Err(Error::LengthMismatch {
                what: "b",
                expected: n,
                got: b.len(),
            });
        }
        for (what, v) in [("lower", &lower), ("upper", &upper)] {
            if v.len() != m {
                return Err(Error::LengthMismatch {
                    what,
                    expected: m,
                    got: v.len(),
                });
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !a.iter().all(|r| finite(r)) || !finite(&b) || !finite(&lower) || !finite(&upper) {
            return Err(Error::param("instance values must be finite"));
        }
        if let Some(j) = (0..m).find(|&j| lower[j] > upper[j]) {
            return Err(Error::param(format!(
                "empty box: lower {} > upper {} in coordinate {}",
                lower[j],
                upper[j],
                j + 1
            )));
        }
        let certified = certified_rho(&a, &b, &lower, &upper);
        let rho = match rho {
            Some(r) if r < certified => {
                return Err(Error::param(format!(
                    "rho = {r} is below the certified bound {certified}"
                )))
            }
            Some(r) => r,
            None => certified,
        };
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::OutOfRange {
                what: "rho",
                value: rho,
                range: "(0, inf)",
            });
        }
        Ok(LpInstance {
            a,
            b,
            lower,
            upper,
            rho,
        })
    }

    pub fn n_constraints(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `A_i x - b_i` for every constraint.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b)
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// A constraint that no point of the box satisfies, if any.
    pub fn certify_infeasible(&self) -> Option<usize> {
        (0..self.n_constraints())
            .find(|&i| row_range(&self.a[i], self.b[i], &self.lower, &self.upper).1 < 0.0)
    }
}

/// `max_i max_{x in box} |A_i x - b_i|`.
pub fn certified_rho(a: &[Vec<f64>], b: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, &bi)| {
            let (lo, hi) = row_range(row, bi, lower, upper);
            lo.abs().max(hi.abs())
        })
        .fold(0.0, f64::max)
}

/// Random instance on `[-1, 1]^m` built around a point `x0` in
/// `[-1/2, 1/2]^m`: every constraint holds at `x0` with slack in
/// `[0.05 rho, 0.1 rho]` and `rho` is at most `rho_target`.
pub fn random_feasible_instance<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rho_target: f64,
    rng: &mut R,
) -> Result<(LpInstance, Vec<f64>)> {
    if n == 0 || m == 0 || !(rho_target > 0.0) {
        return Err(Error::param("need n, m >= 1 and rho_target > 0"));
    }
    let x0: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..=0.5)).collect();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        let scale = 0.6 * rho_target / l1.max(1e-12);
        row.iter_mut().for_each(|v| *v *= scale);
        let slack = rng.random_range(0.05..=0.1) * rho_target;
        let ax0: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        a.push(row);
        b.push(ax0 - slack);
    }
    let inst = LpInstance::new(a, b, vec![-1.0; m], vec![1.0; m], None)?;
    Ok((inst, x0))
}

/// A random feasible-looking instance whose constraint `violated` exceeds
/// its best attainable value on the box by `gap`, so no point satisfies it.
pub fn random_infeasible_instance<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rho_target: f64,
    gap: f64,
    rng: &mut R,
) -> Result<LpInstance> {
    if !(gap > 0.0) {
        return Err(Error::param("gap must be positive"));
    }
    let (inst, _) = random_feasible_instance(n, m, rho_target, rng)?;
    let violated = rng.random_range(0..n);
    let mut b = inst.b.clone();
    let (_, hi) = row_range(&inst.a[violated], 0.0, &inst.lower, &inst.upper);
    b[violated] = hi + gap;
    LpInstance::new(inst.a, b, inst.lower, inst.upper, None)
}

fn parse_list(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{e} ({s:?})"),
            })
        })
        .collect()
}

/// Parses the `key = value` instance format: `n`, `m`, `A` (row-major),
/// `b`, `lower`, `upper`, and optional `rho`. `#` starts a comment.
pub fn parse_instance(text: &str) -> Result<LpInstance> {
    let mut n = None;
    let mut m = None;
    let mut a = None;
    let mut b = None;
    let mut lower = None;
    let mut upper = None;
    let mut rho = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: "expected `key = value`".into(),
        })?;
        let value = value.trim();
        let as_count = |v: &str| {
            v.parse::<usize>().map_err(|e| Error::Parse {
                line,
                message: format!("{e} ({v:?})"),
            })
        };
        match key.trim() {
            "n" => n = Some(as_count(value)?),
            "m" => m = Some(as_count(value)?),
            "A" => a = Some(parse_list(line, value)?),
            "b" => b = Some(parse_list(line, value)?),
            "lower" => lower = Some(parse_list(line, value)?),
            "upper" => upper = Some(parse_list(line, value)?),
            "rho" => {
                let v = parse_list(line, value)?;
                if v.len() != 1 {
                    return Err(Error::Parse {
                        line,
                        message: "rho takes a single value".into(),
                    });
                }
                rho = Some(v[0]);
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
    }
    let missing = |k: &str| Error::param(format!("instance is missing `{k}`"));
    let n = n.ok_or_else(|| missing("n"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let a = a.ok_or_else(|| missing("A"))?;
    if a.len() != n * m {
        return Err(Error::LengthMismatch {
            what: "A (n * m entries)",
            expected: n * m,
            got: a.len(),
        });
    }
    let rows = if m == 0 { Vec::new() } else { a.chunks(m).map(<[f64]>::to_vec).collect() };
    LpInstance::new(
        rows,
        b.ok_or_else(|| missing("b"))?,
        lower.ok_or_else(|| missing("lower"))?,
        upper.ok_or_else(|| missing("upper"))?,
        rho,
    )
}

pub fn read_instance(path: &Path) -> Result<LpInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text)
}

pub fn format_instance(inst: &LpInstance) -> String {
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    writeln!(out, "n = {}", inst.n_constraints()).unwrap();
    writeln!(out, "m = {}", inst.dim()).unwrap();
    writeln!(out, "A = {}", join(&inst.a.concat())).unwrap();
    writeln!(out, "b = {}", join(&inst.b)).unwrap();
    writeln!(out, "lower = {}", join(&inst.lower)).unwrap();
    writeln!(out, "upper = {}", join(&inst.upper)).unwrap();
    writeln!(out, "rho = {}", inst.rho).unwrap();
    out
}

pub fn write_instance(inst: &LpInstance, path: &Path) -> Result<()> {
    std::fs::write(path, format_instance(inst)).map_err(|e| Error::io(path, e))
}
