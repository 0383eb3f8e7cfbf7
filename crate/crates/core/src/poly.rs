//! Polynomial building blocks for trait factors `b(x)`, `d(x)`, `psi(x)` and
//! the scalar environment responses `Q(I)`.

use crate::error::{Error, Result};

/// Dense polynomial with ascending coefficients: `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `offset + slope * x`
    pub fn linear(offset: f64, slope: f64) -> Self {
        Self::new(vec![offset, slope])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }
}

/// Piecewise polynomial in absolute `x`. Piece `k` applies on
/// `[starts[k], starts[k + 1])`; the first piece extends to `-inf` and the
/// last one to `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    starts: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewisePoly {
    pub fn single(p: Poly) -> Self {
        Self {
            starts: vec![f64::NEG_INFINITY],
            pieces: vec![p],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::single(Poly::constant(c))
    }

    /// `breaks` are the interior breakpoints; there must be one more piece
    /// than breakpoints.
    pub fn new(breaks: Vec<f64>, pieces: Vec<Poly>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::Invalid(format!(
                "piecewise polynomial needs {} pieces for {} breakpoints, got {}",
                breaks.len() + 1,
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::Invalid(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        let mut starts = vec![f64::NEG_INFINITY];
        starts.extend(breaks);
        Ok(Self { starts, pieces })
    }

    /// Parses `"c0 c1 c2"` or `"c0 c1 ; @0.5 c0 c1"`: pieces separated by `;`,
    /// every piece after the first begins with `@start`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut breaks = Vec::new();
        let mut pieces = Vec::new();
        for (k, chunk) in text.split(';').enumerate() {
            let mut tokens = chunk.split_whitespace().peekable();
            if k > 0 {
                let start = tokens
                    .next()
                    .and_then(|t| t.strip_prefix('@'))
                    .ok_or_else(|| {
                        Error::Invalid(format!("piece {k} of '{text}' must begin with @start"))
                    })?;
                breaks.push(parse_f64(start)?);
            }
            let coeffs = tokens.map(parse_f64).collect::<Result<Vec<_>>>()?;
            if coeffs.is_empty() {
                return Err(Error::Invalid(format!("piece {k} of '{text}' has no coefficients")));
            }
            pieces.push(Poly::new(coeffs));
        }
        Self::new(breaks, pieces)
    }

    fn piece(&self, x: f64) -> &Poly {
        let idx = self.starts.partition_point(|&s| s <= x).saturating_sub(1);
        &self.pieces[idx]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece(x).eval(x)
    }

    pub fn derivative(&self) -> PiecewisePoly {
        Self {
            starts: self.starts.clone(),
            pieces: self.pieces.iter().map(Poly::derivative).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> PiecewisePoly {
        Self {
            starts: self.starts.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(s)).collect(),
        }
    }

    /// `Some(c)` when the function is the constant `c` everywhere.
    pub fn as_constant(&self) -> Option<f64> {
        let c = self.pieces[0].eval(0.0);
        self.pieces
            .iter()
            .all(|p| p.is_constant() && p.eval(0.0) == c)
            .then_some(c)
    }
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::Invalid(format!("'{tok}' is not a number")))
}

/// Scalar response `Q(I)` of one environment component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvResponse {
    /// `Q(I) = c`
    Constant(f64),
    /// `Q(I) = offset + slope * I`
    Affine { offset: f64, slope: f64 },
    /// `Q(I) = scale * exp(rate * I)`
    Exp { scale: f64, rate: f64 },
    /// `Q(I) = scale / (shift + I)`
    Reciprocal { scale: f64, shift: f64 },
}

impl EnvResponse {
    pub fn eval(&self, i: f64) -> f64 {
        match *self {
            EnvResponse::Constant(c) => c,
            EnvResponse::Affine { offset, slope } => offset + slope * i,
            EnvResponse::Exp { scale, rate } => scale * (rate * i).exp(),
            EnvResponse::Reciprocal { scale, shift } => scale / (shift + i),
        }
    }

    pub fn derivative(&self, i: f64) -> f64 {
        match *self {
            EnvResponse::Constant(_) => 0.0,
            EnvResponse::Affine { slope, .. } => slope,
            EnvResponse::Exp { scale, rate } => scale * rate * (rate * i).exp(),
            EnvResponse::Reciprocal { scale, shift } => -scale / ((shift + i) * (shift + i)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, EnvResponse::Constant(_))
            || matches!(self, EnvResponse::Affine { slope, .. } if *slope == 0.0)
    }

    /// Parses `const:c`, `affine:offset,slope`, `exp:scale,rate`, `recip:scale,shift`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let nums = args
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_f64)
            .collect::<Result<Vec<_>>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Invalid(format!(
                    "response '{text}' expects {n} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        match kind.trim() {
            "const" => {
                want(1)?;
                Ok(EnvResponse::Constant(nums[0]))
            }
            "affine" => {
                want(2)?;
                Ok(EnvResponse::Affine {
                    offset: nums[0],
                    slope: nums[1],
                })
            }
            "exp" => {
                want(2)?;
                Ok(EnvResponse::Exp {
                    scale: nums[0],
                    rate: nums[1],
                })
            }
            "recip" => {
                want(2)?;
                Ok(EnvResponse::Reciprocal {
                    scale: nums[0],
                    shift: nums[1],
                })
            }
            other => Err(Error::Invalid(format!("unknown response kind '{other}'"))),
        }
    }
}
