use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::poly::{LinearSystem, Monomial, Polynomial, VectorField};

/// Which sum-of-squares condition is placed on the Lyapunov candidate
/// itself: the whole polynomial or only its top homogeneous component.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SearchMode {
    VSos,
    ThcSos,
}

/// The dynamics a certificate speaks about: one or more continuous-time
/// polynomial modes, or discrete-time linear modes.
#[derive(Clone, PartialEq, Debug)]
pub enum CertSystem {
    ContinuousModes(Vec<VectorField>),
    DiscreteModes(Vec<LinearSystem>),
}

impl CertSystem {
    pub fn continuous(f: VectorField) -> Self {
        CertSystem::ContinuousModes(vec![f])
    }

    pub fn n_vars(&self) -> usize {
        match self {
            CertSystem::ContinuousModes(fs) => fs[0].n_vars(),
            CertSystem::DiscreteModes(ms) => ms[0].dim(),
        }
    }

    pub fn n_modes(&self) -> usize {
        match self {
            CertSystem::ContinuousModes(fs) => fs.len(),
            CertSystem::DiscreteModes(ms) => ms.len(),
        }
    }
}

/// A positive semidefinite matrix `Q` over a monomial basis `z` witnessing
/// `target = z' Q z`, where the target may include a negative
/// `eps * (x1^2+...+xn^2)^shift` term recorded in `shift`.
#[derive(Clone, PartialEq, Debug)]
pub struct GramCertificate {
    pub label: String,
    pub basis: Vec<Monomial>,
    pub matrix: DMatrix<f64>,
    /// Smallest eigenvalue of the Gram matrix on its supporting face: the
    /// full spectrum minimum when the matrix is definite, otherwise the
    /// smallest eigenvalue kept after dropping the structural kernel.
    pub margin: f64,
    /// `(eps, exponent)` of the positive-definiteness shift baked into the
    /// certified target, if any.
    pub shift: Option<(f64, u32)>,
}

impl GramCertificate {
    /// The polynomial `z' Q z` this matrix actually represents.
    pub fn reconstruct(&self, n_vars: usize) -> Polynomial {
        let mut terms = Vec::new();
        for i in 0..self.basis.len() {
            for j in i..self.basis.len() {
                let m = self.basis[i].mul(&self.basis[j]);
                let w = if i == j { 1.0 } else { 2.0 };
                terms.push((m, w * self.matrix[(i, j)]));
            }
        }
        Polynomial::from_terms(n_vars, terms)
    }

    /// The recorded shift as a polynomial, to be subtracted from the raw
    /// target before comparing against [`Self::reconstruct`].
    pub fn shift_polynomial(&self, n_vars: usize) -> Polynomial {
        match self.shift {
            None => Polynomial::zero(n_vars),
            Some((eps, e)) => Polynomial::sum_of_squares_power(n_vars, e).scale(eps),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            label: self.label.clone(),
            basis: self.basis.clone(),
            matrix: &self.matrix * s,
            margin: self.margin * s,
            shift: self.shift.map(|(eps, e)| (eps * s, e)),
        }
    }
}

/// A verified-or-verifiable Lyapunov certificate: the candidate `v`, the
/// Gram data for the condition on `v` (position 0) and for each mode's
/// decrease condition (positions 1..), and the system it certifies.
#[derive(Clone, PartialEq, Debug)]
pub struct LyapunovCertificate {
    pub v: Polynomial,
    pub mode: SearchMode,
    pub eps: f64,
    pub grams: Vec<GramCertificate>,
    pub system: CertSystem,
}

impl LyapunovCertificate {
    pub fn margins(&self) -> Vec<f64> {
        self.grams.iter().map(|g| g.margin).collect()
    }
}

/// A power certificate `w = base^(2k+2)` (shifted base `v+1` in the planar
/// construction) whose derivative inequality carries Gram certificates.
#[derive(Clone, PartialEq, Debug)]
pub struct PowerCertificate {
    pub k: u32,
    pub base: Polynomial,
    pub w: Polynomial,
    pub planar: bool,
    pub gram_w: GramCertificate,
    pub gram_wdot: Vec<GramCertificate>,
    pub system: CertSystem,
}

impl PowerCertificate {
    /// The polynomial actually raised to the power `2k+2`.
    pub fn effective_base(&self) -> Polynomial {
        if self.planar {
            &self.base + &Polynomial::constant(self.base.n_vars(), 1.0)
        } else {
            self.base.clone()
        }
    }
}

// --- JSON forms -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PolyDto {
    n_vars: usize,
    text: String,
}

impl PolyDto {
    fn from(p: &Polynomial) -> Self {
        Self {
            n_vars: p.n_vars(),
            text: p.to_string(),
        }
    }

    fn parse(&self) -> Result<Polynomial, String> {
        crate::poly::parse_in(&self.text, self.n_vars).map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct GramDto {
    label: String,
    basis: Vec<Vec<u32>>,
    /// Row-major entries.
    matrix: Vec<f64>,
    dim: usize,
    margin: f64,
    shift: Option<(f64, u32)>,
}

impl GramDto {
    fn from(g: &GramCertificate) -> Self {
        Self {
            label: g.label.clone(),
            basis: g.basis.iter().map(|m| m.exponents().to_vec()).collect(),
            matrix: g.matrix.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
            dim: g.matrix.nrows(),
            margin: g.margin,
            shift: g.shift,
        }
    }

    fn build(&self) -> Result<GramCertificate, String> {
        if self.matrix.len() != self.dim * self.dim {
            return Err("gram matrix size disagrees with dim".into());
        }
        Ok(GramCertificate {
            label: self.label.clone(),
            basis: self.basis.iter().cloned().map(Monomial::new).collect(),
            matrix: DMatrix::from_row_slice(self.dim, self.dim, &self.matrix),
            margin: self.margin,
            shift: self.shift,
        })
    }
}

#[derive(Serialize, Deserialize)]
enum SystemDto {
    Continuous { modes: Vec<Vec<PolyDto>> },
    Discrete { modes: Vec<Vec<Vec<f64>>> },
}

impl SystemDto {
    fn from(s: &CertSystem) -> Self {
        match s {
            CertSystem::ContinuousModes(fs) => SystemDto::Continuous {
                modes: fs
                    .iter()
                    .map(|f| f.components().iter().map(PolyDto::from).collect())
                    .collect(),
            },
            CertSystem::DiscreteModes(ms) => SystemDto::Discrete {
                modes: ms.iter().map(|m| m.rows().to_vec()).collect(),
            },
        }
    }

    fn build(&self) -> Result<CertSystem, String> {
        match self {
            SystemDto::Continuous { modes } => {
                let fs = modes
                    .iter()
                    .map(|c| {
                        let comps = c.iter().map(PolyDto::parse).collect::<Result<_, _>>()?;
                        VectorField::new(comps).map_err(|e| e.to_string())
                    })
                    .collect::<Result<_, _>>()?;
                Ok(CertSystem::ContinuousModes(fs))
            }
            SystemDto::Discrete { modes } => {
                let ms = modes
                    .iter()
                    .map(|rows| LinearSystem::new(rows.clone()).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
                Ok(CertSystem::DiscreteModes(ms))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LyapunovDto {
    v: PolyDto,
    mode: SearchMode,
    eps: f64,
    grams: Vec<GramDto>,
    system: SystemDto,
}

#[derive(Serialize, Deserialize)]
struct PowerDto {
    k: u32,
    base: PolyDto,
    w: PolyDto,
    planar: bool,
    gram_w: GramDto,
    gram_wdot: Vec<GramDto>,
    system: SystemDto,
}

/// Tagged JSON wrapper so one file format covers both certificate kinds.
#[derive(Serialize, Deserialize)]
enum CertificateDto {
    Lyapunov(LyapunovDto),
    Power(PowerDto),
}

/// Either certificate kind, for serialization and the command-line verify
/// path.
#[derive(Clone, PartialEq, Debug)]
pub enum Certificate {
    Lyapunov(LyapunovCertificate),
    Power(PowerCertificate),
}

impl Certificate {
    pub fn system(&self) -> &CertSystem {
        match self {
            Certificate::Lyapunov(c) => &c.system,
            Certificate::Power(c) => &c.system,
        }
    }

    pub fn to_json(&self) -> String {
        let dto = match self {
            Certificate::Lyapunov(c) => CertificateDto::Lyapunov(LyapunovDto {
                v: PolyDto::from(&c.v),
                mode: c.mode,
                eps: c.eps,
                grams: c.grams.iter().map(GramDto::from).collect(),
                system: SystemDto::from(&c.system),
            }),
            Certificate::Power(c) => CertificateDto::Power(PowerDto {
                k: c.k,
                base: PolyDto::from(&c.base),
                w: PolyDto::from(&c.w),
                planar: c.planar,
                gram_w: GramDto::from(&c.gram_w),
                gram_wdot: c.gram_wdot.iter().map(GramDto::from).collect(),
                system: SystemDto::from(&c.system),
            }),
        };
        serde_json::to_string_pretty(&dto).expect("certificate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let dto: CertificateDto = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match dto {
            CertificateDto::Lyapunov(d) => Ok(Certificate::Lyapunov(LyapunovCertificate {
                v: d.v.parse()?,
                mode: d.mode,
                eps: d.eps,
                grams: d.grams.iter().map(GramDto::build).collect::<Result<_, _>>()?,
                system: d.system.build()?,
            })),
            CertificateDto::Power(d) => Ok(Certificate::Power(PowerCertificate {
                k: d.k,
                base: d.base.parse()?,
                w: d.w.parse()?,
                planar: d.planar,
                gram_w: d.gram_w.build()?,
                gram_wdot: d
                    .gram_wdot
                    .iter()
                    .map(GramDto::build)
                    .collect::<Result<_, _>>()?,
                system: d.system.build()?,
            })),
        }
    }
}
