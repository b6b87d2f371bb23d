//! Fock basis and many-body operators of the periodic Hubbard chain.
//!
//! Occupations are stored as bitstrings with site 0 in the least significant
//! bit. Fermionic signs follow a Jordan-Wigner ordering in which all spin-up
//! modes `0..L` precede all spin-down modes `L..2L`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseOperator};

/// Largest chain handled; the enumeration walks all `2^L` bitstrings per spin.
pub const MAX_SITES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub n_up: usize,
    pub n_down: usize,
    /// Hopping energy t0 in eV.
    pub t0: f64,
    /// On-site repulsion U in eV.
    pub u: f64,
    /// Lattice constant in Å.
    pub a: f64,
    pub periodic: bool,
}

impl LatticeSpec {
    /// Half-filled, S_z = 0 chain.
    pub fn half_filled(sites: usize, t0: f64, u: f64, a: f64) -> Self {
        Self {
            sites,
            n_up: sites / 2,
            n_down: sites - sites / 2,
            t0,
            u,
            a,
            periodic: true,
        }
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }

    pub fn with_lattice_constant(self, a: f64) -> Self {
        Self { a, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 sites, got {}", self.sites)));
        }
        if self.sites > MAX_SITES {
            return Err(Error::InvalidSpec(format!(
                "{} sites exceeds the supported maximum of {MAX_SITES}",
                self.sites
            )));
        }
        if self.n_up > self.sites || self.n_down > self.sites {
            return Err(Error::InvalidSpec(format!(
                "particle count ({} up, {} down) exceeds {} sites",
                self.n_up, self.n_down, self.sites
            )));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidSpec(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(Error::InvalidSpec(format!("U must be non-negative, got {}", self.u)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "lattice constant must be positive, got {}",
                self.a
            )));
        }
        Ok(())
    }
}

/// Occupation bitstrings of one spin species, sorted ascending.
#[derive(Debug, Clone)]
pub struct SpinSector {
    configs: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl SpinSector {
    fn enumerate(sites: usize, particles: usize) -> Self {
        let configs: Vec<u64> = (0u64..1 << sites)
            .filter(|c| c.count_ones() as usize == particles)
            .collect();
        let lookup = configs.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { configs, lookup }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn index_of(&self, config: u64) -> Option<usize> {
        self.lookup.get(&config).copied()
    }
}

/// Product basis of spin-up and spin-down occupations.
///
/// The global index of `(up, down)` is `up * n_down_configs + down`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    up: SpinSector,
    down: SpinSector,
}

impl FockBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.up.len() * self.down.len()
    }

    pub fn up(&self) -> &SpinSector {
        &self.up
    }

    pub fn down(&self) -> &SpinSector {
        &self.down
    }

    pub fn index(&self, up_index: usize, down_index: usize) -> usize {
        up_index * self.down.len() + down_index
    }

    /// `(up bitstring, down bitstring)` of a global index.
    pub fn configs(&self, index: usize) -> (u64, u64) {
        let nd = self.down.len();
        (self.up.configs[index / nd], self.down.configs[index % nd])
    }

    pub fn find(&self, up: u64, down: u64) -> Option<usize> {
        Some(self.index(self.up.index_of(up)?, self.down.index_of(down)?))
    }
}

pub fn build_basis(spec: &LatticeSpec) -> Result<FockBasis> {
    spec.validate()?;
    Ok(FockBasis {
        sites: spec.sites,
        up: SpinSector::enumerate(spec.sites, spec.n_up),
        down: SpinSector::enumerate(spec.sites, spec.n_down),
    })
}

/// Applies `ĉ_mode` to a global occupation word, returning the new word and sign.
fn annihilate(word: u64, mode: usize) -> Option<(u64, f64)> {
    if word >> mode & 1 == 0 {
        return None;
    }
    let below = (word & ((1u64 << mode) - 1)).count_ones();
    Some((word & !(1u64 << mode), if below.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

fn create(word: u64, mode: usize) -> Option<(u64, f64)> {
    if word >> mode & 1 == 1 {
        return None;
    }
    let below = (word & ((1u64 << mode) - 1)).count_ones();
    Some((word | (1u64 << mode), if below.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

/// The phase-free forward hopping kernel `K = Σ_{jσ} ĉ†_{jσ} ĉ_{j+1,σ}`.
///
/// With periodic boundaries the bond `L-1 → 0` is included; for `L = 2` that
/// bond coincides with `0 → 1` and is counted twice.
pub fn build_hop_forward(basis: &FockBasis, spec: &LatticeSpec) -> Result<SparseOperator> {
    check_basis(basis, spec)?;
    let l = spec.sites;
    if l == 2 && spec.periodic {
        log::warn!("periodic L = 2 chain: the single bond is counted twice in the hopping sum");
    }
    let bonds = if spec.periodic { l } else { l - 1 };
    let mut triplets = Vec::new();
    for g in 0..basis.dim() {
        let (up, down) = basis.configs(g);
        let word = up | down << l;
        for offset in [0, l] {
            for j in 0..bonds {
                let src = offset + (j + 1) % l;
                let dst = offset + j;
                let Some((w1, s1)) = annihilate(word, src) else {
                    continue;
                };
                let Some((w2, s2)) = create(w1, dst) else { continue };
                let mask = (1u64 << l) - 1;
                let target = basis
                    .find(w2 & mask, w2 >> l)
                    .expect("hopping conserves particle number per spin");
                triplets.push((target, g, Complex64::new(s1 * s2, 0.0)));
            }
        }
    }
    SparseOperator::from_triplets(basis.dim(), triplets)
}

/// Compressed rows of `±1` entries.
#[derive(Debug, Clone)]
struct SignRows {
    row_ptr: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl SignRows {
    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut row_ptr = vec![0];
        let mut entries = Vec::new();
        for r in rows {
            entries.extend(r);
            row_ptr.push(entries.len());
        }
        Self { row_ptr, entries }
    }

    #[inline]
    fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }
}

/// Forward hopping restricted to one spin species, as sparse rows over
/// sector indices, together with its transpose.
#[derive(Debug, Clone)]
struct SectorHopping {
    forward: SignRows,
    backward: SignRows,
}

impl SectorHopping {
    fn build(sector: &SpinSector, sites: usize, periodic: bool) -> Self {
        let bonds = if periodic { sites } else { sites - 1 };
        let mut forward = vec![Vec::new(); sector.len()];
        let mut backward = vec![Vec::new(); sector.len()];
        for (col, &word) in sector.configs().iter().enumerate() {
            for j in 0..bonds {
                let Some((w1, s1)) = annihilate(word, (j + 1) % sites) else {
                    continue;
                };
                let Some((w2, s2)) = create(w1, j) else { continue };
                let row = sector.index_of(w2).expect("hopping conserves particle number");
                forward[row].push((col as u32, s1 * s2));
                backward[col].push((row as u32, s1 * s2));
            }
        }
        Self {
            forward: SignRows::from_rows(forward),
            backward: SignRows::from_rows(backward),
        }
    }
}

/// `K = K_↑ ⊗ 1 + 1 ⊗ K_↓`: with up modes ordered before down modes the
/// string of a down hop never crosses an up mode, so each factor only sees
/// its own spin. Applying the factors keeps memory access contiguous.
#[derive(Debug, Clone)]
struct FactorizedHopping {
    up: SectorHopping,
    down: SectorHopping,
    n_down: usize,
}

impl FactorizedHopping {
    fn new(basis: &FockBasis, periodic: bool) -> Self {
        Self {
            up: SectorHopping::build(basis.up(), basis.sites(), periodic),
            down: SectorHopping::build(basis.down(), basis.sites(), periodic),
            n_down: basis.down().len(),
        }
    }

    fn apply(&self, x: &[Complex64], kx: &mut [Complex64], kdx: &mut [Complex64]) {
        let nd = self.n_down;
        for (u, (y, yd)) in kx.chunks_exact_mut(nd).zip(kdx.chunks_exact_mut(nd)).enumerate() {
            let xu = &x[u * nd..(u + 1) * nd];
            for d in 0..nd {
                let mut f = Complex64::new(0.0, 0.0);
                for &(c, s) in self.down.forward.row(d) {
                    f += xu[c as usize] * s;
                }
                let mut b = Complex64::new(0.0, 0.0);
                for &(c, s) in self.down.backward.row(d) {
                    b += xu[c as usize] * s;
                }
                y[d] = f;
                yd[d] = b;
            }
            for &(c, s) in self.up.forward.row(u) {
                let xc = &x[c as usize * nd..(c as usize + 1) * nd];
                y.iter_mut().zip(xc).for_each(|(a, b)| *a += b * s);
            }
            for &(c, s) in self.up.backward.row(u) {
                let xc = &x[c as usize * nd..(c as usize + 1) * nd];
                yd.iter_mut().zip(xc).for_each(|(a, b)| *a += b * s);
            }
        }
    }
}

/// Counts doubly occupied sites; the interaction term without its `U` prefactor.
pub fn build_doublon_operator(basis: &FockBasis, spec: &LatticeSpec) -> Result<SparseOperator> {
    check_basis(basis, spec)?;
    Ok(SparseOperator::diagonal(&doublon_counts(basis)))
}

fn doublon_counts(basis: &FockBasis) -> Vec<f64> {
    (0..basis.dim())
        .map(|g| {
            let (up, down) = basis.configs(g);
            (up & down).count_ones() as f64
        })
        .collect()
}

/// `H(Φ) = -t0 (e^{-iΦ} K + e^{iΦ} K†) + U·D`.
pub fn assemble_hamiltonian(
    hop_forward: &SparseOperator,
    doublon: &SparseOperator,
    spec: &LatticeSpec,
    phi: f64,
) -> Result<SparseOperator> {
    if !phi.is_finite() {
        return Err(Error::NonFinite("Peierls phase"));
    }
    doublon.check_dim(hop_forward.dim())?;
    let backward = hop_forward.adjoint();
    let fwd = -spec.t0 * Complex64::from_polar(1.0, -phi);
    SparseOperator::linear_combination(&[
        (fwd, hop_forward),
        (fwd.conj(), &backward),
        (Complex64::new(spec.u, 0.0), doublon),
    ])
}

fn check_basis(basis: &FockBasis, spec: &LatticeSpec) -> Result<()> {
    spec.validate()?;
    if basis.sites() != spec.sites
        || basis.up().configs().first().map(|c| c.count_ones() as usize) != Some(spec.n_up)
        || basis.down().configs().first().map(|c| c.count_ones() as usize) != Some(spec.n_down)
    {
        return Err(Error::InvalidSpec("basis was built for a different lattice".into()));
    }
    Ok(())
}

/// Basis plus the phase-free operators of one chain.
///
/// The hopping kernel is built once; every Hamiltonian evaluation only
/// rescales it by phase factors.
#[derive(Debug, Clone)]
pub struct HubbardModel {
    spec: LatticeSpec,
    basis: FockBasis,
    hop_forward: SparseOperator,
    hopping: FactorizedHopping,
    doublon: SparseOperator,
    doublon_diag: Vec<f64>,
}

impl HubbardModel {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        let basis = build_basis(&spec)?;
        let hop_forward = build_hop_forward(&basis, &spec)?;
        let doublon = build_doublon_operator(&basis, &spec)?;
        let doublon_diag = doublon_counts(&basis);
        let hopping = FactorizedHopping::new(&basis, spec.periodic);
        Ok(Self {
            spec,
            basis,
            hop_forward,
            hopping,
            doublon,
            doublon_diag,
        })
    }

    /// Same chain and operators with different interaction strength (eV).
    pub fn with_u(&self, u: f64) -> Result<Self> {
        let spec = self.spec.with_u(u);
        spec.validate()?;
        Ok(Self { spec, ..self.clone() })
    }

    /// Same chain with a different lattice constant (Å).
    pub fn with_lattice_constant(&self, a: f64) -> Result<Self> {
        let spec = self.spec.with_lattice_constant(a);
        spec.validate()?;
        Ok(Self { spec, ..self.clone() })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn hop_forward(&self) -> &SparseOperator {
        &self.hop_forward
    }

    pub fn doublon(&self) -> &SparseOperator {
        &self.doublon
    }

    pub fn doublon_diagonal(&self) -> &[f64] {
        &self.doublon_diag
    }

    /// Explicit `H(Φ)`.
    pub fn hamiltonian(&self, phi: f64) -> Result<SparseOperator> {
        assemble_hamiltonian(&self.hop_forward, &self.doublon, &self.spec, phi)
    }

    /// Matrix-free `H(Φ)`.
    pub fn hamiltonian_at(&self, phi: f64) -> HamiltonianAt<'_> {
        HamiltonianAt { model: self, phi }
    }

    /// `kx = K x`, `kdx = K† x`.
    pub fn apply_hopping(&self, x: &[Complex64], kx: &mut [Complex64], kdx: &mut [Complex64]) {
        self.hopping.apply(x, kx, kdx);
    }

    /// `out = c_fwd·kx + c_bwd·kdx + U·D x` given precomputed hopping products.
    pub fn combine(
        &self,
        x: &[Complex64],
        kx: &[Complex64],
        kdx: &[Complex64],
        c_fwd: Complex64,
        c_bwd: Complex64,
        out: &mut [Complex64],
    ) {
        let u = self.spec.u;
        for i in 0..out.len() {
            out[i] = c_fwd * kx[i] + c_bwd * kdx[i] + x[i] * (u * self.doublon_diag[i]);
        }
    }
}

/// `H(Φ)` applied without assembling a matrix.
pub struct HamiltonianAt<'a> {
    model: &'a HubbardModel,
    phi: f64,
}

impl LinearOperator for HamiltonianAt<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = x.len();
        let mut kx = vec![Complex64::new(0.0, 0.0); n];
        let mut kdx = vec![Complex64::new(0.0, 0.0); n];
        self.model.apply_hopping(x, &mut kx, &mut kdx);
        let fwd = -self.model.spec.t0 * Complex64::from_polar(1.0, -self.phi);
        self.model.combine(x, &kx, &kdx, fwd, fwd.conj(), y);
    }
}
