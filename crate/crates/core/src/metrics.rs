//! Cost accounting: weighted operator counts, work units, textbook
//! multigrid efficiency, the memory model and FMG accuracy ratios.
//!
//! One work unit (WU) is one application of the full discrete Stokes
//! operator, ten scalar blocks: three for `A`, six for `B` and `B^T`, one
//! for `C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{h_norm, mean_zero_project, StokesVector};
use crate::operators::OperatorTag;

/// Published single-thread lattice-update rate of the smoother, Lups/s.
pub const MU_SM: f64 = 23.9e6;
/// Published cost of one `A2` smoothing step relative to one for `A1`.
pub const MU_D: f64 = 3.25;
/// Scalar blocks in one work unit.
pub const WU_BLOCKS: u32 = 10;
/// Work of one Uzawa smoothing step including its residual share, in WU.
pub const UZAWA_WU: f64 = 13.0 / 10.0;

/// Operator evaluations per kind, already weighted to the finest level.
/// `b` counts `B` and `B^T` together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OpTotals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
}

impl OpTotals {
    /// `3 mu A + 3 B + C + M`, in scalar blocks, with `mu` the relative cost
    /// of the velocity block.
    pub fn total(&self, mu: f64) -> f64 {
        3.0 * mu * self.a + 3.0 * self.b + self.c + self.m
    }
}

/// Operator evaluation counts at level 6 of the unit cube as published for
/// the Schur-complement CG solver: (Laplace, symmetric gradient).
pub const PUBLISHED_SCG_L6: (OpTotals, OpTotals) = (
    OpTotals {
        a: 463.0,
        b: 72.0,
        c: 36.0,
        m: 31.0,
    },
    OpTotals {
        a: 273.0,
        b: 44.0,
        c: 22.0,
        m: 16.0,
    },
);
/// Same for preconditioned MINRES.
pub const PUBLISHED_PMINRES_L6: (OpTotals, OpTotals) = (
    OpTotals {
        a: 305.0,
        b: 136.0,
        c: 68.0,
        m: 68.0,
    },
    OpTotals {
        a: 282.0,
        b: 126.0,
        c: 63.0,
        m: 63.0,
    },
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpCountReport {
    /// Raw counts `[level][tag]`, tags in `OperatorTag::ALL` order.
    pub raw: Vec<[u64; 6]>,
    pub finest: usize,
    /// First level included in the weighted sums.
    pub from_level: usize,
    /// `sum_l 8^(l-L) n_l` per tag.
    pub weighted: [f64; 6],
}

impl OpCountReport {
    pub fn get(&self, tag: OperatorTag) -> f64 {
        self.weighted[tag.index()]
    }

    pub fn totals(&self) -> OpTotals {
        OpTotals {
            a: self.get(OperatorTag::A1) + self.get(OperatorTag::A2),
            b: self.get(OperatorTag::B) + self.get(OperatorTag::Bt),
            c: self.get(OperatorTag::C),
            m: self.get(OperatorTag::M),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = Vec::new();
        for (l, c) in self.raw.iter().enumerate() {
            let mut row = vec![l.to_string()];
            row.extend(c.iter().map(|v| v.to_string()));
            rows.push(row);
        }
        let mut row = vec![format!(
            "weighted (levels {}..={})",
            self.from_level, self.finest
        )];
        row.extend(self.weighted.iter().map(|v| format!("{v:.2}")));
        rows.push(row);
        let mut headers = vec!["level".to_string()];
        headers.extend(OperatorTag::ALL.iter().map(|t| format!("{t} (count)")));
        markdown_table(&headers, &rows)
    }
}

/// Weights the counts of levels `from_level..=finest` by `8^(l - finest)`.
pub fn weighted_op_count(
    raw: &[[u64; 6]],
    finest: usize,
    from_level: usize,
) -> Result<OpCountReport> {
    if finest >= raw.len() {
        return Err(Error::LevelMismatch {
            expected: raw.len().saturating_sub(1),
            found: finest,
        });
    }
    let mut weighted = [0.0; 6];
    for (l, counts) in raw.iter().enumerate().take(finest + 1).skip(from_level) {
        let w = 8f64.powi(l as i32 - finest as i32);
        for (acc, &c) in weighted.iter_mut().zip(counts) {
            *acc += w * c as f64;
        }
    }
    Ok(OpCountReport {
        raw: raw.to_vec(),
        finest,
        from_level,
        weighted,
    })
}

/// Closed-form weighted counts of `n_i` saddle `Vvar(n, n)` cycles on
/// levels `0..=finest`. `m` is zero: the mass matrix only appears in the
/// coarse solver.
pub fn predict_umg_counts(finest: usize, n_i: usize, n: usize) -> OpTotals {
    predict_umg_counts_from(finest, n_i, n, 0)
}

/// As [`predict_umg_counts`], summing only levels `from_level..=finest`.
pub fn predict_umg_counts_from(finest: usize, n_i: usize, n: usize, from_level: usize) -> OpTotals {
    let mut a = 0.0;
    let mut b = 0.0;
    for l in from_level..=finest {
        let w = 8f64.powi(l as i32 - finest as i32);
        let s = (n + 2 * (finest - l)) as f64;
        a += w * (4.0 * s + 1.0);
        b += w * (4.0 * s + 2.0);
    }
    let ni = n_i as f64;
    OpTotals {
        a: ni * a,
        b: ni * b,
        c: ni * b / 2.0,
        m: 0.0,
    }
}

/// Work units of FMG with one `Vvar(n, n)` cycle per level:
/// `sum_{k<K} 8^-k sum_{l=1..L} 8^(l-L) (2 (n + 2(L-l)) wu + 1)`.
pub fn e_tme(n: usize, wu_per_smooth: f64, levels: usize, truncation: usize) -> f64 {
    let inner: f64 = (1..=levels)
        .map(|l| {
            let m = (levels - l) as f64;
            8f64.powf(-m) * (2.0 * (n as f64 + 2.0 * m) * wu_per_smooth + 1.0)
        })
        .sum();
    let outer: f64 = (0..truncation).map(|k| 8f64.powi(-(k as i32))).sum();
    outer * inner
}

/// `e_tme` for FMG-`Vvar(2,2)` in the limit of a deep hierarchy.
pub fn e_tme_default() -> f64 {
    e_tme(2, UZAWA_WU, 64, 64)
}

/// Parallel textbook efficiency `t n_c mu_sm / n`.
pub fn e_partme(t: f64, n_c: usize, n: f64, mu_sm: f64) -> Result<f64> {
    if !(t > 0.0 && n > 0.0 && mu_sm > 0.0) || n_c == 0 {
        return Err(Error::InvalidArgument(format!(
            "parallel efficiency needs positive inputs (t={t}, n_c={n_c}, n={n}, mu_sm={mu_sm})"
        )));
    }
    Ok(t * n_c as f64 * mu_sm / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmeReport {
    pub wu_blocks: u32,
    pub e_tme: f64,
    pub e_partme: Option<f64>,
    pub mu_sm: f64,
    pub n_c: usize,
    pub t: Option<f64>,
    pub n: f64,
}

impl TmeReport {
    pub fn new(n: f64, t: Option<f64>, n_c: usize, mu_sm: f64) -> Result<Self> {
        let e_partme = t.map(|t| e_partme(t, n_c, n, mu_sm)).transpose()?;
        Ok(TmeReport {
            wu_blocks: WU_BLOCKS,
            e_tme: e_tme_default(),
            e_partme,
            mu_sm,
            n_c,
            t,
            n,
        })
    }
}

/// Bytes for unknowns, right-hand side and residual on every level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryModel {
    pub n_u: f64,
    pub n_p: f64,
    pub finest: usize,
    /// The finest-level right-hand side is assembled when needed instead of
    /// stored.
    pub on_the_fly: bool,
    pub bytes: f64,
}

impl MemoryModel {
    pub fn gib(&self) -> f64 {
        self.bytes / f64::from(1u32 << 30)
    }

    pub fn tib(&self) -> f64 {
        self.gib() / 1024.0
    }
}

/// `3 (n_u + n_p) sum_{l=0..L} 8^(l-L) 8` bytes, or with `on_the_fly`
/// `2 (n_u + n_p) 8 + 3 (n_u + n_p) sum_{l<L} 8^(l-L) 8`.
pub fn memory_model(n_u: f64, n_p: f64, finest: usize, on_the_fly: bool) -> MemoryModel {
    let n = n_u + n_p;
    let sum_below: f64 = (0..finest)
        .map(|l| 8f64.powi(l as i32 - finest as i32))
        .sum();
    let bytes = if on_the_fly {
        2.0 * n * 8.0 + 3.0 * n * sum_below * 8.0
    } else {
        3.0 * n * (sum_below + 1.0) * 8.0
    };
    MemoryModel {
        n_u,
        n_p,
        finest,
        on_the_fly,
        bytes,
    }
}

/// Unknowns of the unit cube at level `l` (`2^(l+2)` intervals per axis):
/// three velocity components per interior node and one pressure per node.
pub fn unit_cube_dofs(l: usize) -> (f64, f64) {
    let n = (1u64 << (l + 2)) as f64;
    (3.0 * (n - 1.0).powi(3), (n + 1.0).powi(3))
}

/// `n_total^D / n_total^Lap` with velocity-block cost factor `mu_d`.
pub fn formulation_ratio(laplace: &OpTotals, dop: &OpTotals, mu_d: f64) -> Result<f64> {
    if !(mu_d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cost factor must be positive, got {mu_d}"
        )));
    }
    Ok(dop.total(mu_d) / laplace.total(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub level: usize,
    pub total_error: f64,
    pub discretization_error: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
}

/// `h_norm` of `interpolant - x`, pressure difference shifted to zero
/// weighted mean.
pub fn error_h_norm(
    interpolant: &StokesVector,
    x: &StokesVector,
    h: f64,
    weights: &[f64],
) -> Result<f64> {
    let mut e = interpolant.clone();
    crate::fields::axpy(-1.0, x, &mut e)?;
    mean_zero_project(e.p_mut(), weights)?;
    h_norm(&e, h)
}

/// Total error of `numeric` over the discretization error of `reference`,
/// both measured against the nodal interpolant of the exact solution.
pub fn gamma_ratio(
    interpolant: &StokesVector,
    numeric: &StokesVector,
    reference: &StokesVector,
    h: f64,
    weights: &[f64],
) -> Result<AccuracyRow> {
    let total_error = error_h_norm(interpolant, numeric, h, weights)?;
    let discretization_error = error_h_norm(interpolant, reference, h, weights)?;
    if !(discretization_error > 0.0) {
        return Err(Error::InvalidArgument(
            "discretization error vanishes; gamma is undefined".into(),
        ));
    }
    Ok(AccuracyRow {
        level: numeric.level(),
        total_error,
        discretization_error,
        gamma: total_error / discretization_error,
    })
}

/// GitHub-style table.
pub fn markdown_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n|", headers.join(" | "));
    for _ in headers {
        s.push_str("---|");
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weighting() {
        let mut raw = vec![[0u64; 6]; 3];
        raw[2][0] = 5;
        raw[1][2] = 8;
        raw[0][2] = 64;
        let r = weighted_op_count(&raw, 2, 0).unwrap();
        assert_eq!(r.get(OperatorTag::A1), 5.0);
        assert_eq!(r.get(OperatorTag::B), 2.0);
        let r = weighted_op_count(&raw, 2, 1).unwrap();
        assert_eq!(r.get(OperatorTag::B), 1.0);
        assert!(weighted_op_count(&raw, 3, 0).is_err());
        assert!(r.to_markdown().contains("| 2 | 5 |"));
    }

    #[test]
    fn umg_prediction() {
        let p = predict_umg_counts(6, 8, 3);
        assert!((p.a - 129.31).abs() < 0.01, "{}", p.a);
        assert!((p.b - 138.45).abs() < 0.01, "{}", p.b);
        assert!((p.c - 69.22).abs() < 0.01, "{}", p.c);
        let p0 = predict_umg_counts(0, 1, 3);
        assert_eq!((p0.a, p0.b), (13.0, 14.0));
    }

    #[test]
    fn tme() {
        assert!((e_tme_default() - 9.07).abs() < 0.01);
        // geometric-series oracle for the zero-smoothing limit
        assert!((e_tme(2, 0.0, 64, 64) - 64.0 / 49.0).abs() < 1e-12);
        assert!((e_tme(2, 1.3, 1, 1) - 6.2).abs() < 1e-12);
    }

    #[test]
    fn partme() {
        assert!((e_partme(2.0, 1, 2.0 * MU_SM, MU_SM).unwrap() - 1.0).abs() < 1e-15);
        let n = 8.2e6;
        let t = 43.43 * n / MU_SM;
        assert!((e_partme(t, 1, n, MU_SM).unwrap() - 43.43).abs() < 1e-10);
        let a = e_partme(3.0, 4, 1e6, MU_SM).unwrap();
        let b = e_partme(3.0, 8, 1e6, MU_SM).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9);
        assert!(e_partme(0.0, 1, 1.0, 1.0).is_err());
        assert!(TmeReport::new(1e6, None, 1, MU_SM)
            .unwrap()
            .e_partme
            .is_none());
    }

    #[test]
    fn memory() {
        let m0 = memory_model(30.0, 10.0, 0, false);
        assert_eq!(m0.bytes, 3.0 * 40.0 * 8.0);
        let (u, p) = unit_cube_dofs(7);
        let m = memory_model(u, p, 7, false);
        assert!((m.gib() - 13.63).abs() < 0.01 * 13.63, "{}", m.gib());
        let (u2, p2) = unit_cube_dofs(2);
        assert_eq!(u2 + p2, (3 * 15usize.pow(3) + 17usize.pow(3)) as f64);
    }

    #[test]
    fn ratios() {
        let umg = predict_umg_counts(6, 8, 3);
        assert!((formulation_ratio(&umg, &umg, MU_D).unwrap() - 2.00).abs() < 0.02);
        let (lap, d) = PUBLISHED_SCG_L6;
        assert!((formulation_ratio(&lap, &d, MU_D).unwrap() - 1.69).abs() < 0.02);
        let (lap, d) = PUBLISHED_PMINRES_L6;
        assert!((formulation_ratio(&lap, &d, MU_D).unwrap() - 2.23).abs() < 0.02);
        assert_eq!(formulation_ratio(&lap, &lap, 1.0).unwrap(), 1.0);
        assert!(formulation_ratio(&lap, &lap, 0.0).is_err());
    }

    #[test]
    fn gamma_of_the_reference_is_one() {
        let i = StokesVector::from_parts(0, &[1.0, 2.0, 3.0], &[4.0]).unwrap();
        let x = StokesVector::from_parts(0, &[1.5, 2.0, 3.0], &[0.0]).unwrap();
        let r = gamma_ratio(&i, &x, &x, 0.5, &[1.0]).unwrap();
        assert!((r.gamma - 1.0).abs() < 1e-15);
        assert!(gamma_ratio(&i, &x, &i, 0.5, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn memory_is_monotone(n_u in 1.0f64..1e9, n_p in 1.0f64..1e9, l in 0usize..10, d in 1.0f64..1e6) {
            for fly in [false, true] {
                let m = memory_model(n_u, n_p, l, fly).bytes;
                prop_assert!(memory_model(n_u + d, n_p, l, fly).bytes > m);
                prop_assert!(memory_model(n_u, n_p + d, l, fly).bytes > m);
                prop_assert!(memory_model(n_u, n_p, l + 1, fly).bytes >= m);
            }
        }

        #[test]
        fn weighted_sum_is_exact(counts in proptest::collection::vec(0u64..1000, 4)) {
            let raw: Vec<[u64; 6]> = counts.iter().map(|&c| [c, 0, c, 0, 0, 0]).collect();
            let r = weighted_op_count(&raw, 3, 0).unwrap();
            let expected: f64 = counts.iter().enumerate().map(|(l, &c)| c as f64 / 8f64.powi(3 - l as i32)).sum();
            prop_assert!((r.get(OperatorTag::A1) - expected).abs() < 1e-12);
        }
    }
}
