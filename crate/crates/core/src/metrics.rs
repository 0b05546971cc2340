//! Earth mover's distance between a squeezed distribution and the ideal
//! one-hot ridge `D(v, b) = delta(v - q(b))`.
//!
//! Scores are in Hz: bin distances are multiplied by the bin width.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{oracle_if, OracleId};
use crate::synchrosqueeze::{TfDistribution, VAxis};

/// Largest histogram accepted by [`emd_lp_oracle`].
pub const ORACLE_MAX_LEN: usize = 32;

/// One-hot ridge on a `(v, b)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealDistribution {
    /// Shape `[nv, nb]`; every column sums to 1, or to 0 where `q(b)` is
    /// outside the grid.
    pub d: Array2<f64>,
    pub v_axis: VAxis,
    /// Spatial indices whose oracle frequency fell outside the grid.
    pub out_of_band: Vec<usize>,
}

/// Builds `D` from oracle frequencies `q[b]`.
pub fn ideal_distribution(q: &[f64], v_axis: VAxis) -> IdealDistribution {
    let mut d = Array2::zeros((v_axis.count(), q.len()));
    let mut out_of_band = Vec::new();
    for (b, &f) in q.iter().enumerate() {
        match v_axis.index(f) {
            Some(k) => d[[k, b]] = 1.0,
            None => out_of_band.push(b),
        }
    }
    IdealDistribution {
        d,
        v_axis,
        out_of_band,
    }
}

/// `D` for a 1D oracle sampled at `x = b / len`.
pub fn ideal_for_oracle(id: OracleId, v_axis: VAxis, len: usize) -> Result<IdealDistribution> {
    if id.dim() != 1 {
        return Err(Error::param("the ideal distribution is defined for 1D oracles"));
    }
    let q = (0..len)
        .map(|b| oracle_if(id, &[b as f64 / len as f64]).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ideal_distribution(&q, v_axis))
}

/// 1D EMD by cumulative sums, `sum_k |P_k - Q_k| dv`. Inputs are assumed
/// normalised.
pub fn emd_cumulative(p: &[f64], q: &[f64], dv: f64) -> f64 {
    let (mut cp, mut cq, mut acc) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(q) {
        cp += a;
        cq += b;
        acc += (cp - cq).abs();
    }
    acc * dv
}

/// Per-slice EMD summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdReport {
    /// Mean EMD in Hz over the scored slices.
    pub emd: f64,
    pub scored: usize,
    /// Slices with no reassigned mass (excluded).
    pub empty: usize,
    /// Slices whose oracle frequency is outside the grid (excluded).
    pub out_of_band: usize,
}

/// Average EMD over the `b` slices where both `T` and `D` carry mass. Both
/// slices are L1-normalised, so `D` may also be another distribution.
pub fn emd_score(t: &TfDistribution, d: &IdealDistribution) -> Result<EmdReport> {
    if t.v_axes.len() != 1 || t.t.ndim() != 2 {
        return Err(Error::input("EMD needs a (v, b) distribution; stack 2D output first"));
    }
    if t.v_axes[0] != d.v_axis || t.t.shape() != d.d.shape() {
        return Err(Error::input(format!(
            "grid mismatch: distribution {:?} on {:?}, ideal {:?} on {:?}",
            t.t.shape(),
            t.v_axes[0],
            d.d.shape(),
            d.v_axis
        )));
    }
    let dv = d.v_axis.width;
    let mut sum = 0.0;
    let mut scored = 0;
    let mut empty = 0;
    let mut out_of_band = 0;
    let mut slice = Vec::with_capacity(d.v_axis.count());
    let mut reference = Vec::with_capacity(d.v_axis.count());
    for (tc, dc) in t.t.axis_iter(Axis(1)).zip(d.d.axis_iter(Axis(1))) {
        let dmass = dc.sum();
        if dmass <= 0.0 {
            out_of_band += 1;
            continue;
        }
        let mass = tc.sum();
        if mass <= 0.0 {
            empty += 1;
            continue;
        }
        slice.clear();
        slice.extend(tc.iter().map(|v| v / mass));
        reference.clear();
        reference.extend(dc.iter().map(|v| v / dmass));
        sum += emd_cumulative(&slice, &reference, dv);
        scored += 1;
    }
    if scored == 0 {
        return Err(Error::input("no b-slice carries both reassigned and ideal mass"));
    }
    Ok(EmdReport {
        emd: sum / scored as f64,
        scored,
        empty,
        out_of_band,
    })
}

/// Optimal 1D transport by greedy mass matching, independent of the
/// cumulative-sum formula. Histograms must be normalised and at most
/// [`ORACLE_MAX_LEN`] long.
pub fn emd_lp_oracle(p: &[f64], q: &[f64], dv: f64) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() || p.len() > ORACLE_MAX_LEN {
        return Err(Error::param(format!(
            "oracle needs equal lengths in 1..={ORACLE_MAX_LEN}, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    for h in [p, q] {
        let total: f64 = h.iter().sum();
        if (total - 1.0).abs() > 1e-9 || h.iter().any(|&x| x < 0.0) {
            return Err(Error::param(format!("histogram is not normalised (sum {total})")));
        }
    }
    let mut supply = p.to_vec();
    let mut demand = q.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < supply.len() && j < demand.len() {
        let moved = supply[i].min(demand[j]);
        cost += moved * (i as f64 - j as f64).abs();
        supply[i] -= moved;
        demand[j] -= moved;
        if supply[i] <= 0.0 {
            i += 1;
        }
        if demand[j] <= 0.0 {
            j += 1;
        }
    }
    Ok(cost * dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::chirp_if;
    use crate::synchrosqueeze::TfMeta;
    use crate::synchrosqueeze::SqueezeMode;
    use crate::wavepacket::BLattice;
    use proptest::prelude::*;

    fn dist(t: Array2<f64>, axis: VAxis) -> TfDistribution {
        let nb = t.ncols();
        TfDistribution {
            energy: t.sum(),
            t: t.into_dyn(),
            v_axes: vec![axis],
            lattice: BLattice::line(nb),
            meta: TfMeta {
                s: 0.75,
                red: 1,
                mode: SqueezeMode::Full,
                delta: 1e-2,
                band: (1.0, 10.0),
                seed: None,
                stacked_row: None,
            },
            dropped: 0.0,
        }
    }

    fn normalise(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn ideal_rows() {
        let axis = VAxis::new(0.0, 500.0, 1.0).unwrap();
        let d = ideal_distribution(&[300.0; 16], axis);
        for b in 0..16 {
            assert_eq!(d.d[[300, b]], 1.0);
            assert_eq!(d.d.column(b).sum(), 1.0);
        }
        let axis = VAxis::new(0.0, 60.0, 1.0).unwrap();
        let d = ideal_for_oracle(OracleId::Chirp, axis, 1024).unwrap();
        let hot: Vec<usize> = d
            .d
            .axis_iter(Axis(1))
            .map(|c| c.iter().position(|&x| x == 1.0).unwrap())
            .collect();
        // the lowest bin is a plateau centred on b = 256 (x = 0.25)
        let low = *hot.iter().min().unwrap();
        assert_eq!(low, chirp_if(0.25).round() as usize);
        let plateau: Vec<usize> = (0..1024).filter(|&b| hot[b] == low).collect();
        let mid = (plateau[0] + plateau[plateau.len() - 1]) as f64 / 2.0;
        assert!((mid - 256.0).abs() <= 0.5, "{mid}");
        let narrow = VAxis::new(25.0, 40.0, 1.0).unwrap();
        let d = ideal_for_oracle(OracleId::Chirp, narrow, 1024).unwrap();
        assert!(!d.out_of_band.is_empty());
        for &b in &d.out_of_band {
            assert_eq!(d.d.column(b).sum(), 0.0);
        }
        assert!(ideal_for_oracle(OracleId::NoiseOnly, axis, 8).is_err());
    }

    #[test]
    fn score_of_ideal_is_zero_and_shift_is_k() {
        let axis = VAxis::new(0.0, 31.0, 1.0).unwrap();
        let q: Vec<f64> = (0..20).map(|b| 5.0 + b as f64).collect();
        let d = ideal_distribution(&q, axis);
        let r = emd_score(&dist(d.d.clone(), axis), &d).unwrap();
        assert_eq!(r.emd, 0.0);
        assert_eq!(r.scored, 20);
        let mut shifted = Array2::zeros(d.d.raw_dim());
        for b in 0..20 {
            shifted[[5 + b + 3, b]] = 2.0;
        }
        assert_eq!(emd_score(&dist(shifted, axis), &d).unwrap().emd, 3.0);
        // the same shift on 0.5 Hz bins is 1.5 Hz
        let half = VAxis::new(0.0, 15.5, 0.5).unwrap();
        let dh = ideal_distribution(&[4.0], half);
        let mut th = Array2::zeros(dh.d.raw_dim());
        th[[11, 0]] = 1.0;
        assert_eq!(emd_score(&dist(th, half), &dh).unwrap().emd, 1.5);
    }

    #[test]
    fn uniform_against_spike() {
        // uniform over [v0 - w, v0 + w] with 2w + 1 bins: mean |v - v0| = w (w + 1) / (2w + 1)
        let axis = VAxis::new(0.0, 100.0, 1.0).unwrap();
        let d = ideal_distribution(&[50.0], axis);
        for w in [1usize, 5, 20] {
            let mut t = Array2::zeros((101, 1));
            for k in 50 - w..=50 + w {
                t[[k, 0]] = 1.0;
            }
            let expect = (w * (w + 1)) as f64 / (2 * w + 1) as f64;
            let got = emd_score(&dist(t, axis), &d).unwrap().emd;
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn empty_slices_are_excluded() {
        let axis = VAxis::new(0.0, 9.0, 1.0).unwrap();
        let d = ideal_distribution(&[2.0, 3.0, 50.0, 4.0], axis);
        let mut t = Array2::zeros((10, 4));
        t[[2, 0]] = 1.0;
        t[[5, 2]] = 1.0;
        let r = emd_score(&dist(t, axis), &d).unwrap();
        assert_eq!((r.scored, r.empty, r.out_of_band), (1, 2, 1));
        assert_eq!(r.emd, 0.0);
        let zero = Array2::zeros((10, 4));
        assert!(matches!(emd_score(&dist(zero, axis), &d), Err(Error::Input(_))));
        let other = VAxis::new(0.0, 10.0, 1.0).unwrap();
        let mismatched = dist(Array2::zeros((11, 4)), other);
        assert!(matches!(emd_score(&mismatched, &d), Err(Error::Input(_))));
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(emd_lp_oracle(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap(), 1.0);
        assert_eq!(emd_lp_oracle(&[0.25, 0.75], &[0.25, 0.75], 1.0).unwrap(), 0.0);
        assert!(emd_lp_oracle(&[0.5, 0.4], &[0.0, 1.0], 1.0).is_err());
        assert!(emd_lp_oracle(&[1.0; 33], &[1.0; 33], 1.0).is_err());
    }

    fn histogram(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero", |v| {
            (v.iter().sum::<f64>() > 1e-3).then(|| normalise(v))
        })
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=32).prop_flat_map(|n| (histogram(n), histogram(n)))
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=32).prop_flat_map(|n| (histogram(n), histogram(n), histogram(n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cumulative_matches_oracle((p, q) in pair(), dv in 0.1f64..4.0) {
            let a = emd_cumulative(&p, &q, dv);
            let b = emd_lp_oracle(&p, &q, dv).unwrap();
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn metric_axioms((p, q, r) in triple()) {
            let pq = emd_cumulative(&p, &q, 1.0);
            prop_assert!((pq - emd_cumulative(&q, &p, 1.0)).abs() <= 1e-12);
            prop_assert!(pq <= emd_cumulative(&p, &r, 1.0) + emd_cumulative(&r, &q, 1.0) + 1e-12);
            prop_assert_eq!(emd_cumulative(&p, &p, 1.0), 0.0);
        }

        #[test]
        fn score_ignores_scale(col in histogram(16), hot in 0usize..16, c in 1e-3f64..1e3) {
            let axis = VAxis::new(0.0, 15.0, 1.0).unwrap();
            let d = ideal_distribution(&[hot as f64], axis);
            let t = Array2::from_shape_vec((16, 1), col.clone()).unwrap();
            let a = emd_score(&dist(t.clone(), axis), &d).unwrap().emd;
            let b = emd_score(&dist(t * c, axis), &d).unwrap().emd;
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
