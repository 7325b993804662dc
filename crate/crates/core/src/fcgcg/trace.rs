use serde::Serialize;

/// State of the iterate `u_k` and the work done in iteration `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(K u_k) + TV(u_k)`
    pub objective: f64,
    /// `F(K u_k)`
    pub misfit: f64,
    /// `Σ λ_j Per(E_j)`
    pub surrogate: f64,
    /// `j_k = ∫_{Ē_k} p_k − Per(Ē_k)`
    pub indicator: f64,
    /// Sets inserted in this iteration (each costs one forward solve).
    pub n_components: usize,
    /// Components of `Ē_k` that were already active.
    pub duplicates: usize,
    /// `|𝒜_k|`
    pub active_size: usize,
    /// Cumulative PDE solves, setup excluded.
    pub pde_solves: usize,
    /// Cumulative graph cuts.
    pub cuts: usize,
    pub wall_ms: f64,
    /// `max_j |∫_{E_j} p_k − Per(E_j)| / (1 + Per(E_j))` over active sets
    /// with positive coefficient (Ω excluded).
    pub stationarity: f64,
    /// `∫_Ω p_k dx`
    pub dual_mass: f64,
    /// Largest insertion energy `−∫_{E^m} p_k + Per(E^m)` over the
    /// components of `Ē_k`.
    pub worst_component_energy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverTrace {
    pub rows: Vec<IterationRecord>,
    /// Forward solves spent before the first iteration (the Ω atom).
    pub setup_pde_solves: usize,
}

pub const TRACE_HEADER: &str = "k,J,surrogate,j_k,n_components,active_size,pde_solves,cuts,wall_ms";

impl SolverTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.k,
                r.objective,
                r.surrogate,
                r.indicator,
                r.n_components,
                r.active_size,
                r.pde_solves,
                r.cuts,
                r.wall_ms
            ));
        }
        out
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// Largest increase `J(u_{k+1}) − J(u_k)`; negative when strictly
    /// decreasing.
    pub fn max_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares line through `(k, ln r_k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of `k` and `ln r_k`.
    pub correlation: f64,
    pub points: usize,
    pub first_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualCurve {
    /// `r_k = J(u_k) − J_ref`
    pub residuals: Vec<f64>,
    /// Some `r_k < −1e−10`: the reference is not below the trace.
    pub inconsistent_reference: bool,
    /// Fit over the tail, if at least three usable points exist.
    pub tail_fit: Option<LogLinearFit>,
    /// Smallest `q` with `r_k ≤ r_1 / (1 + q(k−1))` for all `k > 1`.
    pub q_hat: Option<f64>,
}

/// Residuals below `floor` carry no rate information (they sit at the
/// accuracy of the reference value) and are left out of the fit.
pub fn residual_curve(
    objectives: &[f64],
    j_ref: f64,
    tail_fraction: f64,
    floor: f64,
) -> ResidualCurve {
    let residuals: Vec<f64> = objectives.iter().map(|j| j - j_ref).collect();
    let inconsistent_reference = residuals.iter().any(|&r| r < -1e-10);

    let usable: Vec<(usize, f64)> = residuals
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &r)| r > floor)
        .map(|(k, &r)| (k, r))
        .collect();
    let tail_len = ((usable.len() as f64) * tail_fraction.clamp(0.0, 1.0)).ceil() as usize;
    let tail = &usable[usable.len() - tail_len.min(usable.len())..];
    let tail_fit = (tail.len() >= 3).then(|| fit_log_linear(tail));

    // The envelope must hold at every k, so the admissible q is the
    // smallest of the per-k bounds. Nonpositive residuals satisfy any q.
    let q_hat = residuals
        .get(1)
        .copied()
        .filter(|&r1| r1 > 0.0)
        .and_then(|r1| {
            residuals
                .iter()
                .enumerate()
                .skip(2)
                .filter(|&(_, &r)| r > 0.0)
                .map(|(k, &r)| (r1 / r - 1.0) / (k as f64 - 1.0))
                .reduce(f64::min)
        });

    ResidualCurve {
        residuals,
        inconsistent_reference,
        tail_fit,
        q_hat,
    }
}

fn fit_log_linear(points: &[(usize, f64)]) -> LogLinearFit {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(k, _)| k as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, r)| r.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    LogLinearFit {
        slope,
        intercept: my - slope * mx,
        correlation,
        points: points.len(),
        first_k: points[0].0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_decay_fits_exactly() {
        let j_ref = 2.0;
        let objectives: Vec<f64> = (0..12).map(|k| j_ref + 3.0 * 0.5f64.powi(k)).collect();
        let curve = residual_curve(&objectives, j_ref, 0.5, 1e-14);
        let fit = curve.tail_fit.unwrap();
        assert!((fit.slope - 0.5f64.ln()).abs() < 1e-12);
        assert!((fit.correlation + 1.0).abs() < 1e-12);
        assert!(!curve.inconsistent_reference);
        assert!(curve.q_hat.unwrap() > 0.0);
    }

    #[test]
    fn q_hat_is_the_tightest_envelope() {
        let r = [10.0, 4.0, 2.0, 1.5, 0.5];
        let objectives: Vec<f64> = r.to_vec();
        let curve = residual_curve(&objectives, 0.0, 1.0, 0.0);
        let q = curve.q_hat.unwrap();
        // Per-k bounds: (4/2−1)/1 = 1, (4/1.5−1)/2 = 5/6, (4/0.5−1)/3 = 7/3.
        assert!((q - 5.0 / 6.0).abs() < 1e-15);
        for k in 2..r.len() {
            assert!(r[k] <= r[1] / (1.0 + q * (k as f64 - 1.0)) + 1e-15);
        }
    }

    #[test]
    fn stalled_residual_gives_nonpositive_q() {
        let curve = residual_curve(&[5.0, 3.0, 3.0, 1.0], 0.0, 1.0, 0.0);
        assert_eq!(curve.q_hat, Some(0.0));
    }

    #[test]
    fn negative_residual_flags_reference() {
        let curve = residual_curve(&[1.0, 0.5, -1e-9], 0.0, 1.0, 0.0);
        assert!(curve.inconsistent_reference);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut trace = SolverTrace::default();
        trace.rows.push(IterationRecord {
            k: 0,
            objective: 1.5,
            misfit: 1.5,
            surrogate: 0.0,
            indicator: 2.0,
            n_components: 1,
            duplicates: 0,
            active_size: 0,
            pde_solves: 2,
            cuts: 1,
            wall_ms: 0.0,
            stationarity: 0.0,
            dual_mass: 0.0,
            worst_component_energy: -2.0,
        });
        assert_eq!(
            trace.to_csv(),
            format!("{TRACE_HEADER}\n0,1.5,0,2,1,0,2,1,0\n")
        );
    }
}
