use serde::{Deserialize, Serialize};

/// Every numeric tolerance used by the crate, with its default value.
///
/// A run configuration file carries these under a `[tolerances]` table; the
/// CLI exposes the most common ones as `--tol-*` flags. All comparisons in
/// the library go through a `Tolerances` value so that a run is reproducible
/// from its configuration file alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Residual tolerance for the simultaneous root finder.
    pub root_tol: f64,
    /// Iteration cap for the simultaneous root finder.
    pub root_iter_cap: u32,
    /// Relative radius for clustering root approximants into multiple roots.
    pub root_cluster: f64,
    /// Half-width of the ambiguity band around disk boundaries: a preimage
    /// with `||w| - 1| <= boundary_band` counts as a boundary point.
    pub boundary_band: f64,
    /// Points closer than this to a singular point (cusp or double point)
    /// are classified `Undecided` rather than forced into a tile.
    pub singular_band: f64,
    /// Strict-interior margin for membership of the fundamental tile.
    pub interior_margin: f64,
    /// Acceptable residual for `S = id` on domain boundaries.
    pub boundary_fix_tol: f64,
    /// Acceptable residual for the boundary involution `S∘S = id`.
    pub involution_tol: f64,
    /// Tail diameter below which a traced ray counts as landed.
    pub landing_tol: f64,
    /// Radius for clustering ray endpoints into co-landing classes.
    pub cluster_tol: f64,
    /// Acceptable residual for semiconjugacy identities.
    pub semiconj_tol: f64,
    /// Acceptable residual for the deck-permutation identity `τ^(d+1) = id`.
    pub tau_tol: f64,
    /// Minimal separation between branch candidates; anything closer is
    /// reported as an ambiguous branch instead of silently picking one.
    pub branch_tie_tol: f64,
    /// Distance below which two domain boundaries count as touching.
    pub touch_tol: f64,
    /// Boundary sample count for the univalence (argument-principle) check.
    pub univalence_samples: usize,
    /// Newton steps allowed for a warm-started disk inversion before the
    /// solver falls back to global root finding.
    pub newton_steps: u32,
    /// Maximal polynomial degree accepted when building systems.
    pub max_degree: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_tol: 1e-12,
            root_iter_cap: 500,
            root_cluster: 1e-5,
            boundary_band: 1e-10,
            singular_band: 1e-8,
            interior_margin: 1e-10,
            boundary_fix_tol: 1e-9,
            involution_tol: 1e-8,
            landing_tol: 1e-9,
            cluster_tol: 1e-4,
            semiconj_tol: 1e-6,
            tau_tol: 1e-8,
            branch_tie_tol: 1e-8,
            touch_tol: 1e-6,
            univalence_samples: 2000,
            newton_steps: 12,
            max_degree: 32,
        }
    }
}

impl Tolerances {
    /// Validates basic sanity (everything positive, caps nonzero).
    pub fn validate(&self) -> crate::error::Result<()> {
        let positives = [
            ("root_tol", self.root_tol),
            ("root_cluster", self.root_cluster),
            ("boundary_band", self.boundary_band),
            ("singular_band", self.singular_band),
            ("interior_margin", self.interior_margin),
            ("boundary_fix_tol", self.boundary_fix_tol),
            ("involution_tol", self.involution_tol),
            ("landing_tol", self.landing_tol),
            ("cluster_tol", self.cluster_tol),
            ("semiconj_tol", self.semiconj_tol),
            ("tau_tol", self.tau_tol),
            ("branch_tie_tol", self.branch_tie_tol),
            ("touch_tol", self.touch_tol),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::error::Error::InvalidConfig(format!(
                    "tolerance `{name}` must be a positive finite number, got {v}"
                )));
            }
        }
        if self.root_iter_cap == 0 || self.univalence_samples == 0 || self.max_degree == 0 {
            return Err(crate::error::Error::InvalidConfig(
                "iteration/sample caps must be nonzero".into(),
            ));
        }
        Ok(())
    }
}
