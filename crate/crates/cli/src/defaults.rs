//! Per-group defaults: admissible wavelets, contractions, test regions and
//! test profiles for the verification batteries.

use std::f64::consts::{LN_2, PI};

use orbitlet_core::admissibility::{
    full_region, piece_region, synthesize_nonunimodular, synthesize_unimodular, TilingOptions,
};
use orbitlet_core::groups::{CatalogId, GroupChart};
use orbitlet_core::linalg::ChartPoint;
use orbitlet_core::orbits::{Interval, OrbitAtlas, Region, TransversalPart};
use orbitlet_core::profile::FrequencyProfile;

use crate::report::CliError;

/// h₀ halving the first unbounded chart coordinate: `-ln 2` on a
/// continuous block, `-1` on an integer one.
pub fn default_contraction(chart: &GroupChart) -> Result<ChartPoint, CliError> {
    let mut t = chart.identity_point();
    let (i, b) = chart
        .blocks()
        .iter()
        .enumerate()
        .find(|(_, b)| !b.is_bounded())
        .ok_or_else(|| CliError::Config(format!("{} has no unbounded chart coordinate", chart.name())))?;
    t.set(i, if b.is_continuous() { -LN_2 } else { -1.0 });
    Ok(t)
}

/// A bounded region of finite quotient measure for unimodular groups.
pub fn bounded_region(atlas: &OrbitAtlas) -> Region {
    Region {
        pieces: atlas
            .transversal
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                TransversalPart::Whole { dim } => {
                    piece_region(i, vec![Interval::new(-2.0, 2.0); *dim]).pieces[0].clone()
                }
                TransversalPart::Segment { lo, .. } => {
                    piece_region(i, vec![Interval::new(lo.max(0.0), 3.0)]).pieces[0].clone()
                }
                TransversalPart::Atom { .. } => piece_region(i, vec![]).pieces[0].clone(),
            })
            .collect(),
    }
}

/// An admissible wavelet and the region it is admissible on: the unimodular
/// construction on [`bounded_region`], or the tiling construction on the
/// whole transversal with [`default_contraction`].
pub fn default_wavelet(chart: &GroupChart) -> Result<(FrequencyProfile, Region), CliError> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    if chart.is_unimodular() {
        let region = bounded_region(&atlas);
        Ok((synthesize_unimodular(chart, &region)?, region))
    } else {
        let region = full_region(chart)?;
        let h0 = default_contraction(chart)?;
        let syn = synthesize_nonunimodular(chart, &region, &h0, &TilingOptions::default_for(chart))?;
        Ok((syn.profile, region))
    }
}

/// Two regions for the scaling battery.
pub fn scaling_regions(atlas: &OrbitAtlas) -> Vec<Region> {
    match atlas.transversal.first() {
        Some(TransversalPart::Whole { dim }) => vec![
            piece_region(0, vec![Interval::new(0.0, 1.0); *dim]),
            piece_region(0, vec![Interval::new(-1.0, 2.0); *dim]),
        ],
        Some(TransversalPart::Segment { .. }) => vec![
            piece_region(0, vec![Interval::new(0.0, 1.0)]),
            piece_region(0, vec![Interval::new(0.5, 2.0)]),
        ],
        _ => vec![],
    }
}

/// Profile for the oracle-equality battery, chosen so that the H-node
/// quadrature of T_H² is exact or spectrally accurate.
pub fn oracle_profile(id: CatalogId) -> Option<FrequencyProfile> {
    let band = |lo: f64, hi: f64| Interval::new(lo, hi);
    Some(match id {
        CatalogId::Identity(k) => FrequencyProfile::Box {
            axes: vec![band(-1.0, 1.0); k as usize],
            amplitude: 1.0,
        },
        CatalogId::Affine1dPlus => FrequencyProfile::interval(1.0, 2.0, 1.0),
        CatalogId::Affine1dFull | CatalogId::Dyadic1d => FrequencyProfile::shannon(),
        CatalogId::Sim2 => FrequencyProfile::RadialPower {
            c: (2.0 / PI).sqrt(),
            p: 1.0,
            q: 1.0,
        },
        CatalogId::Diag2 => FrequencyProfile::Box {
            axes: vec![band(1.0, 2.0), band(1.0, 2.0)],
            amplitude: 1.0,
        },
        CatalogId::DiagLine2 => FrequencyProfile::Box {
            axes: vec![band(1.0, 2.0), Interval::all()],
            amplitude: 1.0,
        },
        CatalogId::Se2Rot => FrequencyProfile::Annulus {
            inner: 0.5,
            outer: 2.0,
            amplitude: 1.0,
        },
        CatalogId::Sl2zDyadic => return None,
    })
}
