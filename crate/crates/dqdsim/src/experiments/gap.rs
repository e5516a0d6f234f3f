use super::{Axis, Curve, Metadata};
use crate::error::Result;
use crate::model::{labeled_levels, polarized_partner, DeviceParams, Pair};

/// Exact splitting (GHz) of the chosen pair at each detuning.
pub fn gap_curve(params: &DeviceParams, eps_grid: &[f64], which: Pair) -> Result<Curve> {
    params.validate()?;
    let axis = Axis::new("eps", "ueV", eps_grid.to_vec())?;
    let partner = polarized_partner(params);
    let values = eps_grid.iter().map(|&e| labeled_levels(params, e).gap(which, partner)).collect();
    let name = match which {
        Pair::SingletT0 => "gap_S_T0 [GHz]",
        Pair::SingletTMinus => "gap_S_Tpol [GHz]",
    };
    Ok(Curve {
        axis,
        value_name: name.into(),
        values,
        skipped: Vec::new(),
        metadata: Metadata {
            protocol: format!("gap_curve {which:?}"),
            params: params.clone(),
            warnings: eps_grid.iter().filter_map(|&e| params.validity_warning(e)).collect(),
            ..Metadata::default()
        },
    })
}
