use crate::trajdata::Dataset;

/// Ghost-leader spacing for models on the urban state ranges (m).
pub const GHOST_SPACING_URBAN: f64 = 45.0;
/// Ghost-leader spacing for models on the extended state ranges (m).
pub const GHOST_SPACING_EXTENDED: f64 = 150.0;

/// Gives solo driving a synthetic leader at `Δv = 0` and `d = ghost_spacing`.
///
/// A point counts as solo when its leader is missing (non-finite position or
/// speed) or sits farther than `ghost_spacing` ahead. Other points are kept.
pub fn augment_solo(ds: &Dataset, ghost_spacing: f64) -> Dataset {
    let mut out = ds.clone();
    for pair in &mut out.pairs {
        let l = pair.length_avg;
        for p in &mut pair.points {
            let missing = !p.x_l.is_finite() || !p.v_l.is_finite();
            if missing || p.x_l - p.x_f - l > ghost_spacing {
                p.x_l = p.x_f + ghost_spacing + l;
                p.v_l = p.v_f;
                p.a_l = p.a_f;
            }
        }
    }
    out
}
