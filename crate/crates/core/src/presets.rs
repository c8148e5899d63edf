//! Reference instances.

use crate::model::{Category, ExposureMatrix, Scenario, PILOT_GROUP_MENU};

/// Sizes of the simulated campus: students, cafeteria workers, professors.
pub const CAMPUS_SIZES: [u32; 3] = [9000, 500, 500];

/// Mean contacts between the campus categories (row = receiving category).
pub const CAMPUS_CONTACTS: [[f64; 3]; 3] = [
    [4.92, 1.34, 1.27],
    [24.28, 1.44, 1.26],
    [23.0, 1.26, 1.44],
];

pub fn campus_contacts() -> Vec<Vec<f64>> {
    CAMPUS_CONTACTS.iter().map(|r| r.to_vec()).collect()
}

/// The simulated campus with a uniform prior `p`, per-contact transmission
/// `pi`, unit vulnerability and the pilot group menu.
pub fn campus_scenario(budget: u32, p: f64, pi: f64) -> Scenario {
    let ids = ["students", "cafeteria", "professors"];
    let categories = ids
        .iter()
        .zip(CAMPUS_SIZES)
        .map(|(id, n)| Category::new(*id, n, p, 1.0))
        .collect();
    Scenario::new(
        categories,
        ExposureMatrix::with_uniform_pi(campus_contacts(), pi),
        budget,
        10,
        PILOT_GROUP_MENU.to_vec(),
    )
    .expect("campus scenario is valid")
}
