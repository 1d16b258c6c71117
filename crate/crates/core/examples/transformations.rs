// Configuration maps between related models, checked by counting windows.
//
// Every valid 3-colouring of a charge window lifts to Q-charge bond
// configurations, every even spin window lifts to p-i configurations and
// every p-i configuration has two even-face preimages.

use ctm_capacity::models::{
    builtin, count_valid_grid, enumerate_spin_grids, enumerate_valid_grid, is_valid_charge3,
    is_valid_even, map_charge_to_qcharge, map_even_to_pi, map_pi_to_evenface,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q_charge = builtin("q_charge")?;
    for n in 1..=3 {
        let mut images = 0usize;
        for config in enumerate_spin_grids(n, n, is_valid_charge3)? {
            images += map_charge_to_qcharge(&config)?.len();
        }
        let direct = count_valid_grid(&q_charge, n, n)?;
        println!("charge -> q_charge {n}x{n}: {images} images, {direct} windows");
        assert_eq!(images as u64, direct);
    }

    let pi = builtin("pi")?;
    for (w, h) in [(2, 2), (3, 3)] {
        let mut images = 0usize;
        for config in enumerate_spin_grids(w, h, is_valid_even)? {
            images += map_even_to_pi(&config)?.len();
        }
        let direct = count_valid_grid(&pi, w, h)?;
        println!("even -> pi {w}x{h}: {images} images, {direct} windows");
        assert_eq!(images as u64, direct);
    }

    let even_face = builtin("even_face")?;
    for (w, h) in [(1, 1), (2, 2)] {
        let mut faces = 0usize;
        for config in enumerate_valid_grid(&pi, w, h)? {
            let pre = map_pi_to_evenface(&config)?;
            assert_eq!(pre.len(), 2);
            faces += pre.len();
        }
        let direct = count_valid_grid(&even_face, w + 1, h + 1)?;
        println!("pi -> even_face {w}x{h}: {faces} preimages, {direct} face windows");
        assert_eq!(faces as u64, direct);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
