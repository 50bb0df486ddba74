use nv_polarimetry::dynamics::{self, EmissionModel};
use nv_polarimetry::inference::{self, BatchFlag, SweepDataset};
use nv_polarimetry::model::{rates_from_detailed_balance, Branch, LevelModel, RateSet, ThermalBath};
use nv_polarimetry::montecarlo::{self, McConfig};
use nv_polarimetry::optics;

const TAU: f64 = 12.0;

#[test]
fn batch_recovers_monte_carlo_rates() {
    let truths = [5.0, 20.0, 100.0];
    let angles = optics::default_polarizer_angles();
    let datasets: Vec<SweepDataset> = truths
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let cfg = McConfig::new(1, 40 + i as u64, RateSet::symmetric(1.0 / g).unwrap(), TAU, Branch::X).unwrap();
            SweepDataset {
                id: format!("g{g}"),
                points: montecarlo::photon_counting_sweep(&cfg, 0.0, &angles, 4e5).unwrap(),
            }
        })
        .collect();
    let rows = inference::batch_report(&datasets, TAU, EmissionModel::PHOTON_COUNTING);
    for (row, &g) in rows.iter().zip(&truths) {
        assert_eq!(row.flag, BatchFlag::Ok, "{row:?}");
        assert!(row.ci_low <= g && g <= row.ci_high, "{row:?}");
        assert!((row.gamma_inv - g).abs() < 0.15 * g, "{row:?}");
    }
}

#[test]
fn analytic_sweeps_recover_rates_exactly() {
    let level = LevelModel::new(5.0, TAU).unwrap().with_dipole_x_angle(33.0).unwrap();
    let angles = optics::default_polarizer_angles();
    for model in [EmissionModel::default(), EmissionModel::PHOTON_COUNTING] {
        let datasets: Vec<SweepDataset> = [2.0, 20.0, 500.0]
            .iter()
            .map(|&g| {
                let avg = dynamics::averages(1.0 / g, TAU, Branch::Y, model.averaging).unwrap();
                let mix = optics::emission_mixture(&avg, &level, model.weighting).unwrap();
                let points = optics::polarizer_sweep(&optics::mixture_to_stokes(&mix), None, &angles).unwrap();
                SweepDataset { id: g.to_string(), points }
            })
            .collect();
        let rows = inference::batch_report(&datasets, TAU, model);
        for (row, g) in rows.iter().zip([2.0, 20.0, 500.0]) {
            assert!((row.gamma_inv - g).abs() < 1e-6 * g, "{model:?} {row:?}");
        }
    }
}

#[test]
fn cold_bath_relaxes_toward_lower_branch() {
    let bath = ThermalBath::new(0.05).unwrap();
    let rates = rates_from_detailed_balance(0.05, 5.0, &bath).unwrap();
    let cfg = McConfig::new(20_000, 3, rates, TAU, Branch::X).unwrap();
    let late = montecarlo::occupation_curve(&cfg, &[200.0]).unwrap()[0];
    assert!(late.p_x_hat < 0.01, "{late:?}");
}
