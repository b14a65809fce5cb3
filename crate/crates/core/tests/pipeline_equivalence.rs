use proptest::prelude::*;

use qpwms::dli::{run_fp_pipeline, run_qp_pipeline, ScanPortion};
use qpwms::mux::MuxSchedule;
use qpwms::scenario::{NoiseChain, Scenario};
use qpwms::spectroscopy::BeamGasState;

fn scenario(n: usize, c: usize, per_period: f64, portion: ScanPortion, phase: f64, xs: &[f64]) -> Option<Scenario> {
    let mut s = Scenario::reference();
    s.sched = MuxSchedule {
        n_beams: n,
        periods_per_slot: c,
        f_d_hz: s.sched.f_m_hz * per_period,
        ..s.sched
    };
    s.sched.validate().ok()?;
    s.portion = portion;
    s.reference_phase_rad = phase;
    s.beams = xs[..n]
        .iter()
        .map(|&x| BeamGasState {
            path_length_cm: 36.0,
            pressure_atm: 1.0,
            temperature_k: 293.0,
            mole_fraction: x,
        })
        .collect();
    s.noise = Some(NoiseChain::reference(s.sched.f_s_hz));
    Some(s)
}

fn portion() -> impl Strategy<Value = ScanPortion> {
    prop_oneof![Just(ScanPortion::Falling), Just(ScanPortion::Rising), Just(ScanPortion::Full)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn qp_is_fp_on_the_beams_own_slots(
        n in prop::sample::select(vec![1usize, 2, 4, 5]),
        c in 1usize..=2,
        portion in portion(),
        phase in -3.0f64..3.0,
        xs in prop::collection::vec(0.0f64..0.02, 5),
        seed in any::<u64>(),
    ) {
        let Some(s) = scenario(n, c, 50.0, portion, phase, &xs) else {
            return Ok(());
        };
        let noisy = s.noisy_beams(&s.clean_beams().unwrap(), seed, 0).unwrap();
        let bg = s.backgrounds().unwrap();
        let qp = run_qp_pipeline(&noisy, &bg, &s.lock_in()).unwrap();
        let fp = run_fp_pipeline(&noisy, &bg, &s.lock_in()).unwrap();
        prop_assert_eq!(qp.len(), n);
        for (q, f) in qp.iter().zip(&fp) {
            let r = f.restrict_to(&q.slots).unwrap();
            prop_assert_eq!(&r.slots, &q.slots);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&r.values), bits(&q.values));
        }
    }
}

#[test]
fn same_seed_same_spectra_new_run_new_noise() {
    let s = scenario(4, 2, 50.0, ScanPortion::Falling, 0.0, &[0.008, 0.007, 0.006, 0.005]).unwrap();
    let clean = s.clean_beams().unwrap();
    let bg = s.backgrounds().unwrap();
    let spectra = |seed, run| run_qp_pipeline(&s.noisy_beams(&clean, seed, run).unwrap(), &bg, &s.lock_in()).unwrap();
    let a = spectra(9, 0);
    assert_eq!(a, spectra(9, 0));
    assert_ne!(a[0].values, spectra(9, 1)[0].values);
    assert_ne!(a[0].values, spectra(10, 0)[0].values);
}
