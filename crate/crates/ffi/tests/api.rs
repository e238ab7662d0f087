use std::ffi::CStr;
use std::ptr;

use pleaders::dwt::{daubechies_filter, dwt1d};
use pleaders::leaders::{compute_p_leaders, Neighborhood};
use pleaders::synth::{gen_mrw, MrwParams};
use pleaders::PValue;
use pleaders_ffi::*;

fn mrw(n: usize, seed: u64) -> Vec<f64> {
    gen_mrw(&MrwParams {
        n,
        seed,
        ..MrwParams::default()
    })
    .unwrap()
}

#[test]
fn analysis_matches_the_library() {
    let x = mrw(1 << 13, 3);
    unsafe {
        let mut pyr = ptr::null_mut();
        assert_eq!(pl_dwt_1d(x.as_ptr(), x.len(), 2, &mut pyr), PlStatus::PlOk);
        let mut an = ptr::null_mut();
        assert_eq!(pl_analyze(pyr, 2.0, ptr::null(), &mut an), PlStatus::PlOk);
        let mut sum = std::mem::zeroed::<PlSummary>();
        assert_eq!(pl_analysis_summary(an, &mut sum), PlStatus::PlOk);

        let lib_pyr = dwt1d(&x, &daubechies_filter(2).unwrap(), None).unwrap();
        let lib = pleaders::analysis::analyze_leaders(
            &lib_pyr,
            PValue::Finite(2.0),
            &pleaders::analysis::LeaderConfig::default(),
        )
        .unwrap();
        for (a, b) in sum.cumulants.iter().zip(&lib.estimates.cumulants) {
            assert_eq!(a, b);
        }
        assert_eq!(sum.m_max, 4);
        assert_eq!(sum.q_count, lib.estimates.q_grid.len());

        let mut zeta = vec![f64::NAN; sum.q_count];
        let mut small = [0.0; 2];
        assert_eq!(
            pl_analysis_curves(an, ptr::null_mut(), small.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), 2),
            PlStatus::PlErrUsage
        );
        assert_eq!(
            pl_analysis_curves(an, ptr::null_mut(), zeta.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), zeta.len()),
            PlStatus::PlOk
        );
        assert_eq!(zeta, lib.estimates.zeta);

        pl_analysis_free(an);
        pl_pyramid_free(pyr);
    }
}

#[test]
fn leader_views_borrow_the_handle() {
    let x = mrw(1 << 12, 5);
    let lib_pyr = dwt1d(&x, &daubechies_filter(3).unwrap(), None).unwrap();
    let lib = compute_p_leaders(&lib_pyr, PValue::Infinite, Neighborhood::Restricted).unwrap();
    unsafe {
        let mut pyr = ptr::null_mut();
        assert_eq!(pl_dwt_1d(x.as_ptr(), x.len(), 3, &mut pyr), PlStatus::PlOk);
        let mut count = 0usize;
        let mut valid_counts = [0usize; 32];
        assert_eq!(pl_pyramid_octaves(pyr, &mut count, valid_counts.as_mut_ptr(), 32), PlStatus::PlOk);
        assert_eq!(count, lib_pyr.num_octaves());
        assert_eq!(&valid_counts[..count], lib_pyr.valid_counts().as_slice());

        let mut lead = ptr::null_mut();
        assert_eq!(
            pl_leaders_compute(pyr, f64::INFINITY, PlNeighborhood::PlRestricted, &mut lead),
            PlStatus::PlOk
        );
        let (mut rows, mut cols) = (0, 0);
        let mut vals = ptr::null();
        let mut valid = ptr::null();
        assert_eq!(
            pl_leaders_octave(lead, 2, &mut rows, &mut cols, &mut vals, &mut valid),
            PlStatus::PlOk
        );
        let o = lib.octave(2);
        assert_eq!((rows, cols), (o.rows, o.cols));
        assert_eq!(std::slice::from_raw_parts(vals, rows * cols), o.values.as_slice());
        assert_eq!(std::slice::from_raw_parts(valid, rows * cols), o.valid.as_slice());
        assert_eq!(
            pl_leaders_octave(lead, 0, &mut rows, &mut cols, &mut vals, &mut valid),
            PlStatus::PlErrUsage
        );
        pl_leaders_free(lead);
        pl_pyramid_free(pyr);
    }
}

#[test]
fn errors_set_a_thread_local_message() {
    unsafe {
        let mut pyr = ptr::null_mut();
        assert_eq!(pl_dwt_1d(ptr::null(), 8, 2, &mut pyr), PlStatus::PlErrNullPointer);
        assert!(pyr.is_null());
        let msg = CStr::from_ptr(pl_last_error()).to_str().unwrap();
        assert!(msg.contains("null"), "{msg}");

        let x = [1.0; 4];
        let st = pl_dwt_1d(x.as_ptr(), x.len(), 0, &mut pyr);
        assert_ne!(st, PlStatus::PlOk);
        assert!(!pl_last_error().is_null());

        let x = mrw(1 << 10, 1);
        assert_eq!(pl_dwt_1d(x.as_ptr(), x.len(), 2, &mut pyr), PlStatus::PlOk);
        assert!(pl_last_error().is_null());
        let mut cfg = pl_config_default();
        cfg.q_count = 0;
        let mut an = ptr::null_mut();
        assert_eq!(pl_analyze(pyr, 1.0, &cfg, &mut an), PlStatus::PlErrUsage);
        pl_pyramid_free(pyr);

        let name = CStr::from_ptr(pl_status_name(PlStatus::PlErrData)).to_str().unwrap();
        assert_eq!(name, "data error");
        let v = CStr::from_ptr(pl_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn synthesis_and_scalar_helpers() {
    unsafe {
        let mut p = pl_mrw_params_default();
        p.n = 1 << 12;
        p.seed = 11;
        let mut sig = ptr::null_mut();
        assert_eq!(pl_gen_mrw(&p, &mut sig), PlStatus::PlOk);
        let (mut data, mut len) = (ptr::null(), 0usize);
        assert_eq!(pl_signal_data(sig, &mut data, &mut len), PlStatus::PlOk);
        let x = std::slice::from_raw_parts(data, len).to_vec();
        assert_eq!(x, mrw(1 << 12, 11));

        let mut pyr = ptr::null_mut();
        assert_eq!(pl_dwt_1d(data, len, 2, &mut pyr), PlStatus::PlOk);
        let mut h = f64::NAN;
        assert_eq!(pl_hmin(pyr, 3, 8, &mut h), PlStatus::PlOk);
        assert!(h.is_finite() && h > 0.0, "{h}");
        let mut p0 = 0.0;
        assert_eq!(pl_p0(pyr, &mut p0), PlStatus::PlOk);
        assert!(p0 > 0.0);

        let mut c = [f64::NAN; 4];
        assert_eq!(pl_mfdfa_cumulants(data, len, 1, 4, 10, c.as_mut_ptr()), PlStatus::PlOk);
        assert!((c[0] - 0.76).abs() < 0.15, "{c:?}");

        pl_pyramid_free(pyr);
        pl_signal_free(sig);
        pl_signal_free(ptr::null_mut());
    }
}
