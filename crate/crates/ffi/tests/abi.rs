use std::ffi::{c_char, CString};
use std::ptr;

use quanty_hall_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { qh_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn new_session(proto: QhProtocol, rounds: usize, seed: u64) -> *mut QhSession {
    let mut s = ptr::null_mut();
    let st = unsafe { qh_session_new(proto, rounds, 2.5, seed, &mut s) };
    assert_eq!(st, QhStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn bell_values_and_thresholds() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(
            qh_bell_value(QhProtocol::Qutrit, 0, 0.0, &mut v),
            QhStatus::Ok
        );
        assert!((v - 4.0 * (3.0 + 2.0 * 3f64.sqrt()) / 9.0).abs() < 1e-9);
        assert_eq!(
            qh_bell_value(QhProtocol::Qubit, 2, 1.0, &mut v),
            QhStatus::Ok
        );
        assert!(v.abs() < 1e-9);
        assert_eq!(qh_threshold(QhProtocol::Qubit, &mut v), QhStatus::Ok);
        assert!((v - 0.625).abs() < 1e-8);
        assert_eq!(
            qh_bell_value(QhProtocol::Qutrit, 3, 0.0, &mut v),
            QhStatus::InvalidArgument
        );
        assert_eq!(
            qh_bell_value(QhProtocol::Qutrit, 0, 2.0, &mut v),
            QhStatus::InvalidArgument
        );
        assert!(last_error().contains("outside [0, 1]"));
        assert_eq!(
            qh_threshold(QhProtocol::Qutrit, ptr::null_mut()),
            QhStatus::NullPointer
        );
    }
}

#[test]
fn unattacked_session_keys_agree() {
    let s = new_session(QhProtocol::Qubit, 64, 3);
    unsafe {
        let mut len = 0;
        assert_eq!(qh_session_key_len(s, &mut len), QhStatus::NotRun);
        assert_eq!(qh_session_run(s), QhStatus::Ok);
        assert_eq!(qh_session_key_len(s, &mut len), QhStatus::Ok);
        assert_eq!(len, 64);
        let (mut a, mut b) = (vec![9u8; len], vec![9u8; len]);
        assert_eq!(
            qh_session_keys(s, a.as_mut_ptr(), b.as_mut_ptr(), len),
            QhStatus::Ok
        );
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x <= 1));
        assert_eq!(
            qh_session_keys(s, a.as_mut_ptr(), b.as_mut_ptr(), len - 1),
            QhStatus::BufferTooSmall
        );
        let mut verdict = QhVerdict::Compromised;
        assert_eq!(qh_session_verdict(s, &mut verdict), QhStatus::Ok);
        assert_eq!(verdict, QhVerdict::Safe);
        qh_session_free(s);
    }
}

#[test]
fn attacked_session_is_compromised() {
    let s = new_session(QhProtocol::Qutrit, 100, 4);
    unsafe {
        assert_eq!(
            qh_session_set_attack(s, QhAttack::DoubleIr, 1.0, 0.0),
            QhStatus::Ok
        );
        assert_eq!(qh_session_run(s), QhStatus::Ok);
        let (mut mean, mut known) = (1.0, 0.0);
        assert_eq!(qh_session_mean_bell(s, &mut mean), QhStatus::Ok);
        assert!(mean.abs() < 1e-9);
        assert_eq!(qh_session_eve_known_fraction(s, &mut known), QhStatus::Ok);
        assert_eq!(known, 1.0);
        let mut verdict = QhVerdict::Safe;
        qh_session_verdict(s, &mut verdict);
        assert_eq!(verdict, QhVerdict::Compromised);
        assert_eq!(
            qh_session_set_attack(s, QhAttack::SingleQubitA0A1, 1.0, 0.0),
            QhStatus::InvalidArgument
        );
        qh_session_free(s);
    }
}

#[test]
fn transcript_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let s = new_session(QhProtocol::Qutrit, 5, 1);
    unsafe {
        assert_eq!(qh_session_write_transcript(s, c.as_ptr()), QhStatus::NotRun);
        qh_session_run(s);
        assert_eq!(qh_session_write_transcript(s, c.as_ptr()), QhStatus::Ok);
        let bad = CString::new("/nonexistent-dir/x.jsonl").unwrap();
        assert_eq!(
            qh_session_write_transcript(s, bad.as_ptr()),
            QhStatus::IoError
        );
        qh_session_free(s);
    }
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 5);
}

#[test]
fn invalid_construction_and_null_handles() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            qh_session_new(QhProtocol::Qutrit, 10, 1.9, 0, &mut s),
            QhStatus::InvalidArgument
        );
        assert!(s.is_null());
        assert!(last_error().contains("chi"));
        assert_eq!(
            qh_session_new(QhProtocol::Qutrit, 0, 2.5, 0, &mut s),
            QhStatus::InvalidArgument
        );
        assert_eq!(qh_session_run(ptr::null_mut()), QhStatus::NullPointer);
        qh_session_free(ptr::null_mut());
        assert_eq!(
            qh_last_error_message(ptr::null_mut(), 0),
            "session is NULL".len()
        );
    }
}

#[test]
fn error_message_is_truncated_safely() {
    unsafe {
        qh_session_run(ptr::null_mut());
        let mut buf = [1 as c_char; 4];
        let n = qh_last_error_message(buf.as_mut_ptr(), buf.len());
        assert_eq!(n, "session is NULL".len());
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/quanty_hall.h");
    for name in [
        "QhSession",
        "QH_STATUS_OK",
        "QH_PROTOCOL_QUBIT",
        "QH_ATTACK_DOUBLE_IR",
        "qh_session_new",
        "qh_session_run",
        "qh_session_keys",
        "qh_session_free",
        "qh_bell_value",
        "qh_threshold",
        "qh_last_error_message",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libquanty_hall_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let run = std::process::Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok 32");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc)
            .arg("--version")
            .output()
            .is_ok()
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
