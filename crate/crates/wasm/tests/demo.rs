use fpmforge_wasm::{gray_rgba, Demo};

#[test]
fn gray_pixels_are_opaque() {
    assert_eq!(gray_rgba(&[0.0, 1.0, 2.0, -1.0]), vec![0, 0, 0, 255, 255, 255, 255, 255, 255, 255, 255, 255, 0, 0, 0, 255]);
}

#[test]
fn frames_have_camera_size() {
    let d = Demo::build(128, 5, false, 1).unwrap();
    assert_eq!((d.width(), d.height(), d.frames()), (32, 32, 25));
    assert_eq!(d.frame(0).unwrap().len(), 32 * 32 * 4);
    assert!(d.frame(25).is_err());
}

#[test]
fn preview_reports_the_frame() {
    let d = Demo::build(128, 7, true, 3).unwrap();
    let (rgba, stats) = d.preview(10, 0.1, Some(0.02)).unwrap();
    assert_eq!(rgba.len(), 32 * 32 * 4);
    assert_eq!(stats.index, 10);
    assert_eq!(stats.i_th, 0.02);
    assert!(stats.bound > 0.0);
}

#[test]
fn reconstruction_returns_both_images() {
    let d = Demo::build(128, 5, true, 3).unwrap();
    let (amp, phase, stats) = d.reconstruct(2, true, false).unwrap();
    assert_eq!(amp.len(), 128 * 128 * 4);
    assert_eq!(phase.len(), amp.len());
    assert_eq!(stats.iterations, 2);
    assert!(stats.rmse.unwrap().is_finite());
    let (_, _, raw) = d.reconstruct(2, false, false).unwrap();
    assert!(raw.fidelity.is_finite());
}
