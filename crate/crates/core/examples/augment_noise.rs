//! Mix noise into a tone at several SNRs and check the achieved levels.

use tutorbot::augment::{measure_rms, mix_at_snr, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16_000;
    let tone: Vec<f64> = (0..rate).map(|i| 0.3 * (i as f64 * 440.0 * std::f64::consts::TAU / rate as f64).sin()).collect();
    // Cheap deterministic "noise".
    let mut x: u32 = 12345;
    let noise: Vec<f64> = (0..3 * rate)
        .map(|_| {
            x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
            (x >> 16) as f64 / 32768.0 - 1.0
        })
        .collect();
    let signal = Waveform::new(tone, rate as u32);
    let noise = Waveform::new(noise, rate as u32);

    for level in [5.0, 10.0, 20.0] {
        let m = mix_at_snr(&signal, &noise, level, 7)?;
        let s = measure_rms(&signal)?;
        let residual: Vec<f64> = m.waveform.samples.iter().zip(&signal.samples).map(|(a, b)| a - b).collect();
        let n = measure_rms(&Waveform::new(residual, rate as u32))?;
        println!(
            "target {level:>4} dB  achieved {:6.2} dB  offset {:>6}  gain {:.4}  clipped {}",
            20.0 * (s / n).log10(),
            m.offset,
            m.gain,
            m.clipped
        );
    }
    Ok(())
}
