//! Subnormal floats take a microcode assist on x86 and make matrix products
//! tens of times slower. Once a trained policy grows sharp, softmax tails and
//! their gradients underflow into that range, so network passes run with
//! flush-to-zero and denormals-are-zero set.

/// Sets FTZ and DAZ on the current thread until dropped, then restores the
/// previous control word.
pub(crate) struct FlushSubnormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

#[cfg(target_arch = "x86_64")]
const FTZ_DAZ: u32 = 0x8040;

impl FlushSubnormals {
    #[cfg(target_arch = "x86_64")]
    pub(crate) fn new() -> Self {
        let saved = read_mxcsr();
        write_mxcsr(saved | FTZ_DAZ);
        Self { saved }
    }

    #[cfg(not(target_arch = "x86_64"))]
    pub(crate) fn new() -> Self {
        Self {}
    }
}

#[cfg(target_arch = "x86_64")]
impl Drop for FlushSubnormals {
    fn drop(&mut self) {
        write_mxcsr(self.saved);
    }
}

#[cfg(target_arch = "x86_64")]
fn read_mxcsr() -> u32 {
    let mut v: u32 = 0;
    // SAFETY: stmxcsr stores the SSE control word into the given location.
    unsafe { std::arch::asm!("stmxcsr [{}]", in(reg) &mut v, options(nostack, preserves_flags)) };
    v
}

#[cfg(target_arch = "x86_64")]
fn write_mxcsr(v: u32) {
    // SAFETY: only rounding/flush mode bits change; exception masks are kept.
    unsafe { std::arch::asm!("ldmxcsr [{}]", in(reg) &v, options(nostack, readonly, preserves_flags)) };
}

#[cfg(all(test, target_arch = "x86_64"))]
mod tests {
    use super::*;

    #[test]
    fn flushes_inside_and_restores_after() {
        let before = read_mxcsr();
        let product = || std::hint::black_box(1e-30f32) * std::hint::black_box(1e-10f32);
        {
            let _g = FlushSubnormals::new();
            assert_eq!(product(), 0.0);
        }
        assert_eq!(read_mxcsr(), before);
        assert!(product() > 0.0);
    }
}
