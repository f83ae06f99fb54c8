//! With the cyclic prefix inserted and removed, the macro channel is diagonal in the DFT
//! basis and its diagonal is the DFT of the taps.

use muvfdm::channel::{build_macro_channel, ChannelRealization};
use muvfdm::experiments::trial::substream;
use muvfdm::matrix::{owner_of, subcarrier_masks};
use muvfdm::Dimensions;

fn main() -> muvfdm::Result<()> {
    for n in [16, 32, 64] {
        let dims = Dimensions { n, l: n / 4, m: 4, k: 1, gamma_tx: 4, gamma_rx: 1 };
        let real = ChannelRealization::draw(&mut substream(1, n, 0, 0), &dims);
        let h = build_macro_channel(&real.macro_links, &subcarrier_masks(n, dims.m)?, n)?;
        let mut off = 0.0;
        let mut diag_err: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    off += h[(r, c)].norm_sqr();
                }
            }
            let want = real.macro_links[owner_of(r, n, dims.m)].frequency_response(n)[r];
            diag_err = diag_err.max((h[(r, r)] - want).norm());
        }
        println!("N={n:3}: off-diagonal {:.2e}  diagonal vs DFT of taps {diag_err:.2e}", off.sqrt() / h.norm_l2());
    }
    Ok(())
}
