//! Builds the inner precoder of every small-cell chain and shows that nothing it sends
//! reaches the macro users.
//!
//! cargo run --release --example null_space_precoder

use muvfdm::channel::{AggregateChannels, ChannelRealization};
use muvfdm::experiments::trial::substream;
use muvfdm::matrix::{distance, identity};
use muvfdm::precoder::InnerPrecoder;
use muvfdm::Dimensions;

fn main() -> muvfdm::Result<()> {
    let dims = Dimensions { n: 32, l: 8, m: 4, k: 3, gamma_tx: 4, gamma_rx: 1 };
    let real = ChannelRealization::draw(&mut substream(7, 0, 0, 0), &dims);
    let channels = AggregateChannels::build(&real)?;
    let inner = InnerPrecoder::from_cross_blocks(&channels.cross_blocks)?;

    println!("{} chains, each block {}x{}", inner.blocks.len(), inner.blocks[0].nrows(), inner.blocks[0].ncols());
    for (c, (h, e)) in channels.cross_blocks.iter().zip(&inner.blocks).enumerate().take(4) {
        let leak = (h * e).norm_l2() / h.norm_l2();
        let gram = distance((e.adjoint() * e).as_ref(), identity(e.ncols()).as_ref());
        println!("chain {c}: ||H E||/||H|| = {leak:.2e}   ||E^H E - I|| = {gram:.2e}");
    }
    let e = inner.matrix();
    println!("whole tier: ||H_sm E|| / ||H_sm|| = {:.2e}", (&channels.cross * &e).norm_l2() / channels.cross.norm_l2());
    Ok(())
}
