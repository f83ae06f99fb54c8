//! Pushes random symbols through both tiers at once. With the cascaded precoder the macro
//! users receive exactly their own signal; a random precoder of the same energy does not.

use faer::{c64, Mat};
use muvfdm::channel::{complex_gaussian, AggregateChannels, ChannelRealization};
use muvfdm::experiments::trial::substream;
use muvfdm::metrics::{signal_path_check, PowerProfile};
use muvfdm::precoder::{effective_channel, normalize_cascade, ribf_outer, InnerPrecoder};
use muvfdm::Dimensions;

fn main() -> muvfdm::Result<()> {
    let dims = Dimensions { n: 32, l: 8, m: 4, k: 3, gamma_tx: 4, gamma_rx: 1 };
    let profile = PowerProfile::from_snr_db(10.0, dims.k)?;
    let mut rng = substream(3, 0, 0, 0);
    let real = ChannelRealization::draw(&mut rng, &dims);
    let channels = AggregateChannels::build(&real)?;
    let inner = InnerPrecoder::from_cross_blocks(&channels.cross_blocks)?;
    let h_bar = effective_channel(channels.small.as_ref(), &inner)?;
    let outer = ribf_outer(h_bar.as_ref(), profile.noise_to_small_power())?;
    let w = normalize_cascade(&inner, outer.as_ref())?.transmit;

    let cascade = signal_path_check(&channels, w.as_ref(), &mut rng)?;
    let mut random = Mat::from_fn(w.nrows(), w.ncols(), |_, _| complex_gaussian(&mut rng, 1.0));
    let scale = 1.0 / random.norm_l2();
    random *= faer::Scale(c64::new(scale, 0.0));
    let control = signal_path_check(&channels, random.as_ref(), &mut rng)?;

    println!("cascade: macro residual {:.2e}, small-cell gain {:.3}", cascade.macro_residual, cascade.small_gain);
    println!("random:  macro residual {:.2e}, small-cell gain {:.3}", control.macro_residual, control.small_gain);
    Ok(())
}
