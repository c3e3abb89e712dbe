//! Both roles in one process, connected by a channel pair.

use fairgate_core::data::{Dataset, Profile};
use fairgate_fhe::KeySet;

use crate::comp::{run_comp, CompContext, CompReport, Flagger};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::fsm::Role;
use crate::link::{Link, Transcript};
use crate::ml::{run_ml, MlSummary};
use crate::policy::RecodePolicy;
use crate::transport::{channel_pair, Tapped};

pub struct LocalSession {
    pub comp: Result<CompReport>,
    pub ml: Result<MlSummary>,
    pub comp_transcript: Transcript,
    pub ml_transcript: Transcript,
    /// Every byte the ML side received.
    pub ml_received: Vec<u8>,
}

pub fn run_in_process(
    config: &SessionConfig,
    keys: &KeySet,
    dataset: &Dataset,
    profile: &Profile,
    policy: &RecodePolicy,
    flagger: &mut dyn Flagger,
) -> LocalSession {
    let (comp_end, ml_end) = channel_pair();
    let (ml_end, tap) = Tapped::new(ml_end);
    std::thread::scope(|s| {
        let ml = s.spawn(|| {
            let mut link = Link::new(Role::Ml, ml_end).with_max_payload(config.max_payload);
            let r = run_ml(&mut link, config);
            (r, link.transcript().clone())
        });
        let (comp, comp_transcript) = {
            let mut link = Link::new(Role::Comp, comp_end).with_max_payload(config.max_payload);
            let mut ctx = CompContext::new(keys, config);
            let r = run_comp(&mut link, dataset, profile, policy, &mut ctx, flagger);
            (r, link.transcript().clone())
            // the link drops here, so a stuck ML sees the disconnect
        };
        let (ml, ml_transcript) = ml.join().expect("ml thread panicked");
        LocalSession { comp, ml, comp_transcript, ml_transcript, ml_received: tap.received_bytes() }
    })
}
