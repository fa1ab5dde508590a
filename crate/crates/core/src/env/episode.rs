use alloc::sync::Arc;
use alloc::vec::Vec;

use super::action::ActionSpec;
use super::encode::{display_vec_len, encode_display};
use crate::tabular::{Dataset, Display};
use crate::{Error, Result};

/// A display together with its cached encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub display: Display,
    pub encoding: Vec<f64>,
}

impl Frame {
    pub fn new(display: Display, base: &Dataset) -> Self {
        let encoding = encode_display(&display, base);
        Self { display, encoding }
    }
}

/// Mutable state of one session.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    stack: Vec<Arc<Frame>>,
    history: Vec<Arc<Frame>>,
    actions: Vec<ActionSpec>,
    horizon: usize,
    done: bool,
}

impl EpisodeState {
    pub fn new(base: &Dataset, horizon: usize) -> Self {
        let root = Arc::new(Frame::new(Display::initial(base), base));
        Self {
            stack: alloc::vec![root.clone()],
            history: alloc::vec![root],
            actions: Vec::new(),
            horizon: horizon.max(1),
            done: false,
        }
    }

    pub fn current(&self) -> &Display {
        &self.stack.last().expect("stack never empty").display
    }

    pub fn current_frame(&self) -> &Arc<Frame> {
        self.stack.last().expect("stack never empty")
    }

    pub fn initial(&self) -> &Display {
        &self.stack[0].display
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Every current display so far, oldest first, starting with the
    /// initial display.
    pub fn history(&self) -> &[Arc<Frame>] {
        &self.history
    }

    pub fn actions(&self) -> &[ActionSpec] {
        &self.actions
    }

    pub fn step_count(&self) -> usize {
        self.actions.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Apply one action. BACK on the initial display leaves the stack as is
    /// but is still recorded. Reaching the horizon ends the episode.
    pub fn step(&mut self, base: &Dataset, action: &ActionSpec) -> Result<()> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        match action {
            ActionSpec::Filter(p) => {
                let next = self.current().apply_filter(base, p)?;
                self.push(Frame::new(next, base));
            }
            ActionSpec::Group(g) => {
                let next = self.current().apply_group(base, g)?;
                self.push(Frame::new(next, base));
            }
            ActionSpec::Back => {
                if self.stack.len() > 1 {
                    self.stack.pop();
                }
                self.history.push(self.current_frame().clone());
            }
            ActionSpec::Stop => self.done = true,
        }
        self.actions.push(action.clone());
        if self.actions.len() >= self.horizon {
            self.done = true;
        }
        Ok(())
    }

    fn push(&mut self, frame: Frame) {
        let frame = Arc::new(frame);
        self.stack.push(frame.clone());
        self.history.push(frame);
    }

    /// Encodings of the last three current displays, zero-padded in front
    /// when fewer have been seen.
    pub fn encode_state(&self) -> Vec<f64> {
        let block = self.current_frame().encoding.len();
        let mut out = alloc::vec![0.0; 3 * block];
        let recent = &self.history[self.history.len().saturating_sub(3)..];
        let skip = 3 - recent.len();
        for (i, frame) in recent.iter().enumerate() {
            out[(skip + i) * block..(skip + i + 1) * block].copy_from_slice(&frame.encoding);
        }
        out
    }

    /// Length of [`Self::encode_state`] for `base`.
    pub fn state_len(base: &Dataset) -> usize {
        3 * display_vec_len(base.width())
    }
}
