use std::sync::atomic::{AtomicUsize, Ordering};

use super::{PairPrediction, PredictorError, PredictorRequest, PredictorResponse, StereoPredictor, ViewInput};

/// Wraps a predictor and counts calls.
pub struct CountingPredictor<P> {
    inner: P,
    predict_calls: AtomicUsize,
    init_pair_calls: AtomicUsize,
}

impl<P: StereoPredictor> CountingPredictor<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, predict_calls: AtomicUsize::new(0), init_pair_calls: AtomicUsize::new(0) }
    }

    pub fn predict_calls(&self) -> usize {
        self.predict_calls.load(Ordering::SeqCst)
    }

    pub fn init_pair_calls(&self) -> usize {
        self.init_pair_calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: StereoPredictor> StereoPredictor for CountingPredictor<P> {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        self.init_pair_calls.fetch_add(1, Ordering::SeqCst);
        self.inner.init_pair(a, b)
    }

    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        self.predict_calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(req)
    }
}
