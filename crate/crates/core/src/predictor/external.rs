use std::io::{BufReader, BufWriter, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use super::wire::WireClient as Client;
use super::{PairPrediction, PredictorError, PredictorRequest, PredictorResponse, StereoPredictor, ViewInput};

type BoxedClient = Client<Box<dyn Read + Send>, Box<dyn Write + Send>>;

/// Predictor served by another process over the frame protocol. Calls from
/// concurrent threads are serialized on the single connection.
pub struct ExternalPredictor {
    client: Mutex<BoxedClient>,
    child: Option<Child>,
}

impl ExternalPredictor {
    /// Spawns `program` and handshakes over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, PredictorError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PredictorError::Protocol(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match Self::from_streams(BufReader::new(stdout), BufWriter::new(stdin)) {
            Ok(mut p) => {
                p.child = Some(child);
                Ok(p)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    pub fn from_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
    ) -> Result<Self, PredictorError> {
        let client = Client::connect(Box::new(reader) as Box<dyn Read + Send>, Box::new(writer) as Box<dyn Write + Send>)?;
        Ok(Self { client: Mutex::new(client), child: None })
    }

    fn with_client<T>(&self, f: impl FnOnce(&mut BoxedClient) -> Result<T, PredictorError>) -> Result<T, PredictorError> {
        let mut guard = self.client.lock().map_err(|_| PredictorError::Protocol("connection poisoned".into()))?;
        f(&mut guard)
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl StereoPredictor for ExternalPredictor {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        self.with_client(|c| c.init_pair(a, b))
    }

    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        req.validate()?;
        self.with_client(|c| c.predict(req))
    }
}
