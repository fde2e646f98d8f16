//! Error classification for exit codes: 1 usage, 2 data, 3 numerical.

use std::fmt;

use persona_graph::corpus::CorpusError;
use persona_graph::features::FeatureError;
use persona_graph::graph::GraphError;
use persona_graph::model::ModelError;
use persona_graph::synth::SynthError;
use persona_graph::train::TrainError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        match e {
            CorpusError::FractionOutOfRange(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> CliError {
        match e {
            FeatureError::InvalidMinDf => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> CliError {
        match e {
            GraphError::KOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> CliError {
        match e {
            ModelError::NonFinite(_) => CliError::Numerical(e.to_string()),
            ModelError::InvalidConfig(_) | ModelError::LambdaOutOfRange(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> CliError {
        match e {
            TrainError::Diverged { .. } => CliError::Numerical(e.to_string()),
            TrainError::Model(m) => m.into(),
            TrainError::Corpus(c) => c.into(),
            TrainError::Feature(f) => f.into(),
            TrainError::Graph(g) => g.into(),
            TrainError::Metrics(m) => CliError::Data(m.to_string()),
            TrainError::InvalidInput(m) => CliError::Data(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}
