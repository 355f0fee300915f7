use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] coboson::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A verification or oracle comparison came out negative.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use coboson::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::OracleCap { .. }) => 4,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(E::InvalidInput(_) | E::Parse { .. }) => 2,
            CliError::Core(_) | CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        use coboson::Error as E;
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(E::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(E::Range { k: 3 }).exit_code(), 3);
        assert_eq!(CliError::from(E::VanishingState { n: 3, rank: 2 }).exit_code(), 3);
        let cap = E::OracleCap {
            s: 20,
            n: 3,
            max_s: 14,
            max_n: 6,
        };
        assert_eq!(CliError::from(cap).exit_code(), 4);
        assert_eq!(CliError::from(std::io::Error::other("x")).exit_code(), 1);
    }
}
