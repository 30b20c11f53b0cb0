use narrative_atlas::Error as CoreError;

/// Coarse failure class shared by exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad configuration or request shape.
    Invalid,
    NotFound,
    /// The program has no feasible solution under the requested parameters.
    Infeasible,
    /// Well-formed request whose inputs cannot produce a map.
    Unprocessable,
    Timeout,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Invalid | Kind::NotFound | Kind::Unprocessable => 2,
            Kind::Infeasible => 3,
            Kind::Timeout | Kind::Internal => 1,
        }
    }

    pub fn status(self) -> u16 {
        match self {
            Kind::Invalid => 400,
            Kind::NotFound => 404,
            Kind::Infeasible | Kind::Unprocessable => 422,
            Kind::Timeout => 503,
            Kind::Internal => 500,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Kind::Invalid => "invalid",
            Kind::NotFound => "not_found",
            Kind::Infeasible => "infeasible",
            Kind::Unprocessable => "unprocessable",
            Kind::Timeout => "timeout",
            Kind::Internal => "internal",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct AppError {
    pub kind: Kind,
    pub message: String,
    /// Violated constraint family, for infeasible programs.
    pub constraint_class: Option<String>,
}

impl AppError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        AppError {
            kind,
            message: message.into(),
            constraint_class: None,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        AppError::new(Kind::Invalid, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        AppError::new(Kind::NotFound, message)
    }

    /// Prefixes the message with the file it concerns.
    pub fn with_context(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            AppError::not_found(format!("file not found: {}", path.display()))
        } else {
            AppError::new(Kind::Internal, format!("{}: {e}", path.display()))
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let kind = match e.root() {
            OutOfRange { .. } | InvalidK(_) | InvalidWindow { .. } | InvalidClusterCount { .. } => {
                Kind::Invalid
            }
            UnknownCommunity(_) => Kind::NotFound,
            Io(io) if io.kind() == std::io::ErrorKind::NotFound => Kind::NotFound,
            Infeasible(_) => Kind::Infeasible,
            EmptyCorpus
            | CorruptSource { .. }
            | DuplicateId(_)
            | EmptyFilteredCorpus
            | Parse { .. }
            | InconsistentDimension { .. }
            | DegenerateEmbedding(_)
            | UnembeddedEvents(_)
            | InsufficientEvents(_)
            | EmptyMap { .. }
            | NoMainRoute => Kind::Unprocessable,
            _ => Kind::Internal,
        };
        let constraint_class = match e.root() {
            Infeasible(class) => Some(class.to_string()),
            _ => None,
        };
        AppError {
            kind,
            message: e.to_string(),
            constraint_class,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
