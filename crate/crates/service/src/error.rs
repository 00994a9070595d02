use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0} not found")]
    NotFound(String),

    #[error("{0}")]
    Unprocessable(String),

    #[error("{0}")]
    Conflict(String),

    #[error(transparent)]
    Core(#[from] seqnovelty::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        use seqnovelty::Error as E;
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Unprocessable(_) | ServiceError::Json(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Core(E::NotTotal { .. }) => StatusCode::CONFLICT,
            ServiceError::Core(E::Io(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Io(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(&self) -> serde_json::Value {
        let mut body = json!({ "error": self.to_string() });
        if let ServiceError::Core(seqnovelty::Error::NotTotal { missing, unknown }) = self {
            body["missing"] = json!(missing);
            body["unknown"] = json!(unknown);
        }
        body
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(self.body())).into_response()
    }
}
