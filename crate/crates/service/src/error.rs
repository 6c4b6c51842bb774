use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("a training job is already running")]
    Busy,
    #[error(transparent)]
    Core(#[from] hetmatch::Error),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        use hetmatch::Error as E;
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Busy => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(e) => match e {
                E::NotFound { .. } => StatusCode::NOT_FOUND,
                E::EmptyDataset => StatusCode::UNPROCESSABLE_ENTITY,
                E::Config(_) | E::Dimension { .. } | E::Parse { .. } | E::Json(_) => {
                    StatusCode::BAD_REQUEST
                }
                E::NonFinite { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                E::DuplicateDocument(_) | E::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (
            status,
            Json(serde_json::json!({ "error": self.to_string() })),
        )
            .into_response()
    }
}
