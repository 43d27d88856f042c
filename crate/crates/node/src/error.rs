use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use certchain_core::ledger::Rejection;
use certchain_core::RevertReason;

/// Error body returned by every endpoint:
/// `{"http_status": 403, "machine_code": "NotAdmin", "message": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub machine_code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            http_status: status.as_u16(),
            machine_code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MalformedRequest", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

pub fn revert_status(reason: RevertReason) -> StatusCode {
    match reason {
        RevertReason::NotAdmin | RevertReason::IssuerNotAuthorized => StatusCode::FORBIDDEN,
        RevertReason::InvalidParameters => StatusCode::BAD_REQUEST,
        RevertReason::UnknownIssuer => StatusCode::NOT_FOUND,
        RevertReason::DuplicateCertificate | RevertReason::CounterOverflow | RevertReason::AlreadyAuthorized => {
            StatusCode::CONFLICT
        }
    }
}

pub fn rejection_status(rejection: &Rejection) -> StatusCode {
    match rejection {
        Rejection::BadSignature => StatusCode::FORBIDDEN,
        Rejection::InvalidParameters => StatusCode::BAD_REQUEST,
        Rejection::InsufficientBalance { .. } => StatusCode::PAYMENT_REQUIRED,
        Rejection::DuplicateTransaction | Rejection::StaleNonce { .. } | Rejection::FutureNonce { .. } => {
            StatusCode::CONFLICT
        }
    }
}

impl From<RevertReason> for ApiError {
    fn from(reason: RevertReason) -> Self {
        let message = match reason {
            RevertReason::NotAdmin => "only the admin may manage issuers",
            RevertReason::IssuerNotAuthorized => "issuer not authorized",
            RevertReason::DuplicateCertificate => "duplicate certificate",
            RevertReason::InvalidParameters => "invalid certificate parameters",
            RevertReason::CounterOverflow => "certificate counter would overflow",
            RevertReason::AlreadyAuthorized => "issuer already authorized",
            RevertReason::UnknownIssuer => "unknown issuer",
        };
        ApiError::new(revert_status(reason), reason.code(), message)
    }
}

impl From<&Rejection> for ApiError {
    fn from(rejection: &Rejection) -> Self {
        ApiError::new(rejection_status(rejection), rejection.code(), rejection.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_contract_and_chain_failure_is_a_distinct_client_error() {
        let mut codes = HashSet::new();
        for reason in RevertReason::ALL {
            let e = ApiError::from(reason);
            assert!(e.status().is_client_error(), "{reason:?}");
            assert!(codes.insert(e.machine_code));
        }
        let rejections = [
            Rejection::BadSignature,
            Rejection::DuplicateTransaction,
            Rejection::StaleNonce { expected: 1, got: 0 },
            Rejection::FutureNonce { expected: 1, got: 2 },
            Rejection::InsufficientBalance { fee: 1, balance: 0 },
        ];
        for r in &rejections {
            let e = ApiError::from(r);
            assert!(e.status().is_client_error(), "{r:?}");
            assert!(codes.insert(e.machine_code));
        }
        // shared with the contract-level code on purpose
        assert_eq!(ApiError::from(&Rejection::InvalidParameters).machine_code, "InvalidParameters");
    }
}
