// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::{hex_decode, Address, TransactionStub};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("rpc error {code}: {message}")]
    RpcError { code: i64, message: String },
    #[error("account has no code")]
    EmptyCode,
    #[error("malformed rpc response: {0}")]
    Malformed(String),
}

#[derive(Deserialize)]
struct RpcErrorBody {
    code: i64,
    message: String,
}

#[derive(Deserialize)]
struct RpcResponse {
    #[serde(default)]
    result: Option<Value>,
    #[serde(default)]
    error: Option<RpcErrorBody>,
}

/// Minimal blocking JSON-RPC client.
pub struct RpcClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl RpcClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build();
        RpcClient { endpoint: endpoint.into(), agent: config.into() }
    }

    /// Sends one request and returns its `result`. The whole body is read
    /// before anything is parsed.
    pub fn call(&self, method: &str, params: Value) -> Result<Value, FetchError> {
        let req = json!({"jsonrpc": "2.0", "id": 1, "method": method, "params": params});
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(&req)
            .map_err(|e| FetchError::NetworkError(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| FetchError::NetworkError(e.to_string()))?;
        let parsed: RpcResponse = match serde_json::from_str(&body) {
            Ok(p) => p,
            Err(_) if !status.is_success() => return Err(FetchError::NetworkError(format!("HTTP {status}"))),
            Err(e) => return Err(FetchError::Malformed(e.to_string())),
        };
        if let Some(err) = parsed.error {
            return Err(FetchError::RpcError { code: err.code, message: err.message });
        }
        parsed.result.ok_or_else(|| FetchError::Malformed("missing result".into()))
    }

    pub fn get_code(&self, address: &Address) -> Result<Vec<u8>, FetchError> {
        let result = self.call("eth_getCode", json!([address.to_string(), "latest"]))?;
        let text = result.as_str().ok_or_else(|| FetchError::Malformed("result is not a string".into()))?;
        let code = hex_decode(text).map_err(|e| FetchError::Malformed(e.to_string()))?;
        if code.is_empty() {
            return Err(FetchError::EmptyCode);
        }
        Ok(code)
    }

    pub fn get_transaction(&self, hash: &[u8; 32]) -> Result<TransactionStub, FetchError> {
        let result = self.call("eth_getTransactionByHash", json!([format!("0x{}", ::hex::encode(hash))]))?;
        if result.is_null() {
            return Err(FetchError::Malformed("unknown transaction".into()));
        }
        let field = |k: &str| result.get(k).and_then(Value::as_str);
        let to = match field("to") {
            Some(t) => Some(t.parse::<Address>().map_err(|e| FetchError::Malformed(e.to_string()))?),
            None => None,
        };
        let input = hex_decode(field("input").unwrap_or("")).map_err(|e| FetchError::Malformed(e.to_string()))?;
        Ok(TransactionStub { hash: *hash, to, input })
    }
}

/// `eth_getCode(address, "latest")` against `endpoint`.
pub fn fetch_bytecode(endpoint: &str, address: &Address) -> Result<Vec<u8>, FetchError> {
    RpcClient::new(endpoint).get_code(address)
}

pub fn fetch_transaction(endpoint: &str, hash: &[u8; 32]) -> Result<TransactionStub, FetchError> {
    RpcClient::new(endpoint).get_transaction(hash)
}
