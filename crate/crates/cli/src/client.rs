//! Blocking client for the node's `/v1` API.

use std::time::{Duration, Instant};

use reqwest::blocking::{Client, Response};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use certchain_node::wire::{AccountResponse, SignatureHeaders};
use certchain_node::ApiError;

use crate::Failure;

pub struct NodeClient {
    base: String,
    http: Client,
}

impl NodeClient {
    pub fn new(base: &str) -> Self {
        Self {
            base: base.trim_end_matches('/').to_owned(),
            http: Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("http client"),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, Failure> {
        let resp = self.http.get(self.url(path)).send().map_err(connection)?;
        decode(resp)
    }

    pub fn post<T: DeserializeOwned>(
        &self,
        path: &str,
        headers: &SignatureHeaders,
        body: &impl Serialize,
    ) -> Result<T, Failure> {
        let mut req = self.http.post(self.url(path)).json(body);
        for (k, v) in headers.pairs() {
            req = req.header(k, v);
        }
        decode(req.send().map_err(connection)?)
    }

    pub fn account(&self, address: &str) -> Result<AccountResponse, Failure> {
        self.get(&format!("/v1/accounts/{address}"))
    }

    /// Polls a receipt until the transaction is in a block.
    pub fn wait_receipt(&self, txid: &str, timeout: Duration) -> Result<Value, Failure> {
        let deadline = Instant::now() + timeout;
        loop {
            match self.get::<Value>(&format!("/v1/receipts/{txid}")) {
                Err(Failure::Api(e)) if e.machine_code == "Pending" && Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(100));
                }
                other => return other,
            }
        }
    }
}

fn connection(e: reqwest::Error) -> Failure {
    Failure::Connection(e.to_string())
}

fn decode<T: DeserializeOwned>(resp: Response) -> Result<T, Failure> {
    let status = resp.status();
    let bytes = resp.bytes().map_err(connection)?;
    if status.is_success() {
        return serde_json::from_slice(&bytes)
            .map_err(|e| Failure::Connection(format!("unexpected response from node: {e}")));
    }
    Err(Failure::Api(serde_json::from_slice(&bytes).unwrap_or_else(|_| ApiError {
        http_status: status.as_u16(),
        machine_code: status.canonical_reason().unwrap_or("Error").to_owned(),
        message: String::from_utf8_lossy(&bytes).into_owned(),
    })))
}
