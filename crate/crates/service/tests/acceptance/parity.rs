use serde_json::json;

use crate::common::{create, get, pinned_digest, wait_terminal, TestServer};
use crate::end_to_end::CliRun;
use crate::{oracle, Outcome};

pub fn criterion(cli: &CliRun) -> Outcome {
    let cli_digest = oracle::sha256_hex(&cli.package_bytes);

    let server = TestServer::replay();
    let id = create(&server, json!({}));
    let snap = wait_terminal(&server, &id);
    let pkg = get(&server.url(&format!("/sessions/{id}/artifacts/package")));
    let api_digest = oracle::sha256_hex(pkg.body.as_bytes());
    let header = pkg.header("x-package-digest").unwrap_or_default();

    let pass = pkg.status == 200
        && snap["phase"] == "CONFIRMED"
        && api_digest == cli_digest
        && header == cli_digest
        && cli_digest == pinned_digest()
        && pkg.body.as_bytes() == cli.package_bytes.as_slice();
    Outcome::check(
        pass,
        format!(
            "cli {}… api {}… header {}…",
            &cli_digest[..12.min(cli_digest.len())],
            &api_digest[..12.min(api_digest.len())],
            &header[..12.min(header.len())]
        ),
    )
}
