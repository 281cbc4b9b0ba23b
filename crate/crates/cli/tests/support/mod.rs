//! Helpers for driving the `nearme` binary: demo data, a spawned server
//! and a minimal HTTP/1.1 client.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use nearme_core::synthetic::{write_demo, DemoPaths};

pub fn nearme() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nearme"))
}

pub fn run(args: &[&str]) -> Output {
    nearme().args(args).output().expect("nearme runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Demo data in `dir` with the service bound to an ephemeral port.
pub fn demo(dir: &Path) -> DemoPaths {
    let p = write_demo(dir).unwrap();
    let text = std::fs::read_to_string(&p.config).unwrap();
    std::fs::write(&p.config, text.replace("127.0.0.1:8080", "127.0.0.1:0")).unwrap();
    p
}

pub fn data_flags(p: &DemoPaths) -> Vec<String> {
    let pairs: [(&str, &PathBuf); 6] = [
        ("--graph-nodes", &p.nodes),
        ("--graph-edges", &p.edges),
        ("--counties", &p.counties),
        ("--cases", &p.cases),
        ("--deaths", &p.deaths),
        ("--gazetteer", &p.gazetteer),
    ];
    pairs
        .iter()
        .flat_map(|(f, v)| [f.to_string(), v.display().to_string()])
        .collect()
}

pub struct Served {
    pub child: Child,
    pub addr: SocketAddr,
    log: mpsc::Receiver<String>,
}

impl Served {
    /// Starts `nearme serve` and waits for its listening line.
    pub fn start(config: &Path) -> Served {
        let mut child = nearme()
            .args(["serve", "--config"])
            .arg(config)
            .env("NEARME_LOG", "warn")
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let (tx, rx) = mpsc::channel();
        let err = child.stderr.take().unwrap();
        std::thread::spawn(move || {
            for line in BufReader::new(err).lines().map_while(Result::ok) {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        loop {
            let line = rx
                .recv_timeout(Duration::from_secs(30))
                .expect("server announces its address");
            if let Some(addr) = line.strip_prefix("nearme: listening on http://") {
                let addr = addr.parse().unwrap();
                return Served { child, addr, log: rx };
            }
        }
    }

    pub fn signal(&self, name: &str) {
        let ok = Command::new("kill")
            .args([format!("-{name}"), self.child.id().to_string()])
            .status()
            .unwrap()
            .success();
        assert!(ok, "kill -{name} failed");
    }

    pub fn wait(&mut self) -> std::process::ExitStatus {
        for _ in 0..300 {
            if let Some(s) = self.child.try_wait().unwrap() {
                return s;
            }
            std::thread::sleep(Duration::from_millis(50));
        }
        self.child.kill().ok();
        panic!("server did not exit");
    }

    /// SIGKILL on Unix: no shutdown path runs.
    pub fn kill(&mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One request on a fresh connection; `None` if the server is unreachable
/// or closes without a full response.
pub fn try_http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> Option<(u16, String)> {
    let mut s = TcpStream::connect_timeout(&addr, Duration::from_secs(5)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(30))).ok()?;
    let body = body.unwrap_or("");
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).ok()?;
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).ok()?;
    let text = String::from_utf8(raw).ok()?;
    let (head, rest) = text.split_once("\r\n\r\n")?;
    let status = head.split_whitespace().nth(1)?.parse().ok()?;
    let chunked = head.lines().any(|l| l.eq_ignore_ascii_case("transfer-encoding: chunked"));
    let body = if chunked { dechunk(rest)? } else { rest.to_string() };
    Some((status, body))
}

pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    try_http(addr, method, path, body).expect("http request")
}

fn dechunk(mut s: &str) -> Option<String> {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n")?;
        let n = usize::from_str_radix(size.trim(), 16).ok()?;
        if n == 0 {
            return Some(out);
        }
        out.push_str(rest.get(..n)?);
        s = rest.get(n + 2..)?;
    }
}

/// Commit lines in a log file, counted without the library.
pub fn replay_commits(log: &Path) -> usize {
    std::fs::read_to_string(log)
        .unwrap_or_default()
        .lines()
        .filter(|l| serde_json::from_str::<serde_json::Value>(l).is_ok_and(|v| v["kind"] == "commit"))
        .count()
}
